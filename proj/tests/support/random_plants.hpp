#pragma once

#include "support/random_instances.hpp"
