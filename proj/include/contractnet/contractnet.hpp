#pragma once

#include "contractnet/conditions.hpp"
#include "contractnet/dynamics.hpp"
#include "contractnet/error.hpp"
#include "contractnet/feasibility.hpp"
#include "contractnet/integral_control.hpp"
#include "contractnet/io.hpp"
#include "contractnet/linalg.hpp"
#include "contractnet/matrix.hpp"
#include "contractnet/multipliers.hpp"
#include "contractnet/parameterization.hpp"
#include "contractnet/rng.hpp"
#include "contractnet/sampling.hpp"
#include "contractnet/sdp.hpp"
#include "contractnet/structure.hpp"
