#pragma once

// JSON and CSV serialization for matrices, certificates, plants, gains and
// traces.
//
// Matrix:      {"rows": r, "cols": c, "data": [row-major]}  or  {"diag": [...]}
// Certificate: {"condition": "FR/CT/MONE", "rate": x, "W": M, "P": M, "Q": M, "margin": x}
// Plant:       {"W": M, "B": M, "C": M, "delta": x}
// Gain:        {"K": M, "P": M, "Q": M, "Y": M, "rate": x, "margin": x}

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "contractnet/conditions.hpp"
#include "contractnet/dynamics.hpp"
#include "contractnet/integral_control.hpp"
#include "contractnet/matrix.hpp"
#include "contractnet/parameterization.hpp"

namespace contractnet::io {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Writes through a temporary file and renames, so readers never see a
/// partial file.
inline void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::ParseError, "cannot write " + path);
    out << bytes;
    require(out.good(), ErrorCode::ParseError, "cannot write " + path);
  }
  std::filesystem::rename(tmp, path);
}

inline Json parse_json(const std::string& text, const std::string& what = "input") {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, what + ": " + e.what());
  }
}

/// A JSON input named "path" or "path#/json/pointer"; the hash covers the
/// whole file.
struct JsonInput {
  std::string path;
  std::string hash;
  Json value;
};

inline JsonInput load_json(const std::string& spec) {
  const auto hash_pos = spec.find('#');
  const std::string path = spec.substr(0, hash_pos);
  const std::string bytes = read_file(path);
  Json doc = parse_json(bytes, path);
  if (hash_pos != std::string::npos) {
    const std::string ptr = spec.substr(hash_pos + 1);
    try {
      doc = Json(doc.at(Json::json_pointer(ptr)));
    } catch (const Json::exception& e) {
      fail(ErrorCode::ParseError, spec + ": " + e.what());
    }
  }
  return {spec, fnv1a(bytes), std::move(doc)};
}

namespace detail {

inline double number(const Json& j, const std::string& what) {
  require(j.is_number(), ErrorCode::ParseError, what + " must be a number");
  const double v = j.get<double>();
  require(std::isfinite(v), ErrorCode::ParseError, what + " is not finite");
  return v;
}

inline std::size_t count(const Json& j, const std::string& what) {
  require(j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0), ErrorCode::ParseError,
          what + " must be a non-negative integer");
  return j.get<std::size_t>();
}

inline const Json& field(const Json& j, const std::string& key) {
  require(j.is_object(), ErrorCode::ParseError, "expected an object with \"" + key + "\"");
  const auto it = j.find(key);
  require(it != j.end(), ErrorCode::ParseError, "missing field \"" + key + "\"");
  return *it;
}

}  // namespace detail

inline Vector vector_from_json(const Json& j, const std::string& what = "vector") {
  require(j.is_array(), ErrorCode::ParseError, what + " must be an array");
  Vector v;
  v.reserve(j.size());
  for (const Json& x : j) v.push_back(detail::number(x, what + " entry"));
  return v;
}

inline Json to_json(const Vector& v) { return Json(v); }

inline Matrix matrix_from_json(const Json& j) {
  require(j.is_object(), ErrorCode::ParseError, "matrix must be an object");
  if (j.contains("diag")) return Matrix::diagonal(vector_from_json(j["diag"], "diag"));
  const std::size_t rows = detail::count(detail::field(j, "rows"), "rows");
  const std::size_t cols = detail::count(detail::field(j, "cols"), "cols");
  const Vector data = vector_from_json(detail::field(j, "data"), "data");
  require(data.size() == rows * cols, ErrorCode::ParseError,
          "data has " + std::to_string(data.size()) + " entries, expected " + std::to_string(rows * cols));
  return Matrix(rows, cols, data);
}

inline Json to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", Vector(m.data().begin(), m.data().end())}};
}

inline Json to_json(const SymMatrix& m) { return to_json(m.matrix()); }
inline Json to_json(const DiagMatrix& m) { return Json{{"diag", m.diag()}}; }

inline DiagMatrix diag_from_json(const Json& j) {
  const Matrix m = matrix_from_json(j);
  require(m.is_square(), ErrorCode::ParseError, "Q must be square");
  Vector d(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < m.cols(); ++k) {
      if (i == k) d[i] = m(i, i);
      else require(m(i, k) == 0.0, ErrorCode::ParseError, "Q must be diagonal");
    }
  return DiagMatrix(d);
}

inline ConditionId condition_from_string(const std::string& s) {
  for (const ConditionId& c : kAllConditions)
    if (c.name() == s) return c;
  fail(ErrorCode::ParseError, "unknown condition \"" + s + "\"");
}

inline Rate rate_for(const ConditionId& cond, double value) {
  return cond.time == TimeDomain::Continuous ? Rate::ct(value) : Rate::dt(value);
}

inline Json to_json(const Certificate& c) {
  return Json{{"condition", c.cond.name()}, {"rate", c.rate.value}, {"W", to_json(c.w)},
              {"P", to_json(c.p)},          {"Q", to_json(c.q)},     {"margin", c.margin}};
}

inline Certificate certificate_from_json(const Json& j) {
  require(detail::field(j, "condition").is_string(), ErrorCode::ParseError, "condition must be a string");
  Certificate c;
  c.cond = condition_from_string(j["condition"].get<std::string>());
  c.rate = rate_for(c.cond, detail::number(detail::field(j, "rate"), "rate"));
  c.w = matrix_from_json(detail::field(j, "W"));
  c.p = SymMatrix(matrix_from_json(detail::field(j, "P")));
  c.q = diag_from_json(detail::field(j, "Q"));
  c.margin = j.contains("margin") ? detail::number(j["margin"], "margin") : 0.0;
  require(c.w.is_square() && c.p.size() == c.w.rows() && c.q.size() == c.w.rows(), ErrorCode::DimensionMismatch,
          "W, P, Q sizes differ");
  return c;
}

inline Json to_json(const PlantModel& p) {
  return Json{{"W", to_json(p.w)}, {"B", to_json(p.b)}, {"C", to_json(p.c)}, {"delta", p.delta}};
}

inline PlantModel plant_from_json(const Json& j) {
  PlantModel p;
  p.w = matrix_from_json(detail::field(j, "W"));
  p.b = matrix_from_json(detail::field(j, "B"));
  p.c = matrix_from_json(detail::field(j, "C"));
  p.delta = j.contains("delta") ? detail::number(j["delta"], "delta") : 1.0;
  validate(p);
  return p;
}

inline Json to_json(const GainResult& g) {
  return Json{{"K", to_json(g.k)}, {"P", to_json(g.p)},     {"Q", to_json(g.q)},
              {"Y", to_json(g.y)}, {"rate", g.rate}, {"margin", g.margin}};
}

inline GainResult gain_from_json(const Json& j) {
  GainResult g;
  g.k = matrix_from_json(detail::field(j, "K"));
  g.p = SymMatrix(matrix_from_json(detail::field(j, "P")));
  g.q = j.contains("Q") ? diag_from_json(j["Q"]) : DiagMatrix();
  g.y = j.contains("Y") ? matrix_from_json(j["Y"]) : g.p.matrix() * g.k;
  g.rate = detail::number(detail::field(j, "rate"), "rate");
  g.margin = j.contains("margin") ? detail::number(j["margin"], "margin") : 0.0;
  require(g.k.rows() == g.p.size(), ErrorCode::DimensionMismatch, "K and P sizes differ");
  return g;
}

inline Json to_json(const ParamSeed& s) {
  return Json{{"d", s.d}, {"S", to_json(s.s)}, {"V", to_json(s.v)}, {"c", s.c}};
}

inline ParamSeed seed_from_json(const Json& j) {
  ParamSeed s{vector_from_json(detail::field(j, "d"), "d"), matrix_from_json(detail::field(j, "S")),
              matrix_from_json(detail::field(j, "V")), detail::number(detail::field(j, "c"), "c")};
  validate(s);
  return s;
}

inline Activation activation_from_string(const std::string& name, double delta = 1.0) {
  if (name == "tanh") return Activation::tanh();
  if (name == "relu") return Activation::relu();
  if (name == "sigmoid") return Activation::sigmoid();
  if (name == "identity") return Activation::identity();
  if (name == "blend") return Activation::blend(delta);
  fail(ErrorCode::ParseError, "unknown activation \"" + name + "\"");
}

/// Shortest decimal that round-trips, so CSV files are stable byte for byte.
inline std::string format_number(double x) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Header: t, x0..x{n-1}, then u0.. and y0.. when the trace records them.
inline std::string trace_csv(const SimTrace& tr, const std::string& state_prefix = "x") {
  std::ostringstream os;
  const std::size_t n = tr.states.empty() ? 0 : tr.states[0].size();
  const std::size_t m = tr.inputs.empty() ? 0 : tr.inputs[0].size();
  const std::size_t p = tr.outputs.empty() ? 0 : tr.outputs[0].size();
  os << "t";
  for (std::size_t i = 0; i < n; ++i) os << ',' << state_prefix << i;
  for (std::size_t i = 0; i < m; ++i) os << ",u" << i;
  for (std::size_t i = 0; i < p; ++i) os << ",y" << i;
  os << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << format_number(tr.times[k]);
    for (double v : tr.states[k]) os << ',' << format_number(v);
    if (m)
      for (double v : tr.inputs[k]) os << ',' << format_number(v);
    if (p)
      for (double v : tr.outputs[k]) os << ',' << format_number(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace contractnet::io
