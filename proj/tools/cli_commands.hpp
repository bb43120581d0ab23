#pragma once

// Command implementations for the contractnet tool. run_cli parses argv-style
// arguments and writes the JSON report to `out` (or --out), diagnostics to `err`.
//
// Exit codes: 0 success, 2 negative result (not found, not tracked, failed
// re-check), 1 usage or IO error.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "contractnet/contractnet.hpp"

namespace contractnet::cli {

using io::Json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNegative = 2;
inline constexpr const char* kTolEnv = "CONTRACTION_CERT_TOL";

/// Error codes that describe a negative answer rather than bad input.
inline bool is_negative(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::NoConvergence:
    case ErrorCode::NonFiniteState:
    case ErrorCode::ReCheckFailed:
    case ErrorCode::SlopeBoundViolated:
    case ErrorCode::InfeasibleAtAllRates:
    case ErrorCode::DegenerateTraces:
    case ErrorCode::DegenerateRate:
    case ErrorCode::RankDeficient:
    case ErrorCode::SingularP:
    case ErrorCode::SingularA:
    case ErrorCode::AlphaOutOfRange:
    case ErrorCode::NoRealRoot:
      return true;
    default:
      return false;
  }
}

namespace detail {

struct Context {
  std::uint64_t seed = 0;
  std::optional<double> tol;  ///< --tol, else CONTRACTION_CERT_TOL
  Json report;
  std::ostream* err = nullptr;
};

inline Json base_report(const std::string& command, std::uint64_t seed) {
  return Json{{"command", command}, {"inputs", Json::array()}, {"condition", nullptr},
              {"rate", nullptr},    {"status", ""},              {"margin", nullptr},
              {"certificate", nullptr}, {"diagnostics", Json::object()}, {"seed", seed},
              {"version", io::kVersion}};
}

inline io::JsonInput input(Context& ctx, const std::string& spec) {
  io::JsonInput in = io::load_json(spec);
  ctx.report["inputs"].push_back(Json{{"path", in.path}, {"fnv1a", in.hash}});
  return in;
}

inline std::optional<double> env_tol() {
  const char* v = std::getenv(kTolEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const double t = std::strtod(v, &end);
  require(end != v && *end == '\0' && std::isfinite(t), ErrorCode::InvalidArgument,
          std::string(kTolEnv) + " is not a number");
  return t;
}

inline ConditionId condition_from_flags(const std::string& arch, const std::string& time, const std::string& nl) {
  return io::condition_from_string(arch + "/" + time + "/" + nl);
}

inline double check_tol(const Context& ctx, std::size_t n) { return ctx.tol.value_or(default_nsd_tol(2 * n)); }

inline void write_trace(Context& ctx, const std::string& path, const std::string& csv) {
  ctx.report["diagnostics"]["trace_fnv1a"] = io::fnv1a(csv);
  ctx.report["diagnostics"]["trace_rows"] = std::count(csv.begin(), csv.end(), '\n') - 1;
  if (!path.empty()) io::write_file_atomic(path, csv);
}

// ---- certify ---------------------------------------------------------------

struct CertifyArgs {
  std::string arch, time, nl, w, p, q;
  double rate = 0.0;
};

inline int certify(Context& ctx, const CertifyArgs& a) {
  const ConditionId cond = condition_from_flags(a.arch, a.time, a.nl);
  const Matrix w = io::matrix_from_json(input(ctx, a.w).value);
  require(w.is_square(), ErrorCode::DimensionMismatch, "W must be square");
  const Rate rate = io::rate_for(cond, a.rate);
  validate_rate(cond, rate);
  ctx.report["condition"] = cond.name();
  ctx.report["rate"] = rate.value;

  if (!a.p.empty() || !a.q.empty()) {
    require(!a.p.empty() && !a.q.empty(), ErrorCode::InvalidArgument, "--P and --Q go together");
    const Certificate cert{cond, w, SymMatrix(io::matrix_from_json(input(ctx, a.p).value)),
                           io::diag_from_json(input(ctx, a.q).value), rate, 0.0};
    const double tol = check_tol(ctx, w.rows());
    const CheckResult r = check(cert, tol);
    ctx.report["margin"] = r.margin;
    ctx.report["diagnostics"]["mode"] = "check";
    ctx.report["diagnostics"]["tolerance"] = tol;
    ctx.report["status"] = r.holds ? "certified" : "violated";
    Certificate out = cert;
    out.margin = r.margin;
    ctx.report["certificate"] = io::to_json(out);
    return r.holds ? kExitOk : kExitNegative;
  }

  SolverOptions opts;
  opts.seed = ctx.seed;
  if (ctx.tol) opts.strict_tol = *ctx.tol;
  const CertificateSearch s = find_certificate(cond, w, rate, opts);
  ctx.report["margin"] = s.solver.margin;
  ctx.report["diagnostics"]["mode"] = "search";
  ctx.report["diagnostics"]["tolerance"] = opts.strict_tol;
  ctx.report["diagnostics"]["lower_bound"] = s.solver.lower_bound;
  ctx.report["diagnostics"]["attempts"] = s.solver.attempts;
  ctx.report["diagnostics"]["solver_status"] = std::string(to_string(s.status));
  if (!s.certificate) {
    ctx.report["status"] = "not_found";
    return kExitNegative;
  }
  ctx.report["status"] = s.status == FeasibilityStatus::Feasible ? "certified" : "marginal";
  ctx.report["certificate"] = io::to_json(*s.certificate);
  return kExitOk;
}

// ---- param -------------------------------------------------------------------

inline int param_gen(Context& ctx, std::size_t n, double c, double eps) {
  require(n >= 1, ErrorCode::InvalidArgument, "--n must be positive");
  SplitMix64 rng(ctx.seed);
  const ParamSeed seed = sampling::random_param_seed(n, c, rng, eps);
  const Generated g = generate(seed);
  Certificate cert = g.certificate();
  cert.margin = check(cert, default_nsd_tol(2 * n)).margin;
  ctx.report["condition"] = cert.cond.name();
  ctx.report["rate"] = cert.rate.value;
  ctx.report["margin"] = cert.margin;
  ctx.report["certificate"] = io::to_json(cert);
  ctx.report["diagnostics"]["param_seed"] = io::to_json(seed);
  ctx.report["diagnostics"]["boundary"] = g.boundary;
  ctx.report["status"] = "generated";
  return kExitOk;
}

inline int param_invert(Context& ctx, const std::string& cert_path) {
  const Certificate cert = io::certificate_from_json(input(ctx, cert_path).value);
  ctx.report["condition"] = cert.cond.name();
  ctx.report["rate"] = cert.rate.value;
  const ParamSeed seed = invert(cert);
  const Generated back = generate(seed);
  const double err = max_abs_diff(back.w, cert.w);
  ctx.report["diagnostics"]["param_seed"] = io::to_json(seed);
  ctx.report["diagnostics"]["round_trip_error"] = err;
  ctx.report["status"] = "inverted";
  return kExitOk;
}

// ---- transform ---------------------------------------------------------------

inline int transform(Context& ctx, const std::string& kind, const std::string& cert_path) {
  const Certificate cert = io::certificate_from_json(input(ctx, cert_path).value);
  Certificate out;
  if (kind == "dual") out = dualize(cert);
  else if (kind == "cone2mone") out = cone_to_mone(cert);
  else out = disc_to_cts(cert);
  ctx.report["condition"] = out.cond.name();
  ctx.report["rate"] = out.rate.value;
  ctx.report["margin"] = out.margin;
  ctx.report["certificate"] = io::to_json(out);
  ctx.report["diagnostics"]["source_condition"] = cert.cond.name();
  ctx.report["status"] = "transformed";
  return kExitOk;
}

// ---- synth / simulate / track -------------------------------------------------

inline int synth(Context& ctx, const std::string& plant_path, double cr) {
  const PlantModel plant = io::plant_from_json(input(ctx, plant_path).value);
  SolverOptions opts;
  opts.seed = ctx.seed;
  if (ctx.tol) opts.strict_tol = *ctx.tol;
  ctx.report["rate"] = cr;
  const auto gain = try_synthesize_gain(plant, cr, opts);
  if (!gain) {
    ctx.report["status"] = "not_found";
    return kExitNegative;
  }
  const DcGainCheck dc = dc_gain_check(plant, *gain);
  ctx.report["margin"] = gain->margin;
  ctx.report["gain"] = io::to_json(*gain);
  ctx.report["diagnostics"]["dc_gain"] = Json{
      {"lmi_holds", dc.lmi_holds}, {"hurwitz", dc.hurwitz}, {"witness", dc.witness}, {"max_real", dc.max_real}};
  ctx.report["status"] = dc.passed() ? "synthesized" : "dc_gain_failed";
  return dc.passed() ? kExitOk : kExitNegative;
}

struct SimulateArgs {
  std::string model, input, trace;
  double horizon = 10.0;
  double step = 1e-2;
  std::size_t steps = 100;
};

/// Model file: {"architecture": "FR"|"HOP", "time": "CT"|"DT", "W", "B",
/// "activation": name, "delta"}. Input file: {"u": [...], "x0": [...]}.
inline int simulate(Context& ctx, const SimulateArgs& a) {
  const Json model = input(ctx, a.model).value;
  const Json in = input(ctx, a.input).value;
  const std::string arch = io::detail::field(model, "architecture").get<std::string>();
  const std::string time = io::detail::field(model, "time").get<std::string>();
  require(arch == "FR" || arch == "HOP", ErrorCode::ParseError, "architecture must be FR or HOP");
  require(time == "CT" || time == "DT", ErrorCode::ParseError, "time must be CT or DT");
  const Architecture architecture = arch == "FR" ? Architecture::FiringRate : Architecture::Hopfield;
  const Matrix w = io::matrix_from_json(io::detail::field(model, "W"));
  const Matrix b = io::matrix_from_json(io::detail::field(model, "B"));
  const double delta = model.contains("delta") ? io::detail::number(model["delta"], "delta") : 1.0;
  const Activation act =
      io::activation_from_string(model.value("activation", std::string("tanh")), delta);
  const Vector u = io::vector_from_json(io::detail::field(in, "u"), "u");
  const Vector x0 = io::vector_from_json(io::detail::field(in, "x0"), "x0");

  const SimTrace tr = time == "CT"
                          ? simulate_ct(architecture, w, b, act, constant_input(u), x0, a.horizon, a.step)
                          : simulate_dt(architecture, w, b, act, constant_input(u), x0, a.steps);
  ctx.report["diagnostics"]["method"] = tr.method;
  ctx.report["diagnostics"]["activation"] = act.name();
  ctx.report["diagnostics"]["final_state"] = tr.states.back();
  ctx.report["diagnostics"]["final_time"] = tr.times.back();
  write_trace(ctx, a.trace, io::trace_csv(tr));
  ctx.report["status"] = "simulated";
  return kExitOk;
}

struct TrackArgs {
  std::string plant, gain, activation, trace;
  std::vector<double> ref;
  double eps = 0.02;
  double horizon = 0.0;
  double step = 1e-2;
  double tolerance = 1e-3;
};

inline int track_cmd(Context& ctx, const TrackArgs& a) {
  const PlantModel plant = io::plant_from_json(input(ctx, a.plant).value);
  const GainResult gain = io::gain_from_json(input(ctx, a.gain).value);
  require(a.ref.size() == plant.outputs(), ErrorCode::DimensionMismatch, "--ref must have one entry per output");
  require(gain.k.rows() == plant.inputs() && gain.k.cols() == plant.outputs(), ErrorCode::DimensionMismatch,
          "K does not match the plant");
  const Activation act = io::activation_from_string(a.activation.empty() ? "blend" : a.activation, plant.delta);
  ctx.report["rate"] = gain.rate;
  ctx.report["diagnostics"]["eps"] = a.eps;
  ctx.report["diagnostics"]["activation"] = act.name();
  try {
    const TrackResult r = track(plant, gain, act, a.ref, Vector(plant.states(), 0.0), Vector(plant.inputs(), 0.0),
                                {a.eps, a.horizon, a.step, a.tolerance});
    ctx.report["diagnostics"]["final_error"] = r.final_error;
    ctx.report["diagnostics"]["final_output"] = r.trace.outputs.back();
    ctx.report["diagnostics"]["horizon"] = r.trace.times.back();
    write_trace(ctx, a.trace, io::trace_csv(r.trace));
    ctx.report["status"] = r.tracked ? "tracked" : "plateau";
    return r.tracked ? kExitOk : kExitNegative;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NonFiniteState) throw;
    ctx.report["status"] = "diverged";
    ctx.report["diagnostics"]["error"] = e.what();
    return kExitNegative;
  }
}

// ---- selftest ----------------------------------------------------------------

struct Anchor {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::vector<Anchor> run_anchors(const Context& ctx) {
  SplitMix64 rng(ctx.seed);
  const ConditionId fr_ct_mone{Architecture::FiringRate, TimeDomain::Continuous, Nonlinearity::Mone};
  const ConditionId fr_dt_cone{Architecture::FiringRate, TimeDomain::Discrete, Nonlinearity::Cone};
  auto tol_for = [&](std::size_t n) { return check_tol(ctx, n); };
  std::vector<Anchor> out;
  auto run = [&](const std::string& name, const std::function<std::string(bool&)>& body) {
    Anchor a{name, false, ""};
    try {
      bool ok = true;
      a.detail = body(ok);
      a.passed = ok;
    } catch (const Error& e) {
      a.detail = e.what();
    }
    out.push_back(std::move(a));
  };

  run("skew-vertices", [&](bool& ok) {
    int both = 0;
    for (int i = 0; i < 2000; ++i) {
      const SkewVertices v = skew_counterexample_vertices(sampling::random_spd(2, rng, 1e-2, 1e2));
      both += v.v1_pd && v.v2_pd;
    }
    ok = both == 0;
    return std::to_string(both) + " of 2000 P with both vertices PD";
  });
  run("skew-search", [&](bool& ok) {
    const auto r = find_certificate(fr_ct_mone, Matrix{{0, 4}, {-4, 0}}, Rate::ct(0.01));
    ok = r.status == FeasibilityStatus::NotFound;
    return "status " + std::string(to_string(r.status));
  });
  run("negative-definite-weight", [&](bool& ok) {
    // alpha(W) < 0: P = -W, Q = I certifies rate 1.
    double worst = -1e300;
    for (const Matrix& w : {-1.0 * Matrix::identity(3), Matrix{{-2.0, 0.5}, {0.5, -1.0}}}) {
      const CheckResult r = check(fr_ct_mone, w, SymMatrix(-1.0 * w), DiagMatrix::identity(w.rows()), Rate::ct(1.0),
                                  tol_for(w.rows()));
      ok = ok && r.holds;
      worst = std::max(worst, r.margin);
    }
    return "worst margin " + io::format_number(worst);
  });
  run("symmetric-log-optimal", [&](bool& ok) {
    const Certificate c = symmetric_construction(SymMatrix{{0.5, 0.0}, {0.0, -3.0}});
    ok = std::abs(c.margin) <= 1e-8 && std::abs(c.rate.value - 0.5) <= 1e-12 && check(c, tol_for(2)).holds;
    return "rate " + io::format_number(c.rate.value) + ", margin " + io::format_number(c.margin);
  });
  run("table-lure-agreement", [&](bool& ok) {
    int mismatches = 0;
    for (const ConditionId& cond : kAllConditions)
      for (int i = 0; i < 10; ++i) {
        const Certificate c = sampling::random_certificate(cond, 2 + static_cast<std::size_t>(i) % 5, rng);
        if (assemble(cond, c.w, c.p, c.q, c.rate).matrix() != assemble_via_lure(cond, c.w, c.p, c.q, c.rate).matrix())
          ++mismatches;
      }
    ok = mismatches == 0;
    return std::to_string(mismatches) + " of 80 instances differ";
  });
  run("duality-round-trip", [&](bool& ok) {
    double worst = 0.0;
    for (const ConditionId& cond : kAllConditions)
      for (int i = 0; i < 5; ++i) {
        const Certificate c = sampling::random_certificate(cond, 3, rng);
        const Certificate back = dualize(dualize(c));
        worst = std::max({worst, max_abs_diff(back.w, c.w), max_abs_diff(back.p.matrix(), c.p.matrix()),
                          max_abs_diff(back.q.matrix(), c.q.matrix())});
      }
    ok = worst <= 1e-9;
    return "worst deviation " + io::format_number(worst);
  });
  run("inclusion-chain", [&](bool& ok) {
    int failures = 0;
    for (const ConditionId& cond : kAllConditions)
      for (int i = 0; i < 5; ++i) {
        Certificate c = sampling::random_certificate(cond, 3, rng);
        if (c.cond.nonlinearity == Nonlinearity::Cone) c = cone_to_mone(c);
        if (c.cond.time == TimeDomain::Discrete) c = disc_to_cts(c);
        failures += !check(c, tol_for(3)).holds;
      }
    ok = failures == 0;
    return std::to_string(failures) + " of 40 chains failed";
  });
  run("schur-diagonal", [&](bool& ok) {
    const SchurStability s = schur_diag_stability(Matrix{{0, 0.5}, {0.3, 0}}, 0.6);
    ok = s.stable && s.firing_rate && s.hopfield && check(*s.firing_rate, tol_for(2)).holds &&
         check(*s.hopfield, tol_for(2)).holds;
    const auto r = find_certificate(fr_dt_cone, Matrix{{0, 0.5}, {0.3, 0}}, Rate::dt(0.6));
    ok = ok && r.status == FeasibilityStatus::Feasible && r.solver.margin <= -0.1;
    return "margin " + io::format_number(r.solver.margin);
  });
  run("parameterization-soundness", [&](bool& ok) {
    double worst = -1e300;
    int lds_failures = 0;
    for (int i = 0; i < 30; ++i) {
      const std::size_t n = 2 + static_cast<std::size_t>(i) % 7;
      const PlantModel p = sampling::random_plant(n, 1, 1, 1.0, sampling::uniform(rng, 0.0, 0.95), rng);
      const CheckResult r = check(*p.certificate, tol_for(n));
      ok = ok && r.holds;
      worst = std::max(worst, r.margin);
      lds_failures += !lds_necessary(*p.certificate);
    }
    ok = ok && lds_failures == 0;
    return "worst margin " + io::format_number(worst) + ", " + std::to_string(lds_failures) + " LDS failures";
  });
  return out;
}

inline int selftest(Context& ctx) {
  const std::vector<Anchor> anchors = run_anchors(ctx);
  bool all = true;
  Json list = Json::array();
  for (const Anchor& a : anchors) {
    all = all && a.passed;
    list.push_back(Json{{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
    *ctx.err << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
  }
  ctx.report["diagnostics"]["anchors"] = std::move(list);
  ctx.report["status"] = all ? "pass" : "fail";
  return all ? kExitOk : kExitNegative;
}

}  // namespace detail

/// Runs one command. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contraction certificates for firing-rate and Hopfield networks", "contractnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("contractnet ") + io::kVersion);

  std::uint64_t seed = 0;
  std::string out_path;
  std::optional<double> tol_flag;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.fallthrough();

  detail::CertifyArgs ca;
  auto* certify = app.add_subcommand("certify", "check or search a certificate");
  certify->add_option("--cond", ca.arch)->required()->check(CLI::IsMember({"FR", "HOP"}));
  certify->add_option("--time", ca.time)->required()->check(CLI::IsMember({"CT", "DT"}));
  certify->add_option("--nl", ca.nl)->required()->check(CLI::IsMember({"CONE", "MONE"}));
  certify->add_option("--W", ca.w, "matrix file")->required();
  certify->add_option("--P", ca.p, "matrix file");
  certify->add_option("--Q", ca.q, "matrix file");
  certify->add_option("--rate", ca.rate, "c (CT) or rho (DT)")->required();
  certify->add_option("--tol", tol_flag, "check tolerance");

  auto* param = app.add_subcommand("param", "generate or invert parameterized weights");
  param->require_subcommand(1);
  std::size_t gen_n = 0;
  double gen_c = 0.0;
  double gen_eps = 0.0;
  auto* gen = param->add_subcommand("gen", "draw W with a certificate");
  gen->add_option("--n", gen_n)->required();
  gen->add_option("--c", gen_c)->required()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--eps", gen_eps, "shift for the Gram matrix (default: scaled to Y)");
  std::string invert_cert;
  auto* inv = param->add_subcommand("invert", "recover the free variables of a certificate");
  inv->add_option("--cert", invert_cert)->required();

  auto* transform = app.add_subcommand("transform", "map a certificate to another cell");
  transform->require_subcommand(1);
  std::string transform_cert;
  std::string transform_kind;
  for (const char* kind : {"dual", "cone2mone", "disc2cts"}) {
    auto* sub = transform->add_subcommand(kind);
    sub->add_option("--cert", transform_cert)->required();
    sub->callback([&transform_kind, kind] { transform_kind = kind; });
  }

  std::string synth_plant;
  double synth_cr = 0.0;
  auto* synth = app.add_subcommand("synth", "integral gain for a plant");
  synth->add_option("--plant", synth_plant)->required();
  synth->add_option("--cr", synth_cr, "reduced-dynamics rate")->required();
  synth->add_option("--tol", tol_flag, "solver strictness");

  detail::SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "simulate a network");
  simulate->add_option("--model", sa.model)->required();
  simulate->add_option("--input", sa.input)->required();
  simulate->add_option("--horizon", sa.horizon, "continuous time")->capture_default_str();
  simulate->add_option("--steps", sa.steps, "discrete time")->capture_default_str();
  simulate->add_option("--step", sa.step, "RK4 step")->capture_default_str();
  simulate->add_option("--trace", sa.trace, "CSV output");

  detail::TrackArgs ta;
  auto* track = app.add_subcommand("track", "closed-loop reference tracking");
  track->add_option("--plant", ta.plant)->required();
  track->add_option("--gain", ta.gain, "gain file, e.g. synth report#/gain")->required();
  track->add_option("--ref", ta.ref)->required()->delimiter(',');
  track->add_option("--eps", ta.eps)->capture_default_str();
  track->add_option("--horizon", ta.horizon, "default 10 / (eps c_r)");
  track->add_option("--step", ta.step)->capture_default_str();
  track->add_option("--tolerance", ta.tolerance)->capture_default_str();
  track->add_option("--activation", ta.activation, "tanh, relu, sigmoid, identity or blend (default)");
  track->add_option("--trace", ta.trace, "CSV output");

  auto* selftest = app.add_subcommand("selftest", "run the regression anchors");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version requests are "errors" with exit code 0.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  detail::Context ctx;
  ctx.seed = seed;
  ctx.err = &err;
  int code = kExitOk;
  std::string name;
  try {
    ctx.tol = tol_flag ? tol_flag : detail::env_tol();
    auto start = [&](const std::string& command) {
      name = command;
      ctx.report = detail::base_report(command, seed);
    };
    if (certify->parsed()) {
      start("certify");
      code = detail::certify(ctx, ca);
    } else if (gen->parsed()) {
      start("param gen");
      code = detail::param_gen(ctx, gen_n, gen_c, gen_eps);
    } else if (inv->parsed()) {
      start("param invert");
      code = detail::param_invert(ctx, invert_cert);
    } else if (transform->parsed()) {
      start("transform " + transform_kind);
      code = detail::transform(ctx, transform_kind, transform_cert);
    } else if (synth->parsed()) {
      start("synth");
      code = detail::synth(ctx, synth_plant, synth_cr);
    } else if (simulate->parsed()) {
      start("simulate");
      code = detail::simulate(ctx, sa);
    } else if (track->parsed()) {
      start("track");
      code = detail::track_cmd(ctx, ta);
    } else if (selftest->parsed()) {
      start("selftest");
      code = detail::selftest(ctx);
    }
  } catch (const Error& e) {
    if (!is_negative(e.code())) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    ctx.report["status"] = "error";
    ctx.report["diagnostics"]["error"] = Json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    code = kExitNegative;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const std::string text = ctx.report.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    try {
      io::write_file_atomic(out_path, text);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  if (code == kExitNegative && ctx.report["status"] == "error")
    err << name << ": " << ctx.report["diagnostics"]["error"]["message"].get<std::string>() << '\n';
  return code;
}

}  // namespace contractnet::cli
