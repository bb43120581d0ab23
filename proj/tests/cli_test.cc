#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli_commands.hpp"

namespace contractnet::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
  Json report() const { return Json::parse(out); }
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("contractnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
    unsetenv(kTolEnv);
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv(kTolEnv);
  }

  std::string file(const std::string& name, const std::string& text) {
    const std::string p = path(name);
    io::write_file_atomic(p, text);
    return p;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static CliRun run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  fs::path dir_;
};

TEST_F(CliTest, CertifyGivenWitness) {
  const std::string w = file("w.json", R"({"diag":[-1,-1]})");
  const std::string i = file("i.json", R"({"diag":[1,1]})");
  const CliRun r = run({"certify", "--cond", "FR", "--time", "CT", "--nl", "MONE", "--W", w, "--P", i, "--Q", i,
                     "--rate", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.report()["status"], "certified");
  EXPECT_EQ(r.report()["margin"].get<double>(), 0.0);
  EXPECT_EQ(r.report()["inputs"].size(), 3u);
}

TEST_F(CliTest, CertifySearchSkewIsNegative) {
  const std::string w = file("w.json", R"({"rows":2,"cols":2,"data":[0,4,-4,0]})");
  const CliRun r = run({"certify", "--cond", "FR", "--time", "CT", "--nl", "MONE", "--W", w, "--rate", "0.01"});
  EXPECT_EQ(r.code, kExitNegative);
  EXPECT_EQ(r.report()["status"], "not_found");
  EXPECT_TRUE(r.report()["certificate"].is_null());
}

TEST_F(CliTest, CertifySearchFindsDiscreteCertificate) {
  const std::string w = file("w.json", R"({"rows":2,"cols":2,"data":[0,0.5,0.3,0]})");
  const CliRun r = run({"certify", "--cond", "FR", "--time", "DT", "--nl", "CONE", "--W", w, "--rate", "0.6"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_LE(r.report()["margin"].get<double>(), -0.1);
  const Certificate c = io::certificate_from_json(r.report()["certificate"]);
  EXPECT_TRUE(check(c, 0.0).holds);
}

TEST_F(CliTest, UsageErrors) {
  const std::string w = file("w.json", R"({"diag":[-1,-1]})");
  EXPECT_EQ(run({"certify", "--cond", "FR", "--time", "DT", "--nl", "MONE", "--W", w, "--rate", "1.2"}).code,
            kExitUsage);
  EXPECT_EQ(run({"certify", "--cond", "XX", "--time", "CT", "--nl", "MONE", "--W", w, "--rate", "1"}).code,
            kExitUsage);
  EXPECT_EQ(run({"certify", "--cond", "FR", "--time", "CT", "--nl", "MONE", "--rate", "1"}).code, kExitUsage);
  EXPECT_EQ(run({"certify", "--cond", "FR", "--time", "CT", "--nl", "MONE", "--W", path("missing.json"), "--rate",
                 "1"})
                .code,
            kExitUsage);
  const std::string nan = file("nan.json", R"({"rows":1,"cols":1,"data":[NaN]})");
  const CliRun r = run({"certify", "--cond", "FR", "--time", "CT", "--nl", "MONE", "--W", nan, "--rate", "1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("ParseError"), std::string::npos);
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
}

TEST_F(CliTest, HelpAndVersion) {
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  const CliRun v = run({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find(io::kVersion), std::string::npos);
}

TEST_F(CliTest, EnvironmentToleranceOverridesDefault) {
  const std::string w = file("w.json", R"({"diag":[-1,-1]})");
  const std::string p = file("p.json", R"({"diag":[1,1]})");
  const std::vector<std::string> args{"certify", "--cond", "FR", "--time", "CT", "--nl",   "MONE",
                                      "--W",     w,        "--P",  p,        "--Q",    p,      "--rate",
                                      "1.00000025"};
  // Margin is about 5e-7: outside the default tolerance, inside 1e-6.
  EXPECT_EQ(run(args).code, kExitNegative);
  setenv(kTolEnv, "1e-6", 1);
  EXPECT_EQ(run(args).code, kExitOk);
  std::vector<std::string> with_flag = args;
  with_flag.insert(with_flag.end(), {"--tol", "0"});
  EXPECT_EQ(run(with_flag).code, kExitNegative);
  setenv(kTolEnv, "abc", 1);
  EXPECT_EQ(run(args).code, kExitUsage);
}

TEST_F(CliTest, ParamGenIsDeterministicAndCertifies) {
  const CliRun a = run({"param", "gen", "--n", "4", "--c", "0.5", "--seed", "7"});
  const CliRun b = run({"--seed", "7", "param", "gen", "--n", "4", "--c", "0.5"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, run({"param", "gen", "--n", "4", "--c", "0.5", "--seed", "8"}).out);
  const std::string g = file("gen.json", a.out);
  const CliRun c = run({"certify", "--cond", "FR", "--time", "CT", "--nl", "MONE", "--W", g + "#/certificate/W", "--P",
                     g + "#/certificate/P", "--Q", g + "#/certificate/Q", "--rate", "0.5"});
  EXPECT_EQ(c.code, kExitOk) << c.out;
}

TEST_F(CliTest, ParamInvertRoundTrips) {
  for (int seed = 0; seed < 10; ++seed) {
    const CliRun a = run({"param", "gen", "--n", std::to_string(2 + seed % 5), "--c", "0.4", "--seed",
                       std::to_string(seed)});
    const std::string g = file("gen.json", a.out);
    const CliRun inv = run({"param", "invert", "--cert", g + "#/certificate"});
    ASSERT_EQ(inv.code, kExitOk) << inv.err << inv.out;
    EXPECT_LE(inv.report()["diagnostics"]["round_trip_error"].get<double>(), 1e-6);
    const ParamSeed s = io::seed_from_json(inv.report()["diagnostics"]["param_seed"]);
    EXPECT_LE(max_abs_diff(generate(s).w, io::matrix_from_json(a.report()["certificate"]["W"])), 1e-6);
  }
}

TEST_F(CliTest, ParamInvertOfBoundaryCertificateIsNegative) {
  const std::string c = file("c.json", R"({"condition":"FR/CT/MONE","rate":0.01,"W":{"diag":[1.01]},
                                           "P":{"diag":[1]},"Q":{"diag":[1]}})");
  const CliRun r = run({"param", "invert", "--cert", c});
  EXPECT_EQ(r.code, kExitNegative);
  EXPECT_EQ(r.report()["diagnostics"]["error"]["code"], "SlopeBoundViolated");
}

TEST_F(CliTest, TransformDualAndInclusions) {
  const std::string c = file("c.json", R"({"condition":"FR/CT/MONE","rate":1,"W":{"diag":[-1,-1]},
                                           "P":{"diag":[1,1]},"Q":{"diag":[1,1]}})");
  const CliRun d = run({"transform", "dual", "--cert", c});
  ASSERT_EQ(d.code, kExitOk) << d.err;
  EXPECT_EQ(d.report()["certificate"]["condition"], "HOP/CT/MONE");
  EXPECT_EQ(d.report()["command"], "transform dual");

  const std::string dt = file("dt.json", R"({"condition":"FR/DT/CONE","rate":0.6,
                                            "W":{"rows":2,"cols":2,"data":[0,0.5,0.3,0]},
                                            "P":{"diag":[1,1]},"Q":{"diag":[1,1]}})");
  const CliRun ct = run({"transform", "disc2cts", "--cert", dt});
  ASSERT_EQ(ct.code, kExitOk) << ct.err;
  EXPECT_NEAR(ct.report()["rate"].get<double>(), 0.32, 1e-15);
  EXPECT_EQ(ct.report()["certificate"]["condition"], "FR/CT/CONE");
  const CliRun mone = run({"transform", "cone2mone", "--cert", dt});
  EXPECT_EQ(mone.report()["certificate"]["condition"], "FR/DT/MONE");

  const CliRun a = run({"param", "gen", "--n", "5", "--c", "0.3", "--seed", "3"});
  const std::string g = file("g.json", a.out);
  const std::string once = file("once.json", run({"transform", "dual", "--cert", g + "#/certificate"}).out);
  const CliRun twice = run({"transform", "dual", "--cert", once + "#/certificate"});
  ASSERT_EQ(twice.code, kExitOk);
  const Certificate orig = io::certificate_from_json(a.report()["certificate"]);
  const Certificate back = io::certificate_from_json(twice.report()["certificate"]);
  EXPECT_EQ(back.cond, orig.cond);
  EXPECT_LE(max_abs_diff(back.w, orig.w), 1e-9);
  EXPECT_LE(max_abs_diff(back.p.matrix(), orig.p.matrix()), 1e-9 * std::max(1.0, orig.p.max_abs()));
}

TEST_F(CliTest, TransformRejectsInvalidSource) {
  const std::string c = file("c.json", R"({"condition":"FR/CT/MONE","rate":1,"W":{"diag":[3]},
                                           "P":{"diag":[1]},"Q":{"diag":[1]}})");
  EXPECT_EQ(run({"transform", "dual", "--cert", c}).code, kExitUsage);
  EXPECT_EQ(run({"transform", "disc2cts", "--cert", c}).code, kExitUsage);
}

TEST_F(CliTest, SynthAndTrackScalarPlant) {
  const std::string plant = file("plant.json", R"({"W":{"diag":[0]},"B":{"diag":[1]},"C":{"diag":[1]},"delta":1})");
  const CliRun s = run({"synth", "--plant", plant, "--cr", "0.5"});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  const GainResult g = io::gain_from_json(s.report()["gain"]);
  EXPECT_GT(g.k(0, 0), 0.5);
  EXPECT_TRUE(s.report()["diagnostics"]["dc_gain"]["hurwitz"].get<bool>());
  const std::string gain = file("synth.json", s.out);

  const std::string trace = path("trace.csv");
  const CliRun t = run({"track", "--plant", plant, "--gain", gain + "#/gain", "--ref", "0.3", "--eps", "0.05",
                     "--trace", trace});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_LE(t.report()["diagnostics"]["final_error"].get<double>(), 1e-3);
  const std::string csv = io::read_file(trace);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x0,u0,y0");
  EXPECT_EQ(t.report()["diagnostics"]["trace_fnv1a"], io::fnv1a(csv));

  const CliRun stiff = run({"track", "--plant", plant, "--gain", gain + "#/gain", "--ref", "0.3", "--eps", "10"});
  EXPECT_EQ(stiff.code, kExitNegative);
  const std::string status = stiff.report()["status"];
  EXPECT_TRUE(status == "diverged" || status == "plateau") << status;
}

TEST_F(CliTest, SynthDisconnectedOutputIsNegative) {
  const std::string plant =
      file("plant.json", R"({"W":{"diag":[0,0]},"B":{"rows":2,"cols":1,"data":[1,0]},
                             "C":{"rows":1,"cols":2,"data":[0,1]},"delta":1})");
  const CliRun s = run({"synth", "--plant", plant, "--cr", "0.5"});
  EXPECT_EQ(s.code, kExitNegative);
  EXPECT_EQ(s.report()["status"], "not_found");
}

TEST_F(CliTest, SimulateWritesTrace) {
  const std::string model = file("m.json", R"({"architecture":"FR","time":"CT","W":{"diag":[0,0]},
                                               "B":{"diag":[1,1]},"activation":"identity"})");
  const std::string in = file("in.json", R"({"u":[0.5,-1],"x0":[0,0]})");
  const CliRun r = run({"simulate", "--model", model, "--input", in, "--horizon", "2", "--trace", path("t.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const Vector x = io::vector_from_json(r.report()["diagnostics"]["final_state"]);
  EXPECT_NEAR(x[0], 0.5 * (1 - std::exp(-2.0)), 1e-9);
  EXPECT_EQ(r.report()["diagnostics"]["trace_rows"].get<int>(), 201);

  const std::string dt = file("d.json", R"({"architecture":"HOP","time":"DT","W":{"diag":[0.5]},
                                            "B":{"diag":[1]},"activation":"identity"})");
  const std::string in1 = file("in1.json", R"({"u":[1],"x0":[4]})");
  const CliRun d = run({"simulate", "--model", dt, "--input", in1, "--steps", "3"});
  ASSERT_EQ(d.code, kExitOk) << d.err;
  EXPECT_DOUBLE_EQ(io::vector_from_json(d.report()["diagnostics"]["final_state"])[0], 2.25);
}

TEST_F(CliTest, SelftestPassesAndIsDeterministic) {
  const CliRun a = run({"selftest"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, run({"selftest"}).out);
  for (const Json& anchor : a.report()["diagnostics"]["anchors"]) EXPECT_TRUE(anchor["passed"].get<bool>());
}

TEST_F(CliTest, SelftestNamesInjectedFault) {
  setenv(kTolEnv, "-1e-3", 1);
  const CliRun a = run({"selftest"});
  EXPECT_EQ(a.code, kExitNegative);
  EXPECT_NE(a.err.find("FAIL negative-definite-weight"), std::string::npos);
  EXPECT_NE(a.err.find("PASS table-lure-agreement"), std::string::npos);
}

TEST_F(CliTest, OutFlagWritesReport) {
  const CliRun a = run({"--out", path("r.json"), "selftest"});
  ASSERT_EQ(a.code, kExitOk);
  EXPECT_TRUE(a.out.empty());
  EXPECT_EQ(io::read_file(path("r.json")), run({"selftest"}).out);
}

}  // namespace
}  // namespace contractnet::cli
