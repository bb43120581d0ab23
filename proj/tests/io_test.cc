#include <gtest/gtest.h>

#include <filesystem>

#include "contractnet/io.hpp"
#include "support/random_instances.hpp"

namespace contractnet::io {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NumericalFailure;
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a("foobar"), "85944171f73967e8");
}

TEST(MatrixJson, RoundTripIsExact) {
  SplitMix64 rng(1);
  const Matrix m = testing_support::random_matrix(3, 4, rng);
  const Matrix back = matrix_from_json(Json::parse(to_json(m).dump()));
  EXPECT_EQ(back, m);
}

TEST(MatrixJson, DiagonalShorthand) {
  const Matrix m = matrix_from_json(Json::parse(R"({"diag": [1, 2.5]})"));
  EXPECT_EQ(m, (Matrix{{1, 0}, {0, 2.5}}));
  EXPECT_EQ(diag_from_json(Json::parse(R"({"rows":2,"cols":2,"data":[3,0,0,4]})")).diag(), (Vector{3, 4}));
  EXPECT_EQ(code_of([] { diag_from_json(Json::parse(R"({"rows":2,"cols":2,"data":[3,1,0,4]})")); }),
            ErrorCode::ParseError);
}

TEST(MatrixJson, RejectsMalformed) {
  for (const char* text : {R"({"rows":2,"cols":2,"data":[1,2,3]})", R"({"rows":1,"cols":1,"data":[1e400]})",
                           R"({"rows":1,"cols":1,"data":["1"]})", R"({"rows":-1,"cols":1,"data":[]})",
                           R"({"cols":1,"data":[1]})", R"([1, 2])"}) {
    EXPECT_EQ(code_of([&] { matrix_from_json(parse_json(text)); }), ErrorCode::ParseError) << text;
  }
  EXPECT_EQ(code_of([] { parse_json(R"({"rows":1,"cols":1,"data":[NaN]})"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_json(R"({"rows":1,"cols":1,"data":[Infinity]})"); }), ErrorCode::ParseError);
}

TEST(CertificateJson, RoundTrip) {
  SplitMix64 rng(2);
  for (const ConditionId& cond : kAllConditions) {
    const Certificate c = testing_support::random_certificate(cond, 3, rng);
    const Certificate back = certificate_from_json(Json::parse(to_json(c).dump()));
    EXPECT_EQ(back.cond, c.cond);
    EXPECT_EQ(back.rate, c.rate);
    EXPECT_EQ(back.w, c.w);
    EXPECT_EQ(back.p.matrix(), c.p.matrix());
    EXPECT_EQ(back.q.diag(), c.q.diag());
    EXPECT_EQ(back.margin, c.margin);
  }
}

TEST(CertificateJson, UnknownConditionAndShapes) {
  EXPECT_EQ(code_of([] { condition_from_string("FR/CT/SLOPE"); }), ErrorCode::ParseError);
  const Json bad = Json::parse(
      R"({"condition":"FR/CT/MONE","rate":0.5,"W":{"diag":[1,2]},"P":{"diag":[1]},"Q":{"diag":[1,1]}})");
  EXPECT_EQ(code_of([&] { certificate_from_json(bad); }), ErrorCode::DimensionMismatch);
}

TEST(PlantJson, RoundTripAndValidation) {
  SplitMix64 rng(3);
  const PlantModel p = testing_support::random_plant(4, 2, 2, 0.3, 0.4, rng);
  const PlantModel back = plant_from_json(Json::parse(to_json(p).dump()));
  EXPECT_EQ(back.w, p.w);
  EXPECT_EQ(back.b, p.b);
  EXPECT_EQ(back.c, p.c);
  EXPECT_EQ(back.delta, 0.3);
  const Json bad = Json::parse(R"({"W":{"diag":[0,0]},"B":{"diag":[1]},"C":{"diag":[1,1]}})");
  EXPECT_EQ(code_of([&] { plant_from_json(bad); }), ErrorCode::DimensionMismatch);
}

TEST(GainJson, RoundTrip) {
  const GainResult g{Matrix{{2}}, SymMatrix{{1}}, DiagMatrix{1.0}, Matrix{{2}}, 0.5, -0.1};
  const GainResult back = gain_from_json(Json::parse(to_json(g).dump()));
  EXPECT_EQ(back.k, g.k);
  EXPECT_EQ(back.rate, 0.5);
  EXPECT_EQ(back.margin, -0.1);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-1e-300), "-1e-300");
  SplitMix64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double x = testing_support::normal(rng) * std::pow(10.0, testing_support::uniform(rng, -20, 20));
    EXPECT_EQ(std::strtod(format_number(x).c_str(), nullptr), x);
  }
}

TEST(TraceCsv, HeaderAndRows) {
  SimTrace tr;
  tr.times = {0.0, 0.5};
  tr.states = {{1.0, 2.0}, {0.25, 3.0}};
  tr.inputs = {{0.1}, {0.2}};
  EXPECT_EQ(trace_csv(tr), "t,x0,x1,u0\n0,1,2,0.1\n0.5,0.25,3,0.2\n");
}

TEST(LoadJson, PointerAndHash) {
  const auto dir = std::filesystem::temp_directory_path() / "contractnet_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "doc.json").string();
  const std::string text = R"({"certificate":{"W":{"diag":[-1]}}})";
  write_file_atomic(path, text);
  const JsonInput in = load_json(path + "#/certificate/W");
  EXPECT_EQ(matrix_from_json(in.value), (Matrix{{-1}}));
  EXPECT_EQ(in.hash, fnv1a(text));
  EXPECT_EQ(code_of([&] { load_json(path + "#/missing"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { load_json((dir / "absent.json").string()); }), ErrorCode::ParseError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace contractnet::io
