#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../support/oracles.hpp"
#include "idesign/io.hpp"

using namespace idesign;
using io::json;

namespace {

std::string data(const std::string& name) { return std::string(IDESIGN_TEST_DATA) + "/" + name; }

}  // namespace

TEST_CASE("numbers") {
  CHECK(io::to_json(Number(Rational(15, 101))).dump() == R"({"exact":"15/101","value":0.1485148514851485})");
  CHECK(io::to_json(Number::approx(0.5)).dump() == R"({"value":0.5})");
  CHECK(*io::number_from_json(json("3/4")).exact == Rational(3, 4));
  CHECK(*io::number_from_json(json(2)).exact == Rational(2));
  CHECK_FALSE(io::number_from_json(json(0.25)).exact);
  CHECK(*io::number_from_json(io::to_json(Number(Rational(-7, 3)))).exact == Rational(-7, 3));
  CHECK_THROWS_AS(io::number_from_json(json("x/2")), io::FormatError);
}

TEST_CASE("design files round-trip byte for byte") {
  for (const char* name : {"example1.json", "example8_alternative.json", "example2_s1.json"}) {
    CAPTURE(name);
    const auto first = io::design_from_json(json::parse(io::read_file(data(name))));
    const std::string text = io::dump(io::to_json(first));
    const auto second = io::design_from_json(json::parse(text));
    CHECK(io::dump(io::to_json(second)) == text);
    CHECK(second.design.blocks == first.design.blocks);
    CHECK(second.transposed == first.transposed);
  }
  const auto alt = io::design_from_json(json::parse(io::read_file(data("example8_alternative.json"))));
  CHECK(alt.transposed);
  CHECK(alt.design.shape == Shape{2, 4, 8});
  const json back = io::to_json(alt);
  CHECK(back["a"] == 4);
  CHECK(back["blocks"][0] == json::parse("[[1,1],[2,8],[3,7],[6,4]]"));
}

TEST_CASE("malformed designs") {
  CHECK_THROWS_AS(io::design_from_json(json::parse(io::read_file(data("empty.json")))), io::FormatError);
  CHECK_THROWS_AS(io::design_from_json(json::parse(R"({"a":2,"b":3,"t":2,"n":2,"blocks":[[[1,1,2],[1,2,2]]]})")),
                  io::FormatError);
  CHECK_THROWS_AS(io::design_from_json(json::parse(R"({"a":2,"b":3,"t":2,"blocks":[[[1,1,3],[1,2,2]]]})")),
                  io::FormatError);
  CHECK_THROWS_AS(io::design_from_json(json::parse(R"({"a":2,"b":3,"t":2,"blocks":[[[1,1],[1,2]]]})")),
                  io::FormatError);
  CHECK_THROWS_AS(io::design_from_json(json::parse(R"({"a":1,"b":3,"t":2,"blocks":[[[1,1,2]]]})")), io::FormatError);
  const auto parse_malformed = [] { return json::parse(io::read_file(data("malformed.json"))).size(); };
  CHECK_THROWS_AS(parse_malformed(), json::parse_error);
}

TEST_CASE("covariance files") {
  CHECK(io::covariance_from_json(json::parse(R"({"kind":"identity"})")).kind() == CovarianceSpec::Kind::Identity);
  const auto h = io::covariance_from_json(json::parse(R"({"kind":"type-h","x":"3/2"})"));
  CHECK(*h.exact_scale() == Rational(3, 2));
  const auto d = io::covariance_from_json(json::parse(R"({"kind":"dense","matrix":[[2,1],[1,2]]})"));
  CHECK(d.dense(2)(0, 1) == 1.0);
  CHECK_THROWS_AS(io::covariance_from_json(json::parse(R"({"kind":"dense","matrix":[[2,1]]})")), io::FormatError);
  CHECK_THROWS_AS(io::covariance_from_json(json::parse(R"({"kind":"banded"})")), io::FormatError);
  const auto csv = io::covariance_from_csv(io::read_file(data("sigma_2x3.csv")));
  CHECK(csv.kind() == CovarianceSpec::Kind::General);
  CHECK_NOTHROW(csv.validate(6));
  CHECK_THROWS_AS(io::covariance_from_csv("1,2\n3\n"), io::FormatError);
}

TEST_CASE("covariance follows the block transposition") {
  std::mt19937_64 rng(4);
  const Matrix<double> m = oracle::random_spd(6, rng);
  const auto sigma = CovarianceSpec::general(m);
  // sigma is written for 3 x 2 blocks; the internal layout is 2 x 3
  const auto inner = sigma.transposed(3, 2);
  CHECK(max_abs(inner.transposed(2, 3).dense(6) - m) == 0.0);
  for (int k = 0; k < 5; ++k) {
    const BlockArray s = oracle::random_array({2, 3, 3}, rng);
    const BlockArray file_view = s.transposed();  // shape (3, 2, 3)
    const auto c_inner = c_coeffs_trace(s, inner).value;
    const auto c_file = c_coeffs_trace(file_view, sigma).value;
    CHECK(c_inner.c00 == doctest::Approx(c_file.c00).epsilon(1e-12));
    CHECK(c_inner.c01 == doctest::Approx(c_file.c01).epsilon(1e-12));
    CHECK(c_inner.c11 == doctest::Approx(c_file.c11).epsilon(1e-12));
  }
}

TEST_CASE("solver output is deterministic") {
  const auto a = io::dump(io::to_json(solve_closed_form({2, 3, 5}), false));
  const auto b = io::dump(io::to_json(solve_closed_form({2, 3, 5}), false));
  CHECK(a == b);
  const json j = json::parse(a);
  CHECK(j["regime"] == "t=p-1, a=2, b>=3");
  CHECK(j["support"] == "Q1* u Q2*");
  const json e = io::to_json(EfficiencyReport{0.12345678, 0.5, 0.25, 1.0, {1.0}, Number(Rational(3)), 4.0, true, ""});
  CHECK(e["eff_a"].get<double>() == 0.123457);
  CHECK(e["n"] == 4);
}
