#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lpsgd/errors.hpp"
#include "lpsgd/minifloat.hpp"
#include "oracle.hpp"

using namespace lpsgd;

namespace {

std::vector<FloatFormat> shipped() {
  return {formats::fp16(), formats::fp8_e4m3(), formats::fp8_e5m2(), formats::fp4_e2m1()};
}

QuantizationConfig cfg_of(const FloatFormat& f) { return QuantizationConfig{f}; }

// Mix of uniform and log-uniform magnitudes spanning past both ends of the
// format's range.
double sample_input(std::mt19937_64& gen, const FloatFormat& f) {
  std::uniform_int_distribution<int> pick(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max = f.max_finite();
  const double sign = pick(gen) ? 1.0 : -1.0;
  if (pick(gen)) return sign * unit(gen) * 1.5 * max;
  const double lo = std::log2(f.min_positive()) - 4.0;
  const double hi = std::log2(max) + 2.0;
  return sign * std::exp2(lo + (hi - lo) * unit(gen));
}

}  // namespace

TEST_CASE("shipped formats decode to the documented parameters") {
  CHECK(formats::fp16().max_finite() == 65504.0);
  CHECK(formats::fp8_e4m3().max_finite() == 448.0);
  CHECK(formats::fp8_e5m2().max_finite() == 57344.0);
  CHECK(formats::fp4_e2m1().max_finite() == 6.0);
  CHECK(formats::fp4_e2m1().min_positive() == 0.5);
  CHECK(formats::fp8_e4m3().min_positive() == std::ldexp(1.0, -9));
  CHECK(formats::fp16().min_positive() == std::ldexp(1.0, -24));

  for (const auto& f : shipped()) {
    CAPTURE(f.name);
    CHECK(f.max_finite() == oracle::all_values(f).back());
  }
}

TEST_CASE("custom format validation") {
  CHECK_THROWS_AS(make_format("e1", 1, 3, 0, false, false), InvalidInput);
  CHECK_THROWS_AS(make_format("m0", 3, 0, 3, false, false), InvalidInput);
  CHECK_THROWS_AS(make_format("wide", 8, 8, 127, true, true), InvalidInput);
  CHECK_THROWS_AS(make_format("inf-only", 4, 3, 7, true, false), InvalidInput);

  const FloatFormat e3m2 = make_format("fp6e3m2", 3, 2, 3, false, false);
  CHECK(e3m2.max_finite() == 28.0);
  CHECK(enumerate_representables(e3m2) == oracle::all_values(e3m2));
}

TEST_CASE("precision names are case-insensitive") {
  CHECK(precision_from_name("FP8E4M3").format == formats::fp8_e4m3());
  CHECK(precision_from_name("fp32").is_identity());
  CHECK(precision_from_name("Fp4E2m1").name() == "fp4e2m1");
  CHECK_THROWS_AS(precision_from_name("bf16"), InvalidInput);
}

TEST_CASE("enumerate_representables") {
  SUBCASE("fp4 e2m1 is the 15-value set") {
    const std::vector<double> expected{-6, -4, -3, -2, -1.5, -1, -0.5, 0,
                                       0.5, 1, 1.5, 2, 3, 4, 6};
    CHECK(enumerate_representables(formats::fp4_e2m1()) == expected);
  }
  SUBCASE("matches exhaustive code-point decoding") {
    for (const auto& f : shipped()) {
      CAPTURE(f.name);
      const auto values = enumerate_representables(f);
      CHECK(values == oracle::all_values(f));
      CHECK(std::is_sorted(values.begin(), values.end()));
      CHECK(std::adjacent_find(values.begin(), values.end()) == values.end());
      CHECK(std::binary_search(values.begin(), values.end(), 0.0));
      for (std::size_t i = 0; i < values.size(); ++i)
        CHECK(values[i] == -values[values.size() - 1 - i]);
    }
  }
  SUBCASE("code point counts") {
    CHECK(enumerate_representables(formats::fp8_e4m3()).size() == 253);
    CHECK(enumerate_representables(formats::fp8_e5m2()).size() == 247);
    CHECK(enumerate_representables(formats::fp16()).size() == 63487);
    CHECK(enumerate_representables(formats::fp8_e4m3()).back() == 448.0);
  }
}

TEST_CASE("quantize examples") {
  const auto fp4 = cfg_of(formats::fp4_e2m1());
  const auto e4m3 = cfg_of(formats::fp8_e4m3());
  CHECK(quantize(0.0, fp4) == 0.0);
  CHECK(quantize(1.0, e4m3) == 1.0);
  // Neighbours of 0.1 in E4M3 are 0.09375 and 0.1015625.
  CHECK(oracle::nearest_linear(formats::fp8_e4m3(), 0.1) == 0.1015625);
  CHECK(quantize(0.1, e4m3) == 0.1015625);
  CHECK(quantize(2.5, fp4) == 2.0);
  CHECK(quantize(1000.0, e4m3) == 448.0);
  CHECK(quantize(-1000.0, e4m3) == -448.0);
  CHECK(quantize(1e300, cfg_of(formats::fp8_e5m2())) == 57344.0);
}

TEST_CASE("ties go to the even mantissa") {
  const auto fp4 = cfg_of(formats::fp4_e2m1());
  CHECK(quantize(0.25, fp4) == 0.0);   // 0 vs 0.5
  CHECK(quantize(0.75, fp4) == 1.0);   // 0.5 (odd) vs 1.0 (even)
  CHECK(quantize(1.25, fp4) == 1.0);   // 1.0 (even) vs 1.5 (odd)
  CHECK(quantize(3.5, fp4) == 4.0);    // 3 (odd) vs 4 (even)
  CHECK(quantize(5.0, fp4) == 4.0);    // 4 (even) vs 6 (odd)
  CHECK(quantize(-2.5, fp4) == -2.0);
  // E4M3: 464 lies midway between 448 and the NaN code; stays at 448.
  CHECK(quantize(464.0, cfg_of(formats::fp8_e4m3())) == 448.0);
}

TEST_CASE("negative zero normalizes") {
  const auto fp4 = cfg_of(formats::fp4_e2m1());
  CHECK_FALSE(std::signbit(quantize(-0.0, fp4)));
  CHECK_FALSE(std::signbit(quantize(-0.1, fp4)));
  CHECK_FALSE(std::signbit(quantize(-0.0, QuantizationConfig{})));
}

TEST_CASE("non-finite input is rejected") {
  const auto fp16 = cfg_of(formats::fp16());
  CHECK_THROWS_AS(quantize(std::numeric_limits<double>::infinity(), fp16), InvalidInput);
  CHECK_THROWS_AS(quantize(std::numeric_limits<double>::quiet_NaN(), fp16), InvalidInput);
  Eigen::VectorXd v(2);
  v << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(quantize_vector(v, fp16), InvalidInput);
}

TEST_CASE("fp32 is the identity") {
  const QuantizationConfig id;
  CHECK(quantize(0.1, id) == 0.1);
  CHECK(quantize(-1e-300, id) == -1e-300);
}

TEST_CASE("quantize_vector") {
  const auto fp4 = cfg_of(formats::fp4_e2m1());
  CHECK(quantize_vector(Eigen::VectorXd::Zero(3), fp4) == Eigen::VectorXd::Zero(3));
  Eigen::VectorXd v(4);
  v << -6, 0.5, 1.5, 4;
  CHECK(quantize_vector(v, fp4) == v);

  // exp(-0.2 x): entries below 0.25 collapse to zero in FP4.
  Eigen::VectorXd g(401);
  for (int i = 0; i < 401; ++i) g[i] = std::exp(-0.2 * 0.1 * i);
  const Eigen::VectorXd gq = quantize_vector(g, fp4);
  for (int i = 0; i < 401; ++i)
    if (g[i] < 0.25) CHECK(gq[i] == 0.0);
}

TEST_CASE("quantizer properties on random inputs") {
  std::mt19937_64 gen(20240601);
  for (const auto& f : shipped()) {
    CAPTURE(f.name);
    const auto cfg = cfg_of(f);
    const auto table = oracle::nonnegative_table(f);
    for (int i = 0; i < 20000; ++i) {
      const double x = sample_input(gen, f);
      const double y = sample_input(gen, f);
      const double qx = quantize(x, cfg);
      REQUIRE(qx == oracle::nearest(table, x));
      REQUIRE(quantize(qx, cfg) == qx);
      REQUIRE(quantize(-x, cfg) == -qx);
      REQUIRE(std::fabs(qx) <= f.max_finite());
      const double qy = quantize(y, cfg);
      if (x <= y) REQUIRE(qx <= qy);
      else REQUIRE(qy <= qx);
    }
  }
}

TEST_CASE("exactness and midpoints over every code point") {
  for (const auto& f : shipped()) {
    CAPTURE(f.name);
    const auto cfg = cfg_of(f);
    const auto values = enumerate_representables(f);
    const auto table = oracle::nonnegative_table(f);
    for (std::size_t i = 0; i < values.size(); ++i) {
      REQUIRE(quantize(values[i], cfg) == values[i]);
      if (i + 1 < values.size()) {
        const double mid = 0.5 * (values[i] + values[i + 1]);
        REQUIRE(quantize(mid, cfg) == oracle::nearest(table, mid));
      }
    }
  }
}
