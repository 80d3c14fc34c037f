#include "lpsgd/minifloat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

bool top_exponent_reserved(const FloatFormat& f) { return f.has_infinity; }

// The FN convention spends exactly one code point (all ones) on NaN.
bool top_code_is_nan(const FloatFormat& f) { return !f.has_infinity && f.has_nan; }

}  // namespace

int FloatFormat::max_normal_exponent() const {
  const int top_field = (1 << exponent_bits) - 1;
  return (top_exponent_reserved(*this) ? top_field - 1 : top_field) - bias;
}

double FloatFormat::max_finite() const {
  // Largest significand at the top exponent, in units of 2^-mantissa_bits.
  std::int64_t significand = (std::int64_t{2} << mantissa_bits) - 1;
  if (top_code_is_nan(*this)) --significand;
  return std::ldexp(static_cast<double>(significand), max_normal_exponent() - mantissa_bits);
}

double FloatFormat::min_positive() const {
  return std::ldexp(1.0, min_normal_exponent() - mantissa_bits);
}

FloatFormat make_format(std::string name, int exponent_bits, int mantissa_bits, int bias,
                        bool has_infinity, bool has_nan) {
  if (exponent_bits < 2) throw InvalidInput("format '" + name + "': exponent_bits must be >= 2");
  if (mantissa_bits < 1) throw InvalidInput("format '" + name + "': mantissa_bits must be >= 1");
  if (1 + exponent_bits + mantissa_bits > 16)
    throw InvalidInput("format '" + name + "': total width exceeds 16 bits");
  if (has_infinity && !has_nan)
    throw InvalidInput("format '" + name + "': infinity without NaN is not a supported policy");
  FloatFormat f{std::move(name), exponent_bits, mantissa_bits, bias, has_infinity, has_nan, true};
  if (!(f.max_finite() > 0.0)) throw InvalidInput("format '" + f.name + "': no positive finite value");
  return f;
}

namespace formats {
FloatFormat fp16() { return make_format("fp16", 5, 10, 15, true, true); }
FloatFormat fp8_e4m3() { return make_format("fp8e4m3", 4, 3, 7, false, true); }
FloatFormat fp8_e5m2() { return make_format("fp8e5m2", 5, 2, 15, true, true); }
FloatFormat fp4_e2m1() { return make_format("fp4e2m1", 2, 1, 1, false, false); }
}  // namespace formats

QuantizationConfig precision_from_name(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  QuantizationConfig cfg;
  if (key == "fp32") return cfg;
  if (key == "fp16") cfg.format = formats::fp16();
  else if (key == "fp8e4m3") cfg.format = formats::fp8_e4m3();
  else if (key == "fp8e5m2") cfg.format = formats::fp8_e5m2();
  else if (key == "fp4e2m1") cfg.format = formats::fp4_e2m1();
  else throw InvalidInput("unknown format '" + std::string(name) + "'");
  return cfg;
}

std::vector<double> enumerate_representables(const FloatFormat& f) {
  const int exp_fields = 1 << f.exponent_bits;
  const int mant_codes = 1 << f.mantissa_bits;
  std::vector<double> out;
  out.reserve(2 * static_cast<std::size_t>(exp_fields) * mant_codes);
  for (int e = 0; e < exp_fields; ++e) {
    if (top_exponent_reserved(f) && e == exp_fields - 1) continue;
    for (int m = 0; m < mant_codes; ++m) {
      if (top_code_is_nan(f) && e == exp_fields - 1 && m == mant_codes - 1) continue;
      const double v =
          e == 0 ? std::ldexp(static_cast<double>(m), f.min_normal_exponent() - f.mantissa_bits)
                 : std::ldexp(static_cast<double>(mant_codes + m), e - f.bias - f.mantissa_bits);
      out.push_back(v);
      if (v != 0.0) out.push_back(-v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double quantize(double x, const QuantizationConfig& cfg) {
  if (!std::isfinite(x)) throw InvalidInput("quantize: non-finite input");
  if (cfg.is_identity()) return x == 0.0 ? 0.0 : x;
  const FloatFormat& f = *cfg.format;

  const double a = std::fabs(x);
  if (a == 0.0) return 0.0;
  const double max_finite = f.max_finite();
  double r;
  if (a >= max_finite) {
    r = max_finite;
  } else {
    int e2;
    std::frexp(a, &e2);
    const int exponent = std::max(e2 - 1, f.min_normal_exponent());
    const int quantum_exp = exponent - f.mantissa_bits;
    // Scaled magnitude in units of the local spacing; exact for the ranges involved.
    const double scaled = std::ldexp(a, -quantum_exp);
    double n = std::floor(scaled);
    const double frac = scaled - n;
    if (frac > 0.5 || (frac == 0.5 && std::fmod(n, 2.0) != 0.0)) n += 1.0;
    r = std::min(std::ldexp(n, quantum_exp), max_finite);
  }
  if (r == 0.0) return 0.0;
  return x < 0.0 ? -r : r;
}

Eigen::VectorXd quantize_vector(const Eigen::Ref<const Eigen::VectorXd>& v,
                                const QuantizationConfig& cfg) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = quantize(v[i], cfg);
  return out;
}

}  // namespace lpsgd
