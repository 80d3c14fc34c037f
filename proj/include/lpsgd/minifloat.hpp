#pragma once

// Software emulation of reduced-precision binary floating-point formats.
//
// A format is described by its exponent/mantissa widths, exponent bias and
// special-value policy. Values are decoded to and rounded from double, which
// holds every value of every format with at most 16 bits exactly.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lpsgd {

/// Layout and special-value policy of a minifloat encoding.
///
/// Special values follow three conventions:
///  - has_infinity && has_nan: IEEE 754 style, top exponent field reserved.
///  - !has_infinity && has_nan: the "FN" convention, only the all-ones
///    exponent and mantissa pattern is NaN (FP8-E4M3).
///  - neither: every code point is finite (FP4-E2M1).
struct FloatFormat {
  std::string name;
  int exponent_bits = 0;
  int mantissa_bits = 0;
  int bias = 0;
  bool has_infinity = false;
  bool has_nan = false;
  bool supports_subnormals = true;

  int total_bits() const { return 1 + exponent_bits + mantissa_bits; }
  int min_normal_exponent() const { return 1 - bias; }
  int max_normal_exponent() const;
  double max_finite() const;
  double min_positive() const;

  friend bool operator==(const FloatFormat&, const FloatFormat&) = default;
};

/// Builds a custom format, enforcing exponent_bits >= 2, mantissa_bits >= 1,
/// total width <= 16 and a special-value policy listed above.
FloatFormat make_format(std::string name, int exponent_bits, int mantissa_bits, int bias,
                        bool has_infinity, bool has_nan);

namespace formats {
FloatFormat fp16();
FloatFormat fp8_e4m3();
FloatFormat fp8_e5m2();
FloatFormat fp4_e2m1();
}  // namespace formats

enum class Rounding { NearestTiesToEven };
enum class OverflowPolicy { SaturateToMaxFinite };

/// Quantizer settings. An empty `format` is the fp32 identity pass-through.
struct QuantizationConfig {
  std::optional<FloatFormat> format;
  Rounding rounding = Rounding::NearestTiesToEven;
  OverflowPolicy overflow = OverflowPolicy::SaturateToMaxFinite;

  bool is_identity() const { return !format.has_value(); }
  std::string name() const { return format ? format->name : "fp32"; }

  friend bool operator==(const QuantizationConfig&, const QuantizationConfig&) = default;
};

/// Resolves one of fp32, fp16, fp8e4m3, fp8e5m2, fp4e2m1 (case-insensitive).
/// Throws InvalidInput for anything else.
QuantizationConfig precision_from_name(std::string_view name);

/// Every finite value of `format`, ascending, with -0 folded into +0.
std::vector<double> enumerate_representables(const FloatFormat& format);

/// Round-to-nearest-even, saturating at +-max_finite. Throws InvalidInput on
/// non-finite `x`. Never returns -0.
double quantize(double x, const QuantizationConfig& cfg);

Eigen::VectorXd quantize_vector(const Eigen::Ref<const Eigen::VectorXd>& v,
                                const QuantizationConfig& cfg);

}  // namespace lpsgd
