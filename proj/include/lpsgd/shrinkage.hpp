#pragma once

// Low-precision gradients modelled as g_tilde = q * g + eps: measurement of
// the shrinkage factor from observed pairs, and synthetic generation.

#include <string>
#include <variant>

#include <Eigen/Core>

#include "lpsgd/minifloat.hpp"
#include "lpsgd/random.hpp"

namespace lpsgd {

struct ShrinkageObservation {
  double q = 1.0;
  double eps_norm_sq = 0.0;
  std::string format;  // format name, or "synthetic"
};

struct ConstantQ {
  double q = 1.0;
  friend bool operator==(const ConstantQ&, const ConstantQ&) = default;
};

struct UniformQ {
  double q_min = 1.0;
  double q_max = 1.0;
  friend bool operator==(const UniformQ&, const UniformQ&) = default;
};

using QLaw = std::variant<ConstantQ, UniformQ>;

/// q_k drawn from `q_law` independently of the gradient; eps_k isotropic
/// Gaussian with total variance E||eps||^2 = sigma_eps_sq.
struct SyntheticShrinkage {
  QLaw q_law = ConstantQ{};
  double sigma_eps_sq = 0.0;

  double q_min() const;
  double q_max() const;
  friend bool operator==(const SyntheticShrinkage&, const SyntheticShrinkage&) = default;
};

/// g_tilde = quantize_vector(g, cfg).
struct FormatQuantization {
  QuantizationConfig cfg;
  friend bool operator==(const FormatQuantization&, const FormatQuantization&) = default;
};

class ShrinkageModel {
 public:
  using Mode = std::variant<FormatQuantization, SyntheticShrinkage>;

  /// Validates 0 < q_min <= q_max <= 1 and sigma_eps_sq >= 0.
  static ShrinkageModel synthetic(QLaw q_law, double sigma_eps_sq);
  static ShrinkageModel quantized(QuantizationConfig cfg);
  /// q = 1, eps = 0.
  static ShrinkageModel full_precision() { return synthetic(ConstantQ{1.0}, 0.0); }

  const Mode& mode() const { return mode_; }
  bool is_synthetic() const { return std::holds_alternative<SyntheticShrinkage>(mode_); }
  const SyntheticShrinkage& synthetic_params() const;
  std::string label() const;

  friend bool operator==(const ShrinkageModel&, const ShrinkageModel&) = default;

 private:
  explicit ShrinkageModel(Mode mode) : mode_(std::move(mode)) {}
  Mode mode_;
};

/// ||g_tilde|| / ||g||. Throws UndefinedRatio when ||g|| = 0.
double measure_q(const Eigen::Ref<const Eigen::VectorXd>& g,
                 const Eigen::Ref<const Eigen::VectorXd>& g_tilde);

struct Decomposition {
  double q_hat = 0.0;
  Eigen::VectorXd eps;
};

/// Least-squares split g_tilde = q_hat * g + eps with eps orthogonal to g.
Decomposition decompose(const Eigen::Ref<const Eigen::VectorXd>& g,
                        const Eigen::Ref<const Eigen::VectorXd>& g_tilde);

/// One draw of q_k from the law.
double draw_q(const QLaw& law, RandomSource& rng);

/// Fills `eps` with zero-mean Gaussian noise of per-coordinate variance
/// sigma_eps_sq / eps.size(). Consumes no randomness when sigma_eps_sq = 0.
void draw_noise(double sigma_eps_sq, Eigen::Ref<Eigen::VectorXd> eps, RandomSource& rng);

struct ShrunkGradient {
  Eigen::VectorXd g_tilde;
  ShrinkageObservation observation;
};

ShrunkGradient sample_shrunk_gradient(const ShrinkageModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& g,
                                      RandomSource& rng);

}  // namespace lpsgd
