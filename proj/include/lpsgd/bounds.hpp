#pragma once

// Moment constants of the shrunk stochastic gradient and the closed-form
// expected-gap bounds for fixed, halving and diminishing stepsizes.

#include <cstdint>
#include <vector>

#include "lpsgd/problems.hpp"
#include "lpsgd/shrinkage.hpp"

namespace lpsgd {

/// Constants bounding the first two moments of g_tilde.
///
/// Primitive scalars are stored; the quantized composites are computed from
/// them on access so they can never drift from their definitions:
///   M_tilde   = q_max^2 M   + M_eps
///   M_tilde_V = q_max^2 M_V + M_eps_V
///   M_tilde_G = M_tilde_V + q_max^2 mu_G^2
///   mu_q      = q_min mu
struct MomentConstants {
  double mu = 1.0;
  double mu_G = 1.0;
  double q_min = 1.0;
  double q_max = 1.0;
  double M = 0.0;
  double M_V = 0.0;
  double M_eps = 0.0;
  double M_eps_V = 0.0;
  double L = 1.0;
  double c = 1.0;
  /// True when q_min, q_max and M_eps were measured rather than derived.
  bool estimated = false;

  double M_tilde() const { return q_max * q_max * M + M_eps; }
  double M_tilde_V() const { return q_max * q_max * M_V + M_eps_V; }
  double M_tilde_G() const { return M_tilde_V() + q_max * q_max * mu_G * mu_G; }
  double mu_q() const { return q_min * mu; }

  /// Largest stepsize admitted by the fixed-step theorem, mu_q / (L M_tilde_G).
  double max_stepsize() const { return mu_q() / (L * M_tilde_G()); }

  /// Throws InvalidHypothesis unless mu_G >= mu > 0, 0 < q_min <= q_max <= 1
  /// (the upper limit is waived for estimates), M_tilde_G >= mu_q^2 and
  /// 0 < c <= L.
  void check() const;
};

/// Exact constants for synthetic shrinkage on a quadratic: mu = mu_G = 1,
/// M = sigma^2 d, M_V = 0, M_eps = sigma_eps_sq, M_eps_V = 0. Throws
/// ConstantsNotDerivable for format quantization; use estimate_constants.
MomentConstants derive_constants(const QuadraticProblem& p, const ShrinkageModel& model);

/// Calibration estimate for format quantization: draws `n_samples`
/// stochastic gradients at `w`, quantizes them, and takes q_min / q_max as the
/// extremes of the measured norm ratio and M_eps as the largest squared
/// orthogonal residual. The result is flagged `estimated`.
MomentConstants estimate_constants(const QuadraticProblem& p, const ShrinkageModel& model,
                                   const Eigen::Ref<const Eigen::VectorXd>& w,
                                   std::int64_t n_samples, std::uint64_t seed);

enum class BoundKind { FixedStep, HalvingStep, DiminishingStep };

struct BoundCurve {
  BoundKind kind = BoundKind::FixedStep;
  /// values[k-1] bounds E[F(w_k) - F*], k = 1..K.
  std::vector<double> values;
  /// FixedStep: the error floor alpha L M_tilde / (2 c mu_q).
  double asymptote = 0.0;
  /// FixedStep: 1 - alpha c mu_q.
  double contraction = 0.0;
  /// DiminishingStep only.
  double nu_q = 0.0;
};

/// Right-hand side of the one-step descent inequality at stepsize alpha:
/// -(mu_q - alpha L M_tilde_G / 2) alpha ||grad F||^2 + alpha^2 L M_tilde / 2.
double one_step_descent_bound(const MomentConstants& mc, double alpha, double grad_norm_sq);

/// alpha L M_tilde / (2 c mu_q).
double fixed_step_asymptote(const MomentConstants& mc, double alpha_bar);

BoundCurve bound_fixed(const MomentConstants& mc, double alpha_bar, double initial_gap,
                       std::int64_t K);

/// Phase-wise bound for alpha_r = alpha_1 2^-r: the one-step recursion
/// B_{k+1} = (1 - alpha_k c mu_q) B_k + alpha_k^2 L M_tilde / 2 with the
/// stepsize in force at k. Requires alpha_1 <= max_stepsize().
BoundCurve bound_halving(const MomentConstants& mc, double alpha_1,
                         const std::vector<std::int64_t>& switch_iterations, double initial_gap,
                         std::int64_t K);

/// nu_q = max{beta^2 L M_tilde / (2 (beta c mu_q - 1)), (gamma + 1) initial_gap}.
double nu_q(const MomentConstants& mc, double beta, double gamma, double initial_gap);

BoundCurve bound_diminishing(const MomentConstants& mc, double beta, double gamma,
                             double initial_gap, std::int64_t K);

/// rho = (M_tilde / M_full) (beta c mu - 1) / (beta c mu_q - 1).
double inflation_factor(const MomentConstants& mc, double M_full, double beta);

struct NuComparison {
  double A = 0.0;  ///< beta^2 L M_full / (2 (beta c mu - 1))
  double B = 0.0;  ///< (gamma + 1) initial_gap
  double rho = 0.0;
  double nu = 0.0;
  double nu_q = 0.0;
};

NuComparison nu_comparison(const MomentConstants& mc, double M_full, double beta, double gamma,
                           double initial_gap);

/// Switch iterations for the halving schedule: phase r lasts
/// ceil(ln 3 / (alpha_1 2^-r c mu_q)) iterations; returns the cumulative sums.
std::vector<std::int64_t> halving_schedule(const MomentConstants& mc, double alpha_1,
                                           std::int64_t num_phases);

}  // namespace lpsgd
