#include "lpsgd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidHypothesis(what);
}

void check_horizon(double initial_gap, std::int64_t K) {
  require(initial_gap >= 0.0 && std::isfinite(initial_gap), "initial gap must be finite and >= 0");
  require(K >= 1, "horizon K must be >= 1");
}

}  // namespace

void MomentConstants::check() const {
  require(mu > 0.0 && mu_G >= mu, "require mu_G >= mu > 0");
  require(q_min > 0.0 && q_min <= q_max, "require 0 < q_min <= q_max");
  require(estimated || q_max <= 1.0, "require q_max <= 1");
  require(M >= 0.0 && M_V >= 0.0 && M_eps >= 0.0 && M_eps_V >= 0.0,
          "moment constants must be nonnegative");
  require(M_tilde_G() >= mu_q() * mu_q(), "require M_tilde_G >= mu_q^2");
  require(c > 0.0 && c <= L, "require 0 < c <= L");
}

MomentConstants derive_constants(const QuadraticProblem& p, const ShrinkageModel& model) {
  if (!model.is_synthetic())
    throw ConstantsNotDerivable(
        "moment constants of format quantization have no closed form; estimate them from "
        "decompose statistics with estimate_constants");
  const SyntheticShrinkage& s = model.synthetic_params();
  MomentConstants mc;
  mc.mu = 1.0;
  mc.mu_G = 1.0;
  mc.q_min = s.q_min();
  mc.q_max = s.q_max();
  mc.M = p.sigma() * p.sigma() * static_cast<double>(p.dim());
  mc.M_V = 0.0;
  mc.M_eps = s.sigma_eps_sq;
  mc.M_eps_V = 0.0;
  mc.L = p.L();
  mc.c = p.c();
  return mc;
}

MomentConstants estimate_constants(const QuadraticProblem& p, const ShrinkageModel& model,
                                   const Eigen::Ref<const Eigen::VectorXd>& w,
                                   std::int64_t n_samples, std::uint64_t seed) {
  if (model.is_synthetic()) return derive_constants(p, model);
  if (n_samples < 1) throw InvalidInput("estimate_constants: need at least one sample");
  RandomSource rng(seed);
  double q_lo = std::numeric_limits<double>::infinity();
  double q_hi = 0.0;
  double eps_max = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd g = stochastic_gradient(p, w, rng);
    if (g.squaredNorm() == 0.0) continue;
    const ShrunkGradient s = sample_shrunk_gradient(model, g, rng);
    q_lo = std::min(q_lo, s.observation.q);
    q_hi = std::max(q_hi, s.observation.q);
    eps_max = std::max(eps_max, s.observation.eps_norm_sq);
  }
  if (!(q_lo > 0.0)) throw UndefinedRatio("estimate_constants: quantized gradients vanished");
  MomentConstants mc;
  mc.q_min = q_lo;
  mc.q_max = q_hi;
  mc.M = p.sigma() * p.sigma() * static_cast<double>(p.dim());
  mc.M_eps = eps_max;
  mc.L = p.L();
  mc.c = p.c();
  mc.estimated = true;
  return mc;
}

double one_step_descent_bound(const MomentConstants& mc, double alpha, double grad_norm_sq) {
  return -(mc.mu_q() - 0.5 * alpha * mc.L * mc.M_tilde_G()) * alpha * grad_norm_sq +
         0.5 * alpha * alpha * mc.L * mc.M_tilde();
}

double fixed_step_asymptote(const MomentConstants& mc, double alpha_bar) {
  return alpha_bar * mc.L * mc.M_tilde() / (2.0 * mc.c * mc.mu_q());
}

BoundCurve bound_fixed(const MomentConstants& mc, double alpha_bar, double initial_gap,
                       std::int64_t K) {
  mc.check();
  check_horizon(initial_gap, K);
  require(alpha_bar > 0.0 && alpha_bar <= mc.max_stepsize(),
          "fixed stepsize must satisfy 0 < alpha <= mu_q / (L M_tilde_G)");
  BoundCurve curve;
  curve.kind = BoundKind::FixedStep;
  curve.asymptote = fixed_step_asymptote(mc, alpha_bar);
  curve.contraction = 1.0 - alpha_bar * mc.c * mc.mu_q();
  require(curve.contraction >= 0.0 && curve.contraction < 1.0,
          "contraction factor outside [0, 1)");
  curve.values.resize(static_cast<std::size_t>(K));
  curve.values[0] = initial_gap;
  double deviation = initial_gap - curve.asymptote;
  for (std::size_t k = 1; k < curve.values.size(); ++k) {
    deviation *= curve.contraction;
    curve.values[k] = curve.asymptote + deviation;
  }
  return curve;
}

BoundCurve bound_halving(const MomentConstants& mc, double alpha_1,
                         const std::vector<std::int64_t>& switch_iterations, double initial_gap,
                         std::int64_t K) {
  mc.check();
  check_horizon(initial_gap, K);
  require(alpha_1 > 0.0 && alpha_1 <= mc.max_stepsize(),
          "halving schedule requires 0 < alpha_1 <= mu_q / (L M_tilde_G)");
  require(std::is_sorted(switch_iterations.begin(), switch_iterations.end()),
          "switch iterations must be nondecreasing");
  BoundCurve curve;
  curve.kind = BoundKind::HalvingStep;
  curve.values.resize(static_cast<std::size_t>(K));
  curve.values[0] = initial_gap;
  std::size_t passed = 0;
  for (std::int64_t k = 1; k < K; ++k) {
    while (passed < switch_iterations.size() && switch_iterations[passed] <= k) ++passed;
    const double alpha = std::ldexp(alpha_1, -static_cast<int>(passed));
    const double prev = curve.values[static_cast<std::size_t>(k - 1)];
    curve.values[static_cast<std::size_t>(k)] =
        (1.0 - alpha * mc.c * mc.mu_q()) * prev + 0.5 * alpha * alpha * mc.L * mc.M_tilde();
  }
  return curve;
}

double nu_q(const MomentConstants& mc, double beta, double gamma, double initial_gap) {
  const double noise_term =
      beta * beta * mc.L * mc.M_tilde() / (2.0 * (beta * mc.c * mc.mu_q() - 1.0));
  return std::max(noise_term, (gamma + 1.0) * initial_gap);
}

BoundCurve bound_diminishing(const MomentConstants& mc, double beta, double gamma,
                             double initial_gap, std::int64_t K) {
  mc.check();
  check_horizon(initial_gap, K);
  require(gamma > 0.0, "diminishing schedule requires gamma > 0");
  require(beta * mc.c * mc.mu_q() > 1.0, "diminishing schedule requires beta > 1 / (c mu_q)");
  require(beta / (gamma + 1.0) <= mc.max_stepsize(),
          "diminishing schedule requires alpha_1 = beta / (gamma + 1) <= mu_q / (L M_tilde_G)");
  BoundCurve curve;
  curve.kind = BoundKind::DiminishingStep;
  curve.nu_q = nu_q(mc, beta, gamma, initial_gap);
  curve.values.resize(static_cast<std::size_t>(K));
  for (std::int64_t k = 1; k <= K; ++k)
    curve.values[static_cast<std::size_t>(k - 1)] = curve.nu_q / (gamma + static_cast<double>(k));
  return curve;
}

double inflation_factor(const MomentConstants& mc, double M_full, double beta) {
  const double full_margin = beta * mc.c * mc.mu - 1.0;
  const double quant_margin = beta * mc.c * mc.mu_q() - 1.0;
  require(full_margin > 0.0, "inflation factor requires beta c mu > 1");
  require(quant_margin > 0.0, "inflation factor requires beta c mu_q > 1");
  require(M_full > 0.0, "inflation factor requires a positive full-precision noise constant");
  return (mc.M_tilde() / M_full) * full_margin / quant_margin;
}

NuComparison nu_comparison(const MomentConstants& mc, double M_full, double beta, double gamma,
                           double initial_gap) {
  require(initial_gap >= 0.0, "initial gap must be >= 0");
  NuComparison out;
  out.rho = inflation_factor(mc, M_full, beta);
  out.A = beta * beta * mc.L * M_full / (2.0 * (beta * mc.c * mc.mu - 1.0));
  out.B = (gamma + 1.0) * initial_gap;
  out.nu = std::max(out.A, out.B);
  out.nu_q = std::max(out.rho * out.A, out.B);
  return out;
}

std::vector<std::int64_t> halving_schedule(const MomentConstants& mc, double alpha_1,
                                           std::int64_t num_phases) {
  mc.check();
  require(alpha_1 > 0.0 && alpha_1 <= mc.max_stepsize(),
          "halving schedule requires 0 < alpha_1 <= mu_q / (L M_tilde_G)");
  require(num_phases >= 0, "number of phases must be >= 0");
  std::vector<std::int64_t> switches;
  switches.reserve(static_cast<std::size_t>(num_phases));
  std::int64_t total = 0;
  for (std::int64_t r = 0; r < num_phases; ++r) {
    const double alpha_r = std::ldexp(alpha_1, -static_cast<int>(r));
    total += static_cast<std::int64_t>(std::ceil(std::log(3.0) / (alpha_r * mc.c * mc.mu_q())));
    switches.push_back(total);
  }
  return switches;
}

}  // namespace lpsgd
