#pragma once

// SGD on a quadratic with shrunk gradients:
//   w_{k+1} = w_k - alpha_k q_k g_k - alpha_k eps_k
// The schedule symbol alpha_k plays the role of the nominal stepsize; the
// true gradient is scaled by the effective stepsize alpha_k q_k.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "lpsgd/bounds.hpp"
#include "lpsgd/problems.hpp"
#include "lpsgd/shrinkage.hpp"

namespace lpsgd {

struct FixedStep {
  double alpha_bar = 0.0;
  friend bool operator==(const FixedStep&, const FixedStep&) = default;
};

/// alpha_k = beta / (gamma + k).
struct DiminishingStep {
  double beta = 0.0;
  double gamma = 0.0;
  friend bool operator==(const DiminishingStep&, const DiminishingStep&) = default;
};

/// alpha_k = alpha_1 2^-r where r is the number of switch iterations <= k.
struct HalvingStep {
  double alpha_1 = 0.0;
  std::vector<std::int64_t> switch_iterations;
  friend bool operator==(const HalvingStep&, const HalvingStep&) = default;
};

using StepsizeSchedule = std::variant<FixedStep, DiminishingStep, HalvingStep>;

/// Stepsize in force at iteration k >= 1.
double stepsize_at(const StepsizeSchedule& s, std::int64_t k);

struct ScheduleValidation {
  bool passed = false;
  /// "fixed-step" or "diminishing-step": which convergence theorem the
  /// hypothesis check refers to.
  std::string theorem;
  std::string detail;
};

/// Checks the schedule against the stepsize hypothesis of the matching
/// bound. Never throws; failures are reported.
ScheduleValidation validate_schedule(const StepsizeSchedule& s, const MomentConstants& mc);

struct TrajectoryRecord {
  std::int64_t k = 0;
  double gap = 0.0;           ///< F(w_k) - F*
  double grad_norm_sq = 0.0;  ///< ||grad F(w_k)||^2
  double stepsize = 0.0;      ///< alpha_k applied to leave w_k
  double measured_q = 0.0;    ///< q_k of the gradient applied at k
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;  ///< k = 1..K
  Eigen::VectorXd final_w;                ///< w_{K+1}
};

/// K steps from w1 with a RandomSource seeded by `seed`. Records describe the
/// state w_k before the k-th update. Throws Divergence on a non-finite gap.
Trajectory run(const QuadraticProblem& p, const StepsizeSchedule& s, const ShrinkageModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& w1, std::int64_t K, std::uint64_t seed);

struct OneStepEstimate {
  double mean_next_F = 0.0;
  double sem = 0.0;
};

/// Monte-Carlo estimate of E[F(w - alpha g_tilde)] over the gradient noise,
/// q_k and eps_k, with its standard error. Requires n_samples >= 1000.
OneStepEstimate one_step_expectation(const QuadraticProblem& p,
                                     const Eigen::Ref<const Eigen::VectorXd>& w, double alpha,
                                     const ShrinkageModel& model, std::int64_t n_samples,
                                     std::uint64_t seed);

}  // namespace lpsgd
