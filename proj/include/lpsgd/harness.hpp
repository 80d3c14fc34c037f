#pragma once

// Experiment orchestration: replicated runs, empirical-versus-bound checks,
// the quantized decaying-signal table and the shrinkage slowdown sweep.
//
// Replication r (0-based) runs with seed base_seed + r. The starting point is
// drawn once per experiment from seed problem_seed + kInitSeedOffset.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lpsgd/bounds.hpp"
#include "lpsgd/config.hpp"
#include "lpsgd/minifloat.hpp"
#include "lpsgd/problems.hpp"
#include "lpsgd/sgd.hpp"

namespace lpsgd {

inline constexpr std::uint64_t kInitSeedOffset = 0x9E3779B97F4A7C15ULL;

/// Problem, starting point and constants shared by all replications.
struct ExperimentSetup {
  QuadraticProblem problem;
  Eigen::VectorXd w1;
  /// gap(w1); equals cfg.initial_gap up to rounding.
  double initial_gap = 0.0;
  MomentConstants constants;
  /// Schedule with halving switch points resolved.
  StepsizeSchedule schedule;
};

/// Builds the problem and w1, derives (synthetic) or estimates (format
/// quantization) the moment constants and resolves the schedule.
ExperimentSetup prepare(const ExperimentConfig& cfg);

struct ReplicationFailure {
  std::int64_t replication = 0;
  std::int64_t last_finite_k = 0;
  std::string message;
};

struct ReplicatedStats {
  /// Per-iteration statistics, index k-1.
  std::vector<double> mean_gap;
  std::vector<double> sem_gap;  ///< 0 when fewer than two replications
  std::vector<double> mean_grad_norm_sq;
  std::vector<double> stepsize;
  std::vector<double> mean_q;
  std::int64_t replications_used = 0;
  std::vector<ReplicationFailure> failures;
  /// Mean gap over the last `window` iterations, averaged over replications,
  /// and its standard error across replications.
  std::int64_t window = 0;
  double window_mean = 0.0;
  double window_sem = 0.0;
};

struct RunOptions {
  /// Worker threads; 0 picks the hardware concurrency. Output does not
  /// depend on this value.
  unsigned threads = 0;
};

/// Final-window length used for steady-state summaries: max(1, K / 10).
std::int64_t final_window(std::int64_t K);

/// Runs cfg.replications independent trajectories. Throws InvalidHypothesis
/// if the schedule fails validation and Divergence if a replication diverges,
/// unless cfg.allow_invalid is set.
ReplicatedStats run_replicated(const ExperimentConfig& cfg, const RunOptions& opts = {});
ReplicatedStats run_replicated(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                               const RunOptions& opts = {});

/// Bound curve matching the configured schedule.
BoundCurve bound_for(const ExperimentConfig& cfg, const ExperimentSetup& setup);

struct VerificationRow {
  std::int64_t k = 0;
  double mean_gap = 0.0;
  double sem = 0.0;
  double bound = 0.0;
  double margin = 0.0;  ///< bound - mean_gap
  bool pass = false;    ///< mean_gap - 3 sem <= bound
};

struct VerificationReport {
  std::vector<VerificationRow> rows;
  BoundCurve curve;
  MomentConstants constants;
  ScheduleValidation validation;
  double pass_fraction = 0.0;
  std::int64_t window = 0;
  double window_mean = 0.0;
  double window_sem = 0.0;
  /// FixedStep only: window_mean <= asymptote + 3 window_sem.
  std::optional<bool> window_pass;
  bool passed = false;
};

/// Compares replicated empirical gaps with the matching bound. Throws
/// InvalidHypothesis before any run when the schedule fails validation.
VerificationReport verify(const ExperimentConfig& cfg, const RunOptions& opts = {});

void write_stats_csv(std::ostream& out, const ReplicatedStats& stats);
void write_verification_csv(std::ostream& out, const VerificationReport& report);
void write_summary(std::ostream& out, const VerificationReport& report);
void write_bound_csv(std::ostream& out, const BoundCurve& curve, const StepsizeSchedule& s);
void write_constants_csv(std::ostream& out, const MomentConstants& mc);

struct Figure1Column {
  std::string format;
  std::vector<double> values;
  double q = 1.0;
};

struct Figure1Table {
  std::vector<double> x;
  std::vector<double> g;
  std::vector<Figure1Column> columns;
};

/// Samples g(x) = exp(-0.2 x) on n_points evenly spaced points of
/// [x_min, x_max] and quantizes it with each named format.
Figure1Table figure1(double x_min, double x_max, std::int64_t n_points,
                     const std::vector<std::string>& formats);

/// Columns x, g and one per format, then a final row "q" holding the
/// measured norm ratio of each column.
void write_figure1_csv(std::ostream& out, const Figure1Table& table);

struct SweepRow {
  double q = 1.0;
  double contraction = 0.0;
  double asymptote = 0.0;
  /// Median first k with gap <= target; empty when not reached.
  std::optional<double> iterations;
  /// "reached", "not reached" or "not reachable (below error floor)".
  std::string status;
};

/// For each q, reruns base_cfg with synthetic constant shrinkage q (keeping
/// the base noise variance). Requires a fixed schedule. Rows are sorted by q
/// descending.
std::vector<SweepRow> slowdown_sweep(const ExperimentConfig& base_cfg,
                                     const std::vector<double>& q_values, double target_gap,
                                     const RunOptions& opts = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace lpsgd
