#pragma once

// Experiment configuration and its flat key-value file representation.
//
//   # comment
//   d = 10
//   c = 1
//   L = 10
//   sigma = 0.1
//   problem_seed = 7
//   shrinkage = synthetic        # or fp32, fp16, fp8e4m3, fp8e5m2, fp4e2m1
//   q_law = constant             # synthetic only: constant | uniform
//   q = 0.5                      # constant law
//   sigma_eps_sq = 0             # synthetic only
//   schedule = fixed             # fixed | diminishing | halving
//   alpha_bar = 0.2
//   K = 5000
//   replications = 1000
//   base_seed = 1
//   initial_gap = 10
//
// Uniform laws take q_min and q_max; diminishing schedules take beta and
// gamma; halving schedules take alpha_1 and either switch_iterations (a
// comma-separated list) or num_phases. Optional keys: output, allow_invalid.
// Unknown, duplicate and inapplicable keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "lpsgd/sgd.hpp"
#include "lpsgd/shrinkage.hpp"

namespace lpsgd {

struct ProblemParams {
  std::int64_t d = 1;
  double c = 1.0;
  double L = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const ProblemParams&, const ProblemParams&) = default;
};

struct ExperimentConfig {
  ProblemParams problem;
  ShrinkageModel shrinkage = ShrinkageModel::full_precision();
  StepsizeSchedule schedule = FixedStep{};
  /// Halving only: derive switch iterations from the moment constants
  /// instead of taking them from the file.
  std::optional<std::int64_t> halving_phases;
  std::int64_t K = 1;
  std::int64_t replications = 1;
  std::uint64_t base_seed = 0;
  double initial_gap = 1.0;
  std::string output;
  /// Lets run_replicated execute schedules that fail validation and drop
  /// diverged replications instead of failing.
  bool allow_invalid = false;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws ConfigError with the offending line number.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(cfg)) == cfg.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace lpsgd
