#include "lpsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <variant>

#include "lpsgd/csv.hpp"
#include "lpsgd/errors.hpp"

namespace lpsgd {

namespace {

constexpr std::int64_t kCalibrationSamples = 10000;

// Runs work(r) for r = 0..count-1 on a pool of threads, handing results to
// consume(r, result) strictly in index order. Results are buffered one batch
// at a time, so memory stays bounded and output never depends on scheduling.
template <class Work, class Consume>
void ordered_parallel_for(std::int64_t count, unsigned threads, Work&& work, Consume&& consume) {
  using Result = decltype(work(std::int64_t{0}));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads == 1) {
    for (std::int64_t r = 0; r < count; ++r) consume(r, work(r));
    return;
  }
  const std::int64_t batch = static_cast<std::int64_t>(threads) * 8;
  std::vector<std::optional<Result>> slots(static_cast<std::size_t>(batch));
  for (std::int64_t start = 0; start < count; start += batch) {
    const std::int64_t n = std::min(batch, count - start);
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
      for (std::int64_t i = next++; i < n; i = next++)
        slots[static_cast<std::size_t>(i)].emplace(work(start + i));
    };
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    for (std::int64_t i = 0; i < n; ++i) {
      consume(start + i, std::move(*slots[static_cast<std::size_t>(i)]));
      slots[static_cast<std::size_t>(i)].reset();
    }
  }
}

using Outcome = std::variant<Trajectory, ReplicationFailure>;

Outcome run_one(const ExperimentConfig& cfg, const ExperimentSetup& setup, std::int64_t r) {
  try {
    return run(setup.problem, setup.schedule, cfg.shrinkage, setup.w1, cfg.K,
               cfg.base_seed + static_cast<std::uint64_t>(r));
  } catch (const Divergence& e) {
    return ReplicationFailure{r, e.last_finite_k(), e.what()};
  }
}

// Welford accumulator.
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double sem() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

void require_valid(const ExperimentSetup& setup, bool allow) {
  const ScheduleValidation v = validate_schedule(setup.schedule, setup.constants);
  if (!v.passed && !allow)
    throw InvalidHypothesis("schedule fails the " + v.theorem + " hypothesis: " + v.detail);
}

}  // namespace

std::int64_t final_window(std::int64_t K) { return std::max<std::int64_t>(1, K / 10); }

ExperimentSetup prepare(const ExperimentConfig& cfg) {
  QuadraticProblem p = make_quadratic(cfg.problem.d, cfg.problem.c, cfg.problem.L,
                                      cfg.problem.sigma, cfg.problem.seed);
  Eigen::VectorXd w1 = point_at_gap(p, cfg.initial_gap, cfg.problem.seed + kInitSeedOffset);
  const double g0 = gap(p, w1);
  MomentConstants mc =
      cfg.shrinkage.is_synthetic()
          ? derive_constants(p, cfg.shrinkage)
          : estimate_constants(p, cfg.shrinkage, w1, kCalibrationSamples,
                               cfg.base_seed + kInitSeedOffset);
  StepsizeSchedule schedule = cfg.schedule;
  if (auto* h = std::get_if<HalvingStep>(&schedule); h && cfg.halving_phases)
    h->switch_iterations = halving_schedule(mc, h->alpha_1, *cfg.halving_phases);
  return ExperimentSetup{std::move(p), std::move(w1), g0, mc, std::move(schedule)};
}

ReplicatedStats run_replicated(const ExperimentConfig& cfg, const RunOptions& opts) {
  return run_replicated(cfg, prepare(cfg), opts);
}

ReplicatedStats run_replicated(const ExperimentConfig& cfg, const ExperimentSetup& setup,
                               const RunOptions& opts) {
  require_valid(setup, cfg.allow_invalid);
  const auto K = static_cast<std::size_t>(cfg.K);
  std::vector<Moments> gaps(K), grads(K), qs(K);
  Moments window;
  ReplicatedStats stats;
  stats.window = final_window(cfg.K);
  stats.stepsize.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    stats.stepsize[k] = stepsize_at(setup.schedule, static_cast<std::int64_t>(k) + 1);

  ordered_parallel_for(
      cfg.replications, opts.threads, [&](std::int64_t r) { return run_one(cfg, setup, r); },
      [&](std::int64_t, Outcome&& outcome) {
        if (auto* fail = std::get_if<ReplicationFailure>(&outcome)) {
          if (!cfg.allow_invalid)
            throw Divergence("replication " + std::to_string(fail->replication) + ": " +
                                 fail->message,
                             fail->last_finite_k);
          stats.failures.push_back(std::move(*fail));
          return;
        }
        const auto& recs = std::get<Trajectory>(outcome).records;
        double tail = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          gaps[k].add(recs[k].gap);
          grads[k].add(recs[k].grad_norm_sq);
          qs[k].add(recs[k].measured_q);
          if (k + static_cast<std::size_t>(stats.window) >= K) tail += recs[k].gap;
        }
        window.add(tail / static_cast<double>(stats.window));
        ++stats.replications_used;
      });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool any = stats.replications_used > 0;
  stats.mean_gap.resize(K);
  stats.sem_gap.resize(K);
  stats.mean_grad_norm_sq.resize(K);
  stats.mean_q.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    stats.mean_gap[k] = any ? gaps[k].mean : nan;
    stats.sem_gap[k] = any ? gaps[k].sem() : nan;
    stats.mean_grad_norm_sq[k] = any ? grads[k].mean : nan;
    stats.mean_q[k] = any ? qs[k].mean : nan;
  }
  stats.window_mean = any ? window.mean : nan;
  stats.window_sem = any ? window.sem() : nan;
  return stats;
}

BoundCurve bound_for(const ExperimentConfig& cfg, const ExperimentSetup& setup) {
  const MomentConstants& mc = setup.constants;
  if (const auto* f = std::get_if<FixedStep>(&setup.schedule))
    return bound_fixed(mc, f->alpha_bar, setup.initial_gap, cfg.K);
  if (const auto* d = std::get_if<DiminishingStep>(&setup.schedule))
    return bound_diminishing(mc, d->beta, d->gamma, setup.initial_gap, cfg.K);
  const auto& h = std::get<HalvingStep>(setup.schedule);
  return bound_halving(mc, h.alpha_1, h.switch_iterations, setup.initial_gap, cfg.K);
}

VerificationReport verify(const ExperimentConfig& cfg, const RunOptions& opts) {
  const ExperimentSetup setup = prepare(cfg);
  VerificationReport report;
  report.constants = setup.constants;
  report.validation = validate_schedule(setup.schedule, setup.constants);
  if (!report.validation.passed)
    throw InvalidHypothesis("schedule fails the " + report.validation.theorem +
                            " hypothesis: " + report.validation.detail);
  report.curve = bound_for(cfg, setup);

  const ReplicatedStats stats = run_replicated(cfg, setup, opts);

  std::int64_t passing = 0;
  report.rows.reserve(static_cast<std::size_t>(cfg.K));
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.K); ++i) {
    VerificationRow row;
    row.k = static_cast<std::int64_t>(i) + 1;
    row.mean_gap = stats.mean_gap[i];
    row.sem = stats.sem_gap[i];
    row.bound = report.curve.values[i];
    row.margin = row.bound - row.mean_gap;
    row.pass = row.mean_gap - 3.0 * row.sem <= row.bound;
    passing += row.pass ? 1 : 0;
    report.rows.push_back(row);
  }
  report.pass_fraction = static_cast<double>(passing) / static_cast<double>(cfg.K);
  report.window = stats.window;
  report.window_mean = stats.window_mean;
  report.window_sem = stats.window_sem;
  if (report.curve.kind == BoundKind::FixedStep)
    report.window_pass = report.window_mean <= report.curve.asymptote + 3.0 * report.window_sem;
  report.passed = passing == cfg.K && report.window_pass.value_or(true) &&
                  stats.replications_used > 0;
  return report;
}

void write_stats_csv(std::ostream& out, const ReplicatedStats& stats) {
  CsvWriter csv(out);
  csv.header({"k", "mean_gap", "sem_gap", "mean_grad_norm_sq", "stepsize", "mean_q"});
  for (std::size_t i = 0; i < stats.mean_gap.size(); ++i)
    csv.row({std::to_string(i + 1), format_double(stats.mean_gap[i]),
             format_double(stats.sem_gap[i]), format_double(stats.mean_grad_norm_sq[i]),
             format_double(stats.stepsize[i]), format_double(stats.mean_q[i])});
}

void write_verification_csv(std::ostream& out, const VerificationReport& report) {
  CsvWriter csv(out);
  csv.header({"k", "mean_gap", "sem", "bound", "margin", "pass"});
  for (const auto& r : report.rows)
    csv.row({std::to_string(r.k), format_double(r.mean_gap), format_double(r.sem),
             format_double(r.bound), format_double(r.margin), r.pass ? "1" : "0"});
}

void write_summary(std::ostream& out, const VerificationReport& report) {
  const auto& mc = report.constants;
  out << "hypothesis: " << report.validation.theorem << " "
      << (report.validation.passed ? "satisfied" : "violated") << " ("
      << report.validation.detail << ")\n";
  if (mc.estimated) out << "constants: estimated from a calibration run\n";
  out << "constants: mu_q=" << format_double(mc.mu_q()) << " M_tilde=" << format_double(mc.M_tilde())
      << " M_tilde_G=" << format_double(mc.M_tilde_G()) << " L=" << format_double(mc.L)
      << " c=" << format_double(mc.c) << '\n';
  const auto passing = std::count_if(report.rows.begin(), report.rows.end(),
                                     [](const VerificationRow& r) { return r.pass; });
  out << "iterations passing: " << passing << " of " << report.rows.size() << '\n';
  if (report.curve.kind == BoundKind::FixedStep) {
    out << "final window (" << report.window << " iterations): mean="
        << format_double(report.window_mean) << " sem=" << format_double(report.window_sem)
        << " asymptote=" << format_double(report.curve.asymptote) << " -> "
        << (report.window_pass.value_or(false) ? "pass" : "FAIL") << '\n';
  } else if (report.curve.kind == BoundKind::DiminishingStep) {
    out << "nu_q: " << format_double(report.curve.nu_q) << '\n';
  }
  out << "result: " << (report.passed ? "PASS" : "FAIL") << '\n';
}

void write_bound_csv(std::ostream& out, const BoundCurve& curve, const StepsizeSchedule& s) {
  CsvWriter csv(out);
  csv.header({"k", "stepsize", "bound"});
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    const auto k = static_cast<std::int64_t>(i) + 1;
    csv.row({std::to_string(k), format_double(stepsize_at(s, k)), format_double(curve.values[i])});
  }
}

void write_constants_csv(std::ostream& out, const MomentConstants& mc) {
  CsvWriter csv(out);
  csv.header({"name", "value"});
  const std::pair<const char*, double> rows[] = {
      {"mu", mc.mu},          {"mu_G", mc.mu_G},           {"q_min", mc.q_min},
      {"q_max", mc.q_max},    {"M", mc.M},                 {"M_V", mc.M_V},
      {"M_eps", mc.M_eps},    {"M_eps_V", mc.M_eps_V},     {"M_tilde", mc.M_tilde()},
      {"M_tilde_V", mc.M_tilde_V()}, {"M_tilde_G", mc.M_tilde_G()}, {"mu_q", mc.mu_q()},
      {"L", mc.L},            {"c", mc.c},                 {"estimated", mc.estimated ? 1.0 : 0.0}};
  for (const auto& [name, value] : rows) csv.row({name, format_double(value)});
}

Figure1Table figure1(double x_min, double x_max, std::int64_t n_points,
                     const std::vector<std::string>& formats) {
  if (n_points < 2) throw InvalidInput("figure1: need at least two points");
  if (!(x_min < x_max)) throw InvalidInput("figure1: require x_min < x_max");
  Figure1Table t;
  const auto n = static_cast<std::size_t>(n_points);
  t.x.resize(n);
  t.g.resize(n);
  const double step = (x_max - x_min) / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n; ++i) {
    t.x[i] = i + 1 == n ? x_max : x_min + static_cast<double>(i) * step;
    t.g[i] = std::exp(-0.2 * t.x[i]);
  }
  const Eigen::Map<const Eigen::VectorXd> g(t.g.data(), n_points);
  for (const auto& name : formats) {
    const QuantizationConfig cfg = precision_from_name(name);
    Figure1Column col;
    col.format = cfg.name();
    const Eigen::VectorXd gq = quantize_vector(g, cfg);
    col.values.assign(gq.data(), gq.data() + gq.size());
    col.q = measure_q(g, gq);
    t.columns.push_back(std::move(col));
  }
  return t;
}

void write_figure1_csv(std::ostream& out, const Figure1Table& table) {
  std::vector<std::string> fields;
  fields.reserve(table.columns.size() + 2);
  fields = {"x", "g"};
  for (const auto& col : table.columns) fields.push_back(col.format);
  CsvWriter csv(out);
  csv.row(fields);
  for (std::size_t i = 0; i < table.x.size(); ++i) {
    fields = {format_double(table.x[i]), format_double(table.g[i])};
    for (const auto& col : table.columns) fields.push_back(format_double(col.values[i]));
    csv.row(fields);
  }
  fields = {"q", "1"};
  for (const auto& col : table.columns) fields.push_back(format_double(col.q));
  csv.row(fields);
}

std::vector<SweepRow> slowdown_sweep(const ExperimentConfig& base_cfg,
                                     const std::vector<double>& q_values, double target_gap,
                                     const RunOptions& opts) {
  const auto* fixed = std::get_if<FixedStep>(&base_cfg.schedule);
  if (!fixed) throw ConfigError("slowdown sweep requires a fixed stepsize schedule");
  const double sigma_eps_sq = base_cfg.shrinkage.is_synthetic()
                                  ? base_cfg.shrinkage.synthetic_params().sigma_eps_sq
                                  : 0.0;
  std::vector<double> qs = q_values;
  std::sort(qs.begin(), qs.end(), std::greater<>());

  std::vector<SweepRow> rows;
  for (double q : qs) {
    ExperimentConfig cfg = base_cfg;
    cfg.shrinkage = ShrinkageModel::synthetic(ConstantQ{q}, sigma_eps_sq);
    const ExperimentSetup setup = prepare(cfg);
    const ScheduleValidation v = validate_schedule(setup.schedule, setup.constants);
    if (!v.passed)
      throw InvalidHypothesis("sweep at q=" + format_double(q) + ": " + v.detail);

    SweepRow row;
    row.q = q;
    row.contraction = 1.0 - fixed->alpha_bar * setup.constants.c * setup.constants.mu_q();
    row.asymptote = fixed_step_asymptote(setup.constants, fixed->alpha_bar);
    if (target_gap < row.asymptote) {
      row.status = "not reachable (below error floor)";
      rows.push_back(row);
      continue;
    }

    // gap(w1) reproduces initial_gap only to rounding.
    const double threshold = target_gap * (1.0 + 1e-12);
    constexpr double never = std::numeric_limits<double>::infinity();
    std::vector<double> hits;
    hits.reserve(static_cast<std::size_t>(cfg.replications));
    ordered_parallel_for(
        cfg.replications, opts.threads, [&](std::int64_t r) { return run_one(cfg, setup, r); },
        [&](std::int64_t, Outcome&& outcome) {
          if (auto* fail = std::get_if<ReplicationFailure>(&outcome))
            throw Divergence("sweep replication " + std::to_string(fail->replication) + ": " +
                                 fail->message,
                             fail->last_finite_k);
          double hit = never;
          for (const auto& rec : std::get<Trajectory>(outcome).records)
            if (rec.gap <= threshold) {
              hit = static_cast<double>(rec.k);
              break;
            }
          hits.push_back(hit);
        });
    std::sort(hits.begin(), hits.end());
    const std::size_t n = hits.size();
    const double median = n % 2 ? hits[n / 2] : 0.5 * (hits[n / 2 - 1] + hits[n / 2]);
    if (std::isfinite(median)) {
      row.iterations = median;
      row.status = "reached";
    } else {
      row.status = "not reached";
    }
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  CsvWriter csv(out);
  csv.header({"q", "iterations_to_target", "asymptote", "contraction", "status"});
  for (const auto& r : rows)
    csv.row({format_double(r.q), r.iterations ? format_double(*r.iterations) : "",
             format_double(r.asymptote), format_double(r.contraction), r.status});
}

}  // namespace lpsgd
