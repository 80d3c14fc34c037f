#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lpsgd/config.hpp"
#include "lpsgd/errors.hpp"
#include "lpsgd/harness.hpp"

using namespace lpsgd;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.problem = {5, 1.0, 10.0, 0.1, 3};
  cfg.shrinkage = ShrinkageModel::synthetic(ConstantQ{0.5}, 0.0);
  cfg.schedule = FixedStep{0.1};
  cfg.K = 200;
  cfg.replications = 40;
  cfg.base_seed = 11;
  cfg.initial_gap = 5.0;
  return cfg;
}

}  // namespace

TEST_CASE("final_window") {
  CHECK(final_window(1) == 1);
  CHECK(final_window(9) == 1);
  CHECK(final_window(10) == 1);
  CHECK(final_window(200) == 20);
  CHECK(final_window(5005) == 500);
}

TEST_CASE("prepare") {
  const auto cfg = small_config();
  const auto setup = prepare(cfg);
  CHECK(setup.initial_gap == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(setup.initial_gap == gap(setup.problem, setup.w1));
  CHECK(setup.constants.mu_q() == 0.5);
  CHECK(setup.problem.L() == 10.0);

  auto halving = cfg;
  halving.schedule = HalvingStep{0.1, {}};
  halving.halving_phases = 2;
  const auto hs = prepare(halving);
  // ln 3 / (0.1 * 1 * 0.5) = 21.97 -> 22; then 44.
  CHECK(std::get<HalvingStep>(hs.schedule).switch_iterations == std::vector<std::int64_t>{22, 66});

  auto fmt = cfg;
  fmt.shrinkage = ShrinkageModel::quantized(precision_from_name("fp16"));
  const auto fs = prepare(fmt);
  CHECK(fs.constants.estimated);
  CHECK(fs.constants.q_min == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("replicated statistics") {
  auto cfg = small_config();
  SUBCASE("one replication has zero standard error") {
    cfg.replications = 1;
    const auto s = run_replicated(cfg);
    for (double e : s.sem_gap) REQUIRE(e == 0.0);
    CHECK(s.window_sem == 0.0);
  }
  SUBCASE("thread count does not change the output") {
    const auto a = run_replicated(cfg, RunOptions{1});
    const auto b = run_replicated(cfg, RunOptions{3});
    CHECK(a.mean_gap == b.mean_gap);
    CHECK(a.sem_gap == b.sem_gap);
    CHECK(a.mean_q == b.mean_q);
    CHECK(a.window_mean == b.window_mean);
  }
  SUBCASE("matches a hand-rolled loop over seeds base_seed + r") {
    const auto setup = prepare(cfg);
    const auto s = run_replicated(cfg, setup);
    std::vector<double> sum(cfg.K, 0.0), sum_sq(cfg.K, 0.0);
    for (std::int64_t r = 0; r < cfg.replications; ++r) {
      const auto t = run(setup.problem, setup.schedule, cfg.shrinkage, setup.w1, cfg.K,
                         cfg.base_seed + static_cast<std::uint64_t>(r));
      for (std::int64_t k = 0; k < cfg.K; ++k) {
        sum[k] += t.records[k].gap;
        sum_sq[k] += t.records[k].gap * t.records[k].gap;
      }
    }
    const double n = static_cast<double>(cfg.replications);
    for (std::int64_t k = 0; k < cfg.K; ++k) {
      const double mean = sum[k] / n;
      const double var = std::max(0.0, (sum_sq[k] - n * mean * mean) / (n - 1));
      REQUIRE(s.mean_gap[k] == doctest::Approx(mean).epsilon(1e-12));
      REQUIRE(s.sem_gap[k] == doctest::Approx(std::sqrt(var / n)).epsilon(1e-6).scale(1e-12));
      REQUIRE(s.stepsize[k] == 0.1);
      REQUIRE(s.mean_q[k] == 0.5);
    }
    CHECK(s.replications_used == cfg.replications);
    CHECK(s.window == 20);
  }
  SUBCASE("without noise every replication is identical") {
    cfg.problem.sigma = 0.0;
    const auto s = run_replicated(cfg);
    for (double e : s.sem_gap) REQUIRE(e == 0.0);
  }
  SUBCASE("invalid schedule") {
    cfg.schedule = FixedStep{10.0};
    CHECK_THROWS_AS(run_replicated(cfg), InvalidHypothesis);
    cfg.allow_invalid = true;
    cfg.K = 2000;
    const auto s = run_replicated(cfg);
    CHECK(s.failures.size() + static_cast<std::size_t>(s.replications_used) ==
          static_cast<std::size_t>(cfg.replications));
  }
}

TEST_CASE("verify") {
  auto cfg = small_config();
  SUBCASE("constant shrinkage, fixed step") {
    const auto r = verify(cfg);
    CHECK(r.validation.passed);
    CHECK(r.passed);
    CHECK(r.pass_fraction == 1.0);
    REQUIRE(r.window_pass.has_value());
    CHECK(*r.window_pass);
    CHECK(r.rows.size() == 200);
    CHECK(r.rows.front().bound == doctest::Approx(5.0).epsilon(1e-12));
    for (const auto& row : r.rows) REQUIRE(row.margin == doctest::Approx(row.bound - row.mean_gap));
  }
  SUBCASE("full precision, diminishing step") {
    cfg.shrinkage = ShrinkageModel::full_precision();
    cfg.schedule = DiminishingStep{2.0, 19.0};
    const auto r = verify(cfg);
    CHECK(r.passed);
    CHECK_FALSE(r.window_pass.has_value());
    CHECK(r.curve.kind == BoundKind::DiminishingStep);
  }
  SUBCASE("halving step") {
    cfg.schedule = HalvingStep{0.1, {}};
    cfg.halving_phases = 3;
    CHECK(verify(cfg).passed);
  }
  SUBCASE("invalid beta is rejected before running") {
    cfg.schedule = DiminishingStep{1.0, 19.0};  // beta c mu_q = 0.5
    CHECK_THROWS_AS(verify(cfg), InvalidHypothesis);
  }
}

TEST_CASE("csv output is reproducible byte for byte") {
  const auto cfg = small_config();
  std::ostringstream a, b;
  write_verification_csv(a, verify(cfg, RunOptions{1}));
  write_verification_csv(b, verify(cfg, RunOptions{2}));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("k,mean_gap,sem,bound,margin,pass\n", 0) == 0);

  std::ostringstream s1, s2;
  write_stats_csv(s1, run_replicated(cfg));
  write_stats_csv(s2, run_replicated(cfg));
  CHECK(s1.str() == s2.str());
}

TEST_CASE("figure1 table") {
  const auto t = figure1(0.0, 40.0, 401, {"fp32", "fp16", "fp4e2m1"});
  REQUIRE(t.x.size() == 401);
  CHECK(t.x.front() == 0.0);
  CHECK(t.x.back() == 40.0);
  REQUIRE(t.columns.size() == 3);
  CHECK(t.columns[0].values == t.g);
  CHECK(t.columns[0].q == 1.0);
  for (std::size_t i = 0; i < t.g.size(); ++i) {
    CHECK(t.g[i] == std::exp(-0.2 * t.x[i]));
    if (t.g[i] < 0.25) REQUIRE(t.columns[2].values[i] == 0.0);
  }
  CHECK(t.columns[2].q == doctest::Approx(1.0617456127800708).epsilon(1e-12));

  std::ostringstream out;
  write_figure1_csv(out, t);
  const std::string csv = out.str();
  CHECK(csv.rfind("x,g,fp32,fp16,fp4e2m1\n", 0) == 0);
  CHECK(csv.find("\nq,1,1,") != std::string::npos);

  CHECK_THROWS(figure1(0.0, 40.0, 1, {"fp16"}));
  CHECK_THROWS(figure1(5.0, 1.0, 10, {"fp16"}));
  CHECK_THROWS(figure1(0.0, 40.0, 10, {"bf16"}));
}

TEST_CASE("slowdown sweep") {
  auto cfg = small_config();
  cfg.replications = 10;
  cfg.K = 400;
  const auto rows = slowdown_sweep(cfg, {0.25, 1.0, 0.5}, 0.5);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].q == 1.0);
  CHECK(rows[1].q == 0.5);
  CHECK(rows[2].q == 0.25);
  for (const auto& row : rows) {
    // alpha L q^2 M / (2 c q), M = sigma^2 d
    const double asym = 0.1 * 10.0 * row.q * row.q * (0.01 * 5) / (2.0 * row.q);
    CHECK(row.asymptote == doctest::Approx(asym).epsilon(1e-12));
    CHECK(row.contraction == doctest::Approx(1 - 0.1 * row.q).epsilon(1e-15));
    REQUIRE(row.iterations.has_value());
    CHECK(row.status == "reached");
  }
  CHECK(*rows[0].iterations < *rows[1].iterations);
  CHECK(*rows[1].iterations < *rows[2].iterations);

  SUBCASE("target equal to the initial gap is hit immediately") {
    const auto r = slowdown_sweep(cfg, {1.0}, cfg.initial_gap);
    CHECK(*r[0].iterations == 1.0);
  }
  SUBCASE("targets below the error floor are flagged") {
    const auto r = slowdown_sweep(cfg, {1.0}, 1e-6);
    CHECK_FALSE(r[0].iterations.has_value());
    CHECK(r[0].status == "not reachable (below error floor)");
  }
  SUBCASE("non-fixed schedules are rejected") {
    cfg.schedule = DiminishingStep{4, 39};
    CHECK_THROWS(slowdown_sweep(cfg, {1.0}, 0.5));
  }
  SUBCASE("csv") {
    std::ostringstream out;
    write_sweep_csv(out, rows);
    CHECK(out.str().rfind("q,iterations_to_target,asymptote,contraction,status\n", 0) == 0);
  }
}
