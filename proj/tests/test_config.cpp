#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "lpsgd/config.hpp"
#include "lpsgd/errors.hpp"

using namespace lpsgd;

namespace {

const char* kBase = R"(# theorem 1 style run
d = 10
c = 1
L = 10
sigma = 0.1
problem_seed = 7
shrinkage = synthetic
q_law = constant
q = 0.5
sigma_eps_sq = 0
schedule = fixed
alpha_bar = 0.2
K = 500
replications = 20
base_seed = 1
initial_gap = 10
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse a complete config") {
  const auto cfg = parse_config(kBase);
  CHECK(cfg.problem.d == 10);
  CHECK(cfg.problem.c == 1.0);
  CHECK(cfg.problem.L == 10.0);
  CHECK(cfg.problem.sigma == 0.1);
  CHECK(cfg.problem.seed == 7);
  CHECK(cfg.shrinkage == ShrinkageModel::synthetic(ConstantQ{0.5}, 0.0));
  CHECK(cfg.schedule == StepsizeSchedule{FixedStep{0.2}});
  CHECK(cfg.K == 500);
  CHECK(cfg.replications == 20);
  CHECK(cfg.base_seed == 1);
  CHECK(cfg.initial_gap == 10.0);
  CHECK(cfg.output.empty());
  CHECK_FALSE(cfg.allow_invalid);
  CHECK_FALSE(cfg.halving_phases);
}

TEST_CASE("variants") {
  auto cfg = parse_config(replace(kBase, "q_law = constant\nq = 0.5",
                                  "q_law = uniform\nq_min = 0.4\nq_max = 0.8"));
  CHECK(cfg.shrinkage == ShrinkageModel::synthetic(UniformQ{0.4, 0.8}, 0.0));

  cfg = parse_config(replace(kBase, "shrinkage = synthetic\nq_law = constant\nq = 0.5\nsigma_eps_sq = 0",
                             "shrinkage = FP8E4M3"));
  CHECK(cfg.shrinkage == ShrinkageModel::quantized(precision_from_name("fp8e4m3")));

  cfg = parse_config(replace(kBase, "schedule = fixed\nalpha_bar = 0.2",
                             "schedule = diminishing\nbeta = 8\ngamma = 39"));
  CHECK(cfg.schedule == StepsizeSchedule{DiminishingStep{8, 39}});

  cfg = parse_config(replace(kBase, "schedule = fixed\nalpha_bar = 0.2",
                             "schedule = halving\nalpha_1 = 0.1\nswitch_iterations = 22, 66"));
  CHECK(cfg.schedule == StepsizeSchedule{HalvingStep{0.1, {22, 66}}});

  cfg = parse_config(replace(kBase, "schedule = fixed\nalpha_bar = 0.2",
                             "schedule = halving\nalpha_1 = 0.1\nnum_phases = 3"));
  CHECK(cfg.halving_phases == 3);

  cfg = parse_config(std::string(kBase) + "output = out.csv   # trailing comment\nallow_invalid = true\n");
  CHECK(cfg.output == "out.csv");
  CHECK(cfg.allow_invalid);
}

TEST_CASE("rejections carry a useful message") {
  CHECK(error_of(std::string(kBase) + "colour = blue\n").find("line 17") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "K = 3\n").find("duplicate") != std::string::npos);
  CHECK(error_of(replace(kBase, "K = 500\n", "")).find("'K'") != std::string::npos);
  CHECK(error_of(replace(kBase, "K = 500", "K = many")).find("'K'") != std::string::npos);
  CHECK(error_of(replace(kBase, "K = 500", "K 500")).find("key = value") != std::string::npos);
  CHECK(error_of(replace(kBase, "K = 500", "K =")) != "");
  CHECK(error_of(replace(kBase, "sigma = 0.1", "sigma = nan")) != "");
  CHECK(error_of(replace(kBase, "sigma = 0.1", "sigma = -1")) != "");
  CHECK(error_of(replace(kBase, "c = 1", "c = 20")) != "");
  CHECK(error_of(replace(kBase, "d = 10", "d = 0")) != "");
  CHECK(error_of(replace(kBase, "K = 500", "K = 0")) != "");
  CHECK(error_of(replace(kBase, "replications = 20", "replications = 0")) != "");
  CHECK(error_of(replace(kBase, "base_seed = 1", "base_seed = -1")) != "");
  CHECK(error_of(replace(kBase, "q = 0.5", "q = 1.5")).find("shrinkage") != std::string::npos);
  CHECK(error_of(replace(kBase, "q_law = constant", "q_law = beta")) != "");
  CHECK(error_of(replace(kBase, "schedule = fixed", "schedule = cosine")) != "");
  // Inapplicable keys: gamma with a fixed schedule, q on a format model.
  CHECK(error_of(std::string(kBase) + "gamma = 3\n").find("inapplicable") != std::string::npos);
  CHECK(error_of(replace(kBase, "shrinkage = synthetic", "shrinkage = fp16")) != "");
  // Halving needs exactly one source of switch points.
  const std::string halving = replace(kBase, "schedule = fixed\nalpha_bar = 0.2",
                                      "schedule = halving\nalpha_1 = 0.1");
  CHECK(error_of(halving) != "");
  CHECK(error_of(halving + "\nnum_phases = 2\nswitch_iterations = 5\n") != "");
  CHECK(error_of(halving + "\nswitch_iterations = 9, 3\n") != "");
  CHECK(error_of(std::string(kBase) + "allow_invalid = maybe\n") != "");
}

TEST_CASE("load_config") {
  const auto path = std::filesystem::temp_directory_path() / "lpsgd_test_config.cfg";
  {
    std::ofstream out(path);
    out << kBase;
  }
  CHECK(load_config(path) == parse_config(kBase));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("text form round-trips") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  const std::vector<std::string> formats{"fp32", "fp16", "fp8e4m3", "fp8e5m2", "fp4e2m1"};
  for (int i = 0; i < 300; ++i) {
    ExperimentConfig cfg;
    cfg.problem.d = 1 + static_cast<std::int64_t>(u(gen) * 50);
    cfg.problem.c = u(gen) + 1e-3;
    cfg.problem.L = cfg.problem.c * (1 + 100 * u(gen));
    if (cfg.problem.d == 1) cfg.problem.L = cfg.problem.c;
    cfg.problem.sigma = u(gen);
    cfg.problem.seed = gen();
    switch (pick(gen)) {
      case 0:
        cfg.shrinkage = ShrinkageModel::synthetic(ConstantQ{0.01 + 0.99 * u(gen)}, u(gen));
        break;
      case 1: {
        const double a = 0.01 + 0.49 * u(gen);
        cfg.shrinkage = ShrinkageModel::synthetic(UniformQ{a, a + 0.5 * u(gen)}, 0.0);
        break;
      }
      default:
        cfg.shrinkage = ShrinkageModel::quantized(precision_from_name(formats[gen() % formats.size()]));
    }
    switch (pick(gen)) {
      case 0: cfg.schedule = FixedStep{u(gen)}; break;
      case 1: cfg.schedule = DiminishingStep{1 + 10 * u(gen), 100 * u(gen)}; break;
      default:
        if (u(gen) < 0.5) {
          cfg.schedule = HalvingStep{u(gen), {}};
          cfg.halving_phases = static_cast<std::int64_t>(10 * u(gen));
        } else {
          cfg.schedule = HalvingStep{u(gen), {3, 17, 17, 400}};
        }
    }
    cfg.K = 1 + static_cast<std::int64_t>(1e5 * u(gen));
    cfg.replications = 1 + static_cast<std::int64_t>(1e3 * u(gen));
    cfg.base_seed = gen();
    cfg.initial_gap = 100 * u(gen);
    if (u(gen) < 0.3) cfg.output = "results/run " + std::to_string(i) + ".csv";
    cfg.allow_invalid = u(gen) < 0.2;

    const std::string text = to_config_text(cfg);
    CAPTURE(text);
    REQUIRE(parse_config(text) == cfg);
    REQUIRE(to_config_text(parse_config(text)) == text);
  }
}
