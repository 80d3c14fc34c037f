// lpsgd: command-line front end for the low-precision SGD laboratory.
//
//   lpsgd quantize <value> --format fp8e4m3
//   lpsgd figure1 [--xmin 0] [--xmax 40] [--points 400] [--formats fp32,fp16,...] [--out f.csv]
//   lpsgd run     --config exp.cfg [--out stats.csv]
//   lpsgd bounds  --config exp.cfg [--out bound.csv] [--constants constants.csv]
//   lpsgd verify  --config exp.cfg [--out report.csv]
//   lpsgd sweep   --config exp.cfg --q-values 1,0.5,0.25 --target 0.5 [--out sweep.csv]
//
// `--out -` (the default when neither the flag nor the config's `output` key
// is set) writes CSV to standard output; summaries then go to standard error.
// Exit status: 0 success, 1 verification failed, 2 usage or runtime error.

#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpsgd/config.hpp"
#include "lpsgd/csv.hpp"
#include "lpsgd/errors.hpp"
#include "lpsgd/harness.hpp"
#include "lpsgd/minifloat.hpp"

namespace {

using lpsgd::format_double;

// Opens the destination and hands the CSV stream plus the stream that should
// carry human-readable summaries to `body`.
void with_output(const std::string& path, const std::function<void(std::ostream&, std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout, std::cerr);
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw lpsgd::Error("cannot open output file '" + path + "'");
  body(file, std::cout);
  file.close();
  if (!file) throw lpsgd::Error("failed writing '" + path + "'");
}

std::string resolve_out(const std::string& flag, const lpsgd::ExperimentConfig& cfg) {
  return flag.empty() ? cfg.output : flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-precision SGD laboratory: minifloat quantizers, shrinkage-model SGD and "
               "convergence-bound verification"};
  app.require_subcommand(1);

  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for replications (0 = all cores)");

  // quantize
  auto* quantize_cmd = app.add_subcommand("quantize", "Round a value to a low-precision format");
  double value = 0.0;
  std::string format_name;
  quantize_cmd->add_option("value", value, "Finite real value")->required();
  quantize_cmd->add_option("--format", format_name, "fp32, fp16, fp8e4m3, fp8e5m2 or fp4e2m1")
      ->required();

  // figure1
  auto* fig_cmd = app.add_subcommand("figure1", "Quantize exp(-0.2 x) and report shrinkage q");
  double x_min = 0.0;
  double x_max = 40.0;
  std::int64_t points = 400;
  std::vector<std::string> fig_formats{"fp32", "fp16", "fp8e4m3", "fp8e5m2", "fp4e2m1"};
  std::string fig_out;
  fig_cmd->add_option("--xmin", x_min, "Grid start")->capture_default_str();
  fig_cmd->add_option("--xmax", x_max, "Grid end")->capture_default_str();
  fig_cmd->add_option("--points", points, "Number of grid points")->capture_default_str();
  fig_cmd->add_option("--formats", fig_formats, "Formats to quantize with")->delimiter(',');
  fig_cmd->add_option("--out", fig_out, "Output CSV ('-' for stdout)");

  // run / bounds / verify share --config and --out
  std::string config_path;
  std::string out_path;
  auto* run_cmd = app.add_subcommand("run", "Replicated SGD runs; per-iteration statistics");
  auto* bounds_cmd = app.add_subcommand("bounds", "Theoretical bound curve only");
  auto* verify_cmd = app.add_subcommand("verify", "Compare replicated runs against the bound");
  auto* sweep_cmd = app.add_subcommand("sweep", "Iterations-to-target across shrinkage factors");
  for (auto* cmd : {run_cmd, bounds_cmd, verify_cmd, sweep_cmd}) {
    cmd->add_option("--config", config_path, "Experiment config file")->required()->check(
        CLI::ExistingFile);
    cmd->add_option("--out", out_path, "Output CSV ('-' for stdout)");
  }
  std::string constants_path;
  bounds_cmd->add_option("--constants", constants_path, "Also write moment constants CSV here");
  std::vector<double> q_values;
  double target = 0.0;
  sweep_cmd->add_option("--q-values", q_values, "Shrinkage factors")->delimiter(',')->required();
  sweep_cmd->add_option("--target", target, "Target optimality gap")->required();

  CLI11_PARSE(app, argc, argv);
  const lpsgd::RunOptions opts{threads};

  try {
    if (*quantize_cmd) {
      std::cout << format_double(lpsgd::quantize(value, lpsgd::precision_from_name(format_name)))
                << '\n';
      return 0;
    }
    if (*fig_cmd) {
      const auto table = lpsgd::figure1(x_min, x_max, points, fig_formats);
      with_output(fig_out, [&](std::ostream& csv, std::ostream& log) {
        lpsgd::write_figure1_csv(csv, table);
        for (const auto& col : table.columns)
          log << "q(" << col.format << ") = " << format_double(col.q) << '\n';
      });
      return 0;
    }

    const lpsgd::ExperimentConfig cfg = lpsgd::load_config(config_path);
    const std::string out = resolve_out(out_path, cfg);

    if (*run_cmd) {
      const auto stats = lpsgd::run_replicated(cfg, opts);
      with_output(out, [&](std::ostream& csv, std::ostream& log) {
        lpsgd::write_stats_csv(csv, stats);
        log << "replications: " << stats.replications_used << " used, " << stats.failures.size()
            << " diverged\n";
        for (const auto& f : stats.failures)
          log << "  replication " << f.replication << ": " << f.message << '\n';
      });
      return 0;
    }
    if (*bounds_cmd) {
      const auto setup = lpsgd::prepare(cfg);
      const auto curve = lpsgd::bound_for(cfg, setup);
      with_output(out, [&](std::ostream& csv, std::ostream&) {
        lpsgd::write_bound_csv(csv, curve, setup.schedule);
      });
      if (!constants_path.empty())
        with_output(constants_path, [&](std::ostream& csv, std::ostream&) {
          lpsgd::write_constants_csv(csv, setup.constants);
        });
      return 0;
    }
    if (*verify_cmd) {
      const auto report = lpsgd::verify(cfg, opts);
      with_output(out, [&](std::ostream& csv, std::ostream& log) {
        lpsgd::write_verification_csv(csv, report);
        lpsgd::write_summary(log, report);
      });
      return report.passed ? 0 : 1;
    }
    if (*sweep_cmd) {
      const auto rows = lpsgd::slowdown_sweep(cfg, q_values, target, opts);
      with_output(out, [&](std::ostream& csv, std::ostream&) { lpsgd::write_sweep_csv(csv, rows); });
      return 0;
    }
  } catch (const lpsgd::Divergence& e) {
    std::cerr << "error: " << e.what() << " (last finite k = " << e.last_finite_k() << ")\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
