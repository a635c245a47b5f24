#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "opo/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariantFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalFailure = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool fast = false;
};

opo::harness::ExperimentConfig load_config(const CommonOptions& opts) {
  auto cfg = opts.config_path.empty()
                 ? opo::harness::ExperimentConfig{}
                 : opo::harness::ExperimentConfig::load(opts.config_path);
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.out_dir) cfg.out_dir = *opts.out_dir;
  if (opts.fast) cfg.n_trials = std::min<std::size_t>(cfg.n_trials, 200);
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--seed", opts.seed, "override the master seed");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_flag("--fast", opts.fast, "cap the trial count at 200");
}

void print_summary(const opo::harness::RpiSummary& s) {
  for (int m = 0; m < 2; ++m) {
    for (int q = 0; q < 3; ++q) {
      std::cout << opo::harness::kMethodNames[m] << " RPI("
                << opo::harness::kQuantityNames[q]
                << ") = " << 100.0 * s.values[m][q].mean_rpi << "% +- "
                << 100.0 * s.values[m][q].sem << "%\n";
    }
  }
  std::cout << "trials = " << s.n_trials << ", diverged = " << s.n_diverged
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OPO state and pump-power estimation toolkit"};
  app.require_subcommand(1);

  CommonOptions single_opts, case_opts, sweep_opts, check_opts;
  std::size_t trial_index = 0;
  std::string sweep_param;

  auto* single = app.add_subcommand(
      "single-trial", "simulate one trial and dump its trajectory");
  add_common(single, single_opts);
  single->add_option("--trial", trial_index, "trial index (default 0)");

  auto* case_study = app.add_subcommand(
      "case-study", "Monte Carlo study; writes case_study.csv and a figure");
  add_common(case_study, case_opts);

  auto* sweep = app.add_subcommand(
      "sweep", "Monte Carlo parameter sweep; writes sweep_<param>.csv");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param,
                    "swept parameter: T, g or c (overrides config)");

  auto* check = app.add_subcommand("check-invariants",
                                   "run the model-consistency check suite");
  add_common(check, check_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (single->parsed()) {
      auto cfg = load_config(single_opts);
      auto result =
          opo::harness::run_single_trial(cfg, trial_index, /*keep_paths=*/true);
      if (result.diverged) {
        std::cerr << "trial diverged at step " << result.diverged_step << "\n";
        return kExitNumericalFailure;
      }
      std::filesystem::create_directories(cfg.out_dir);
      const auto base = std::filesystem::path(cfg.out_dir);
      opo::harness::write_trajectory_csv((base / "trajectory.csv").string(),
                                         *result.paths);
      opo::harness::write_trial_figure((base / "trial.svg").string(),
                                       *result.paths);
      for (int m = 0; m < 2; ++m)
        for (int q = 0; q < 3; ++q)
          std::cout << opo::harness::kMethodNames[m] << " RPI("
                    << opo::harness::kQuantityNames[q]
                    << ") = " << 100.0 * result.rpi[m][q] << "%\n";
      std::cout << "wrote " << (base / "trajectory.csv").string() << "\n";
    } else if (case_study->parsed()) {
      auto cfg = load_config(case_opts);
      print_summary(opo::harness::run_case_study(cfg));
    } else if (sweep->parsed()) {
      auto cfg = load_config(sweep_opts);
      if (!sweep_param.empty()) {
        opo::harness::SweepSpec spec;
        spec.param = opo::harness::sweep_param_from_name(sweep_param);
        spec.values = cfg.sweep && cfg.sweep->param == spec.param
                          ? cfg.sweep->values
                          : opo::harness::default_sweep_grid(spec.param);
        cfg.sweep = spec;
      }
      if (!cfg.sweep)
        throw opo::ConfigError("sweep requires --param or a config sweep spec");
      const auto points = opo::harness::run_sweep(cfg);
      for (const auto& pt : points) {
        std::cout << opo::harness::sweep_param_name(cfg.sweep->param) << " = "
                  << pt.value << ": dual-kf RPI(eps) = "
                  << 100.0 * pt.summary.values[0][0].mean_rpi
                  << "%, joint-ekf RPI(eps) = "
                  << 100.0 * pt.summary.values[1][0].mean_rpi << "%\n";
      }
    } else if (check->parsed()) {
      auto cfg = load_config(check_opts);
      return opo::harness::check_invariants(cfg, std::cout) == 0
                 ? kExitOk
                 : kExitInvariantFailure;
    }
  } catch (const opo::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const opo::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
  return kExitOk;
}
