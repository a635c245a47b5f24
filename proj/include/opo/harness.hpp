#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "opo/config.hpp"
#include "opo/filters.hpp"
#include "opo/metrics.hpp"
#include "opo/sde.hpp"

namespace opo::harness {

// Method and quantity indices used throughout the result tables.
inline constexpr std::array<const char*, 2> kMethodNames = {"dual-kf",
                                                            "joint-ekf"};
inline constexpr std::array<const char*, 3> kQuantityNames = {"eps", "q", "p"};

struct TrialPaths {
  std::vector<double> times;
  std::vector<double> eps_true;
  std::vector<Eigen::Vector2d> x_latent;
  std::vector<double> y_m, y_lb, y_lc;
  std::vector<Eigen::Vector2d> x_truth;
  std::vector<double> det_v_truth;
  std::vector<Eigen::Vector2d> x_baseline, x_dual, x_joint;
  std::vector<double> eps_dual, eps_joint;
};

struct TrialResult {
  bool diverged{false};
  std::size_t diverged_step{0};
  // RPIs indexed [method][quantity] as in kMethodNames/kQuantityNames.
  std::array<std::array<double, 3>, 2> rpi{};
  double min_det_margin{0.0};  // min over all filter covariance paths
  std::size_t clip_count{0};
  std::shared_ptr<TrialPaths> paths;  // only when requested
};

struct QuantitySummary {
  double mean_rpi{0.0};
  double sem{0.0};
};

struct RpiSummary {
  std::array<std::array<QuantitySummary, 3>, 2> values{};
  std::size_t n_trials{0};
  std::size_t n_diverged{0};
};

struct SweepPoint {
  double value{0.0};
  RpiSummary summary;
};

TrialResult run_single_trial(const ExperimentConfig& config,
                             std::size_t trial_index, bool keep_paths = false);

/// Run n_trials trials concurrently; results are keyed by trial index so the
/// aggregation is order-independent.
std::vector<TrialResult> run_trials(const ExperimentConfig& config);

RpiSummary aggregate(const std::vector<TrialResult>& trials);

/// Monte Carlo case study; writes case_study.csv and a three-panel figure
/// of trial 0 into config.out_dir.
RpiSummary run_case_study(const ExperimentConfig& config);

/// One Monte Carlo run per grid point of the configured sweep; writes
/// sweep_<param>.csv and a figure with SEM error bars.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config);

/// Model-consistency, steady-state and sampling checks as an itemized
/// report. Returns 0 iff everything passes (expected-fails under the
/// paper B normalization count as passes).
struct InvariantCheckOptions {
  std::size_t property_sweep_points{100};
  std::size_t ou_paths{100};
  double ou_t_final{1e4};
  double ou_dt{1e-2};
};
int check_invariants(const ExperimentConfig& config, std::ostream& report,
                     const InvariantCheckOptions& opts = {});

void write_case_study_csv(const std::string& path, const RpiSummary& summary);
void write_sweep_csv(const std::string& path, SweepParam param,
                     const std::vector<SweepPoint>& points);
void write_trajectory_csv(const std::string& path, const TrialPaths& paths);
void write_trial_figure(const std::string& path, const TrialPaths& paths);
void write_sweep_figure(const std::string& path, SweepParam param,
                        const std::vector<SweepPoint>& points);

}  // namespace opo::harness
