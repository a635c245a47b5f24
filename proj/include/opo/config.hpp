#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opo/model.hpp"
#include "opo/process.hpp"

#include "json.hpp"

namespace opo::harness {

enum class SweepParam { kTransmittance, kDiffusion, kTendency };

std::string sweep_param_name(SweepParam p);
SweepParam sweep_param_from_name(const std::string& name);
std::vector<double> default_sweep_grid(SweepParam p);

struct SweepSpec {
  SweepParam param{SweepParam::kTransmittance};
  std::vector<double> values;
};

struct ExperimentConfig {
  model::PhysicalParams physical{};
  sde::PumpProcess pump{};
  // When unset in the config file, epsilon0 tracks the tendency constant and
  // the extra homodyne phases track theta_m.
  bool epsilon0_explicit{false};
  std::optional<double> theta_lb;
  std::optional<double> theta_lc;

  double dt{1e-3};
  double t_final{100.0};
  std::size_t n_trials{1000};
  std::uint64_t master_seed{20260826};
  double burn_in{0.0};  // seconds excluded from the RPI integrals
  model::BNormalization b_normalization{model::BNormalization::kConsistent};
  Eigen::Vector2d x0{Eigen::Vector2d::Zero()};
  std::optional<SweepSpec> sweep;
  unsigned workers{0};  // 0 = hardware concurrency
  std::string out_dir{"out"};

  sde::SimGrid grid() const { return sde::SimGrid::from_horizon(dt, t_final); }
  double theta_lb_value() const {
    return theta_lb.value_or(physical.theta_m);
  }
  double theta_lc_value() const {
    return theta_lc.value_or(physical.theta_m);
  }
  std::size_t burn_in_steps() const;

  void validate() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;
};

}  // namespace opo::harness
