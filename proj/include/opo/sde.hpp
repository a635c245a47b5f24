#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "opo/filters.hpp"
#include "opo/model.hpp"
#include "opo/process.hpp"

// Stochastic realizations: the Ornstein-Uhlenbeck pump path, the latent
// quadrature trajectory with its correlated measurement records, and the
// full-information ground-truth filter. Everything is a pure function of
// (inputs, seed); Euler-Maruyama throughout.

namespace opo::sde {

using Eigen::Matrix2d;
using Eigen::Vector2d;
using Eigen::Vector3d;

inline std::vector<double> simulate_pump(const PumpProcess& pump,
                                         const SimGrid& grid,
                                         std::uint64_t seed) {
  pump.validate();
  grid.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(grid.dt);
  std::vector<double> path(grid.n_steps + 1);
  path[0] = pump.epsilon0;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    path[k + 1] = path[k] + pump.mu * (path[k] - pump.c) * grid.dt +
                  pump.g * sqrt_dt * normal(rng);
  }
  return path;
}

/// One trial's raw record. The single-channel increments equal the first
/// complete-channel increments exactly when the phases coincide: both are
/// emitted from the same noise draw per step.
struct Trajectory {
  std::vector<double> times;         // n+1
  std::vector<double> epsilon_true;  // n+1
  std::vector<Vector2d> x_latent;    // n+1
  std::vector<double> y_single;      // n, increments y*dt
  std::vector<Vector3d> y_complete;  // n
  std::vector<Vector2d> x_truth;     // n+1, filled by ground_truth_filter
  std::vector<Matrix2d> v_truth;     // n+1
};

inline Trajectory simulate_latent(const model::StateSpaceModel<1>& single,
                                  const model::StateSpaceModel<3>& complete,
                                  const std::vector<double>& pump_path,
                                  const SimGrid& grid, std::uint64_t seed,
                                  const Vector2d& x0 = Vector2d::Zero()) {
  grid.validate();
  if (pump_path.size() != grid.n_steps + 1)
    throw ConfigError("simulate_latent: pump path length does not match grid");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // dv has covariance (hbar/2) I dt per optical noise channel.
  const double noise_scale =
      std::sqrt(single.params.hbar / 2.0 * grid.dt);
  const double dt = grid.dt;

  Trajectory traj;
  traj.times.resize(grid.n_steps + 1);
  traj.epsilon_true = pump_path;
  traj.x_latent.reserve(grid.n_steps + 1);
  traj.y_single.resize(grid.n_steps);
  traj.y_complete.resize(grid.n_steps);

  Vector2d x = x0;
  traj.x_latent.push_back(x);
  traj.times[0] = 0.0;
  Eigen::Matrix<double, 6, 1> dv;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    for (int i = 0; i < 6; ++i) dv(i) = noise_scale * normal(rng);
    const Matrix2d a = single.drift(pump_path[k]);
    traj.y_single[k] = single.c.row(0).dot(x) * dt + single.m.row(0).dot(dv);
    traj.y_complete[k] = complete.c * x * dt + complete.m * dv;
    x += a * x * dt + single.b * dv;
    traj.x_latent.push_back(x);
    traj.times[k + 1] = static_cast<double>(k + 1) * dt;
  }
  return traj;
}

struct GroundTruthRun {
  std::vector<Vector2d> mean;
  std::vector<Matrix2d> cov;
  double min_det_margin{std::numeric_limits<double>::infinity()};
  std::size_t clip_count{0};
  bool diverged{false};
  std::size_t diverged_step{0};
};

/// Three-channel Kalman-Bucy filter run with the true pump path known at
/// every step; its output plays the role of the true state evolution.
inline GroundTruthRun ground_truth_filter(
    const model::StateSpaceModel<3>& complete,
    const std::vector<Vector3d>& y_complete,
    const std::vector<double>& epsilon_true, const SimGrid& grid,
    const filters::GaussianBelief& init) {
  grid.validate();
  if (y_complete.size() != grid.n_steps ||
      epsilon_true.size() != grid.n_steps + 1)
    throw ConfigError("ground_truth_filter: record length does not match grid");
  const double det_floor = complete.params.hbar * complete.params.hbar / 4.0;
  GroundTruthRun run;
  run.mean.reserve(grid.n_steps + 1);
  run.cov.reserve(grid.n_steps + 1);
  filters::GaussianBelief belief = init;
  run.mean.push_back(belief.mean);
  run.cov.push_back(belief.cov);
  run.min_det_margin = belief.cov.determinant() - det_floor;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    filters::kalman_bucy_step<3>(belief, complete.drift(epsilon_true[k]),
                                 complete, y_complete[k], grid.dt);
    if (filters::clip_psd(belief.cov)) ++run.clip_count;
    if (!belief.mean.allFinite() || !belief.cov.allFinite()) {
      run.diverged = true;
      run.diverged_step = k;
      break;
    }
    run.mean.push_back(belief.mean);
    run.cov.push_back(belief.cov);
    run.min_det_margin = std::min(run.min_det_margin,
                                  belief.cov.determinant() - det_floor);
  }
  return run;
}

}  // namespace opo::sde
