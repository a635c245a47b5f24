#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "opo/errors.hpp"

namespace opo::metrics {

/// Relative performance improvement:
/// 1 - integral((est - truth)^2 dt) / integral((baseline - truth)^2 dt),
/// left-endpoint Riemann sums. A path of n+1 points integrates over n
/// intervals; burn_in_steps initial intervals are excluded.
///
/// A zero baseline integral with a zero estimate integral is the degenerate
/// "baseline against itself" case and yields 0; a zero baseline integral with
/// a nonzero estimate integral has no defined ratio and throws.
inline double rpi(std::span<const double> estimate,
                  std::span<const double> truth,
                  std::span<const double> baseline, double dt,
                  std::size_t burn_in_steps = 0) {
  if (estimate.size() != truth.size() || baseline.size() != truth.size())
    throw ConfigError("rpi: paths must have equal length");
  if (truth.size() < 2) throw ConfigError("rpi: paths need at least 2 points");
  if (!(dt > 0.0)) throw ConfigError("rpi: dt must be > 0");
  const std::size_t n = truth.size() - 1;
  if (burn_in_steps >= n)
    throw ConfigError("rpi: burn-in exceeds the integration window");
  double mse_est = 0.0, mse_base = 0.0;
  for (std::size_t k = burn_in_steps; k < n; ++k) {
    const double de = estimate[k] - truth[k];
    const double db = baseline[k] - truth[k];
    mse_est += de * de;
    mse_base += db * db;
  }
  mse_est *= dt;
  mse_base *= dt;
  if (mse_base <= 0.0) {
    if (mse_est <= 0.0) return 0.0;
    throw UndefinedMetricError("rpi: baseline MSE integral is zero");
  }
  return 1.0 - mse_est / mse_base;
}

struct MeanSem {
  double mean{0.0};
  double sem{0.0};
};

/// Arithmetic mean and standard error sqrt(sum((x - m)^2) / (N (N-1))).
inline MeanSem mean_sem(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw ConfigError("mean_sem: need at least 2 values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sem =
      std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
  return {mean, sem};
}

}  // namespace opo::metrics
