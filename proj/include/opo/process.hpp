#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "opo/errors.hpp"

namespace opo::sde {

/// Mean-reverting (Ornstein-Uhlenbeck) pump power:
/// d(eps) = mu*(eps - c)*dt + g*dv, with mu < 0.
struct PumpProcess {
  double mu{-0.01};      // drift coefficient (rad/s), < 0
  double c{0.5};         // tendency constant
  double g{0.028};       // diffusion coefficient
  double epsilon0{0.5};  // initial pump value

  void validate() const {
    if (!(mu < 0.0)) throw ConfigError("pump mu must be < 0");
    if (!(g >= 0.0)) throw ConfigError("pump g must be >= 0");
    if (!std::isfinite(c) || !std::isfinite(epsilon0))
      throw ConfigError("pump c and epsilon0 must be finite");
  }

  double stationary_variance() const { return g * g / (2.0 * -mu); }
};

struct SimGrid {
  double dt{1e-3};
  std::size_t n_steps{100000};

  double t_final() const { return dt * static_cast<double>(n_steps); }

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("grid dt must be > 0");
    if (n_steps < 1) throw ConfigError("grid n_steps must be >= 1");
  }

  static SimGrid from_horizon(double dt, double t_final) {
    if (!(dt > 0.0) || !(t_final > 0.0))
      throw ConfigError("grid dt and t_final must be > 0");
    return {dt, static_cast<std::size_t>(std::llround(t_final / dt))};
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based trial seeding: every trial gets an independent stream
/// derived from (master seed, trial index) alone, so trials can run in any
/// order or concurrently with identical results.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index * 0x9E3779B97F4A7C15ULL + 1));
}

/// Independent sub-stream (pump noise vs. optical noise) within one trial.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
}

}  // namespace opo::sde
