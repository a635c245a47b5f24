#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "opo/model.hpp"
#include "opo/process.hpp"

// The four estimators: Kalman-Bucy state filter, fixed-pump baseline,
// dual Kalman filter (state + scalar pump filter linearized around each
// other), and joint extended Kalman filter on the augmented state
// z = (q, p, eps - c). All step functions are pure belief-in/belief-out
// Euler updates over measurement increments y*dt.

namespace opo::filters {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

struct GaussianBelief {
  Vector2d mean{Vector2d::Zero()};
  Matrix2d cov{Matrix2d::Identity()};
};

struct ParamBelief {
  double mean{0.0};
  double var{0.0};
};

struct JointBelief {
  Vector3d mean{Vector3d::Zero()};
  Matrix3d cov{Matrix3d::Identity()};
};

template <typename Mat>
inline void symmetrize(Mat& v) {
  v = (0.5 * (v + v.transpose())).eval();
}

inline double min_eigenvalue(const Matrix2d& v) {
  const double tr = v.trace();
  const double det = v.determinant();
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 - disc;
}

/// Clip covariance eigenvalues below -tol to zero. Returns true if a clip
/// happened so callers can count occurrences.
inline bool clip_psd(Matrix2d& v, double tol = 1e-9) {
  if (min_eigenvalue(v) >= -tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(v);
  const Vector2d lam = es.eigenvalues().cwiseMax(0.0);
  v = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return true;
}

inline bool clip_psd(Matrix3d& v, double tol = 1e-9) {
  // Cheap necessary conditions first; the full decomposition runs rarely.
  const bool suspect = v.diagonal().minCoeff() < -tol ||
                       v.topLeftCorner<2, 2>().determinant() < -tol ||
                       v.determinant() < -tol;
  if (!suspect) return false;
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(v);
  if (es.eigenvalues().minCoeff() >= -tol) return false;
  const Vector3d lam = es.eigenvalues().cwiseMax(0.0);
  v = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return true;
}

/// One Euler step of the Kalman-Bucy filter with correlated process and
/// measurement noise: gain K = (V C^T + Gamma^T) R^-1, innovation
/// dw = y dt - C <x> dt.
template <int K>
inline void kalman_bucy_step(GaussianBelief& belief, const Matrix2d& a,
                             const model::StateSpaceModel<K>& m,
                             const Eigen::Matrix<double, K, 1>& y_increment,
                             double dt) {
  const Eigen::Matrix<double, 2, K> gain =
      (belief.cov * m.c.transpose() + m.gamma_corr.transpose()) * m.r_inv;
  const Eigen::Matrix<double, K, 1> innovation =
      y_increment - m.c * belief.mean * dt;
  const Vector2d mean_next =
      belief.mean + a * belief.mean * dt + gain * innovation;
  const Matrix2d vdot = a * belief.cov + belief.cov * a.transpose() + m.d -
                        gain * m.r * gain.transpose();
  belief.mean = mean_next;
  belief.cov += vdot * dt;
  symmetrize(belief.cov);
}

struct StateFilterRun {
  std::vector<Vector2d> mean;  // length n_steps + 1
  std::vector<double> eps;     // the pump value the filter assumed, per step
  double min_det_margin{std::numeric_limits<double>::infinity()};
  std::size_t clip_count{0};
  bool diverged{false};
  std::size_t diverged_step{0};
};

namespace detail {

template <typename Belief>
inline bool finite(const Belief& b) {
  return b.mean.allFinite() && b.cov.allFinite();
}

}  // namespace detail

/// Kalman filter with the pump frozen at the tendency constant; the
/// comparison baseline for both adaptive methods.
inline StateFilterRun kf_baseline_run(const model::StateSpaceModel<1>& m,
                                      const std::vector<double>& y_increments,
                                      double dt, double eps_const,
                                      const GaussianBelief& init) {
  const std::size_t n = y_increments.size();
  const Matrix2d a = m.drift(eps_const);
  const double det_floor = m.params.hbar * m.params.hbar / 4.0;
  StateFilterRun run;
  run.mean.reserve(n + 1);
  run.eps.assign(n + 1, eps_const);
  GaussianBelief belief = init;
  run.mean.push_back(belief.mean);
  run.min_det_margin = belief.cov.determinant() - det_floor;
  for (std::size_t k = 0; k < n; ++k) {
    kalman_bucy_step<1>(belief, a, m,
                        Eigen::Matrix<double, 1, 1>(y_increments[k]), dt);
    if (clip_psd(belief.cov)) ++run.clip_count;
    if (!detail::finite(belief)) {
      run.diverged = true;
      run.diverged_step = k;
      break;
    }
    run.mean.push_back(belief.mean);
    run.min_det_margin = std::min(run.min_det_margin,
                                  belief.cov.determinant() - det_floor);
  }
  return run;
}

/// One coupled dual-KF step. Both filters consume the same pre-update
/// quantities (state mean, pump estimate) and commit simultaneously.
inline void dual_kf_step(GaussianBelief& state, ParamBelief& param,
                         const model::StateSpaceModel<1>& m,
                         const sde::PumpProcess& pump, double y_increment,
                         double dt) {
  const Vector2d x_pre = state.mean;
  const double eps_pre = param.mean;
  // Linearization coefficient C_eps = C * dA/deps * x, at the pre-update mean.
  const double c_eps = m.c(0, 0) * x_pre(0) - m.c(0, 1) * x_pre(1);
  const double r = m.r(0, 0);
  const double innovation = y_increment - m.c.row(0).dot(x_pre) * dt;

  kalman_bucy_step<1>(state, m.drift(eps_pre), m,
                      Eigen::Matrix<double, 1, 1>(y_increment), dt);

  // Pump noise is independent of the optical noises, so Gamma_eps = 0.
  // Discrete-form update: explicit Euler on the scalar Riccati is unstable
  // once dt*V*C_eps^2/r > 2, which happens when an above-threshold excursion
  // inflates the cavity field (C_eps grows with |x|). The discrete gain
  // saturates at 1/(C_eps*dt) and recovers the continuous update as dt -> 0.
  const double var_pred =
      param.var + (2.0 * pump.mu * param.var + pump.g * pump.g) * dt;
  const double gain =
      var_pred * c_eps / (c_eps * c_eps * var_pred * dt + r);
  param.mean = eps_pre + pump.mu * (eps_pre - pump.c) * dt + gain * innovation;
  param.var = var_pred * (1.0 - gain * c_eps * dt);
  if (param.var < 0.0) param.var = 0.0;
}

struct DualRun {
  std::vector<Vector2d> x_mean;
  std::vector<double> eps;
  double min_det_margin{std::numeric_limits<double>::infinity()};
  std::size_t clip_count{0};
  bool diverged{false};
  std::size_t diverged_step{0};
};

inline DualRun dual_kf_run(const model::StateSpaceModel<1>& m,
                           const sde::PumpProcess& pump,
                           const std::vector<double>& y_increments, double dt,
                           const GaussianBelief& init_state,
                           const ParamBelief& init_param) {
  const std::size_t n = y_increments.size();
  const double det_floor = m.params.hbar * m.params.hbar / 4.0;
  DualRun run;
  run.x_mean.reserve(n + 1);
  run.eps.reserve(n + 1);
  GaussianBelief state = init_state;
  ParamBelief param = init_param;
  run.x_mean.push_back(state.mean);
  run.eps.push_back(param.mean);
  run.min_det_margin = state.cov.determinant() - det_floor;
  for (std::size_t k = 0; k < n; ++k) {
    dual_kf_step(state, param, m, pump, y_increments[k], dt);
    if (clip_psd(state.cov)) ++run.clip_count;
    if (!detail::finite(state) || !std::isfinite(param.mean)) {
      run.diverged = true;
      run.diverged_step = k;
      break;
    }
    run.x_mean.push_back(state.mean);
    run.eps.push_back(param.mean);
    run.min_det_margin = std::min(run.min_det_margin,
                                  state.cov.determinant() - det_floor);
  }
  return run;
}

/// Augmented model for the joint state z = (q, p, eps - c).
struct JointModel {
  model::PhysicalParams params;
  sde::PumpProcess pump;
  Eigen::Matrix<double, 3, 7> b_z;
  Eigen::Matrix<double, 1, 3> c_z;
  Eigen::Matrix<double, 1, 7> m_z;
  Matrix3d r_z;       // process-noise covariance rate
  Vector3d r_zy;      // process-measurement correlation rate
  double r_yz{1.0};   // measurement-noise covariance rate

  Matrix3d drift(double epsilon) const {
    const double g = params.gamma();
    Matrix3d a = Matrix3d::Zero();
    a(0, 0) = epsilon - g;
    a(1, 1) = -epsilon - g;
    a(2, 2) = pump.mu;
    return a;
  }

  /// Jacobian of A_z(z)*z at the current estimate; propagates the covariance
  /// while drift() propagates the mean, as the two play different roles.
  Matrix3d jacobian(const Vector3d& z) const {
    const double eps = z(2) + pump.c;
    Matrix3d a = drift(eps);
    a(0, 2) = z(0);
    a(1, 2) = -z(1);
    return a;
  }
};

inline JointModel build_joint_model(
    const model::PhysicalParams& p, const sde::PumpProcess& pump,
    model::BNormalization norm = model::BNormalization::kConsistent) {
  p.validate();
  pump.validate();
  JointModel jm;
  jm.params = p;
  jm.pump = pump;
  jm.b_z.setZero();
  jm.b_z.topLeftCorner<2, 6>() = model::build_input_matrix(p, norm);
  jm.b_z(2, 6) = pump.g;
  const auto meas = model::build_measurement_single(p);
  jm.c_z << meas.c(0, 0), meas.c(0, 1), 0.0;
  jm.m_z.setZero();
  jm.m_z.leftCols<6>() = meas.m;
  // Increment covariance: (hbar/2) I for the six optical noises, unit Wiener
  // for the pump noise.
  Eigen::Matrix<double, 7, 7> q = Eigen::Matrix<double, 7, 7>::Identity();
  q.topLeftCorner<6, 6>() *= p.hbar / 2.0;
  jm.r_z = jm.b_z * q * jm.b_z.transpose();
  jm.r_zy = jm.b_z * q * jm.m_z.transpose();
  jm.r_yz = (jm.m_z * q * jm.m_z.transpose())(0, 0);
  if (!(jm.r_yz > 0.0))
    throw ConfigError("joint measurement-noise covariance is singular");
  return jm;
}

inline void joint_ekf_step(JointBelief& belief, const JointModel& jm,
                           double y_increment, double dt) {
  const double eps = belief.mean(2) + jm.pump.c;
  const Matrix3d a_mean = jm.drift(eps);
  const Matrix3d a_cov = jm.jacobian(belief.mean);
  const Vector3d gain =
      (belief.cov * jm.c_z.transpose() + jm.r_zy) / jm.r_yz;
  const double innovation = y_increment - jm.c_z.dot(belief.mean) * dt;
  const Vector3d mean_next =
      belief.mean + a_mean * belief.mean * dt + gain * innovation;
  const Matrix3d vdot = a_cov * belief.cov + belief.cov * a_cov.transpose() +
                        jm.r_z - gain * jm.r_yz * gain.transpose();
  belief.mean = mean_next;
  belief.cov += vdot * dt;
  symmetrize(belief.cov);
}

struct JointRun {
  std::vector<Vector2d> x_mean;
  std::vector<double> eps;
  double min_det_margin{std::numeric_limits<double>::infinity()};
  std::size_t clip_count{0};
  bool diverged{false};
  std::size_t diverged_step{0};
};

inline JointRun joint_ekf_run(const JointModel& jm,
                              const std::vector<double>& y_increments,
                              double dt, const JointBelief& init) {
  const std::size_t n = y_increments.size();
  const double det_floor = jm.params.hbar * jm.params.hbar / 4.0;
  JointRun run;
  run.x_mean.reserve(n + 1);
  run.eps.reserve(n + 1);
  JointBelief belief = init;
  auto quad_det = [&](const JointBelief& b) {
    return b.cov.topLeftCorner<2, 2>().determinant() - det_floor;
  };
  run.x_mean.push_back(belief.mean.head<2>());
  run.eps.push_back(belief.mean(2) + jm.pump.c);
  run.min_det_margin = quad_det(belief);
  for (std::size_t k = 0; k < n; ++k) {
    joint_ekf_step(belief, jm, y_increments[k], dt);
    if (clip_psd(belief.cov)) ++run.clip_count;
    if (!detail::finite(belief)) {
      run.diverged = true;
      run.diverged_step = k;
      break;
    }
    run.x_mean.push_back(belief.mean.head<2>());
    run.eps.push_back(belief.mean(2) + jm.pump.c);
    run.min_det_margin = std::min(run.min_det_margin, quad_det(belief));
  }
  return run;
}

/// Steady-state conditional covariance: damped fixed-point iteration on
/// A V + V A^T + D - (V C^T + Gamma^T) R^-1 (C V + Gamma) = 0.
template <int K>
inline Matrix2d steady_state_riccati(const model::StateSpaceModel<K>& m,
                                     double epsilon, double tol = 1e-10,
                                     std::size_t max_iters = 100000) {
  if (m.above_threshold(epsilon))
    throw NumericalError("steady_state_riccati: drift is not Hurwitz");
  const Matrix2d a = m.drift(epsilon);
  const double step =
      0.2 / (1.0 + 2.0 * m.params.gamma() + std::abs(epsilon));
  Matrix2d v = (m.params.hbar / 2.0) * Matrix2d::Identity();
  double res_norm = 0.0;
  for (std::size_t i = 0; i < max_iters; ++i) {
    const Eigen::Matrix<double, 2, K> gain =
        (v * m.c.transpose() + m.gamma_corr.transpose()) * m.r_inv;
    const Matrix2d residual = a * v + v * a.transpose() + m.d -
                              gain * (m.c * v + m.gamma_corr);
    res_norm = residual.norm();
    if (res_norm < tol) return v;
    v += step * residual;
    symmetrize(v);
  }
  throw NumericalError("steady_state_riccati did not converge; residual = " +
                       std::to_string(res_norm));
}

/// Lyapunov fixed point A V + V A^T + D = 0 (the no-measurement limit),
/// used for the vacuum steady-state check.
inline Matrix2d steady_state_lyapunov(const Matrix2d& a, const Matrix2d& d,
                                      double tol = 1e-12,
                                      std::size_t max_iters = 100000) {
  const double step = 0.2 / (1.0 + a.cwiseAbs().maxCoeff());
  Matrix2d v = Matrix2d::Zero();
  for (std::size_t i = 0; i < max_iters; ++i) {
    const Matrix2d residual = a * v + v * a.transpose() + d;
    if (residual.norm() < tol) return v;
    v += step * residual;
    symmetrize(v);
  }
  throw NumericalError("steady_state_lyapunov did not converge");
}

}  // namespace opo::filters
