#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "opo/errors.hpp"

// State-space and noise-correlation matrices for an optical parametric
// oscillator cavity monitored by homodyne detection, in quadrature
// coordinates x = (q, p). Two measurement configurations are supported:
// a single homodyne channel on the transmitted beam, and the complete
// three-channel record that also observes both loss ports.

namespace opo::model {

using Eigen::Matrix2d;
using Eigen::Vector2d;
using InputMatrix = Eigen::Matrix<double, 2, 6>;

enum class BNormalization {
  // Input couplings sqrt(2*gamma_i); the vacuum steady state is (hbar/2)I
  // and the fluctuation-observation inequality holds for all parameters.
  kConsistent,
  // Literal sqrt(hbar*gamma_i) couplings, kept for comparison runs.
  kPaper,
};

struct PhysicalParams {
  double gamma1{0.95};        // decay rate of the measured channel (rad/s)
  double gamma2{0.05};        // decay rate of the loss channel (rad/s)
  double transmittance{1.0};  // beamsplitter transmittance T in [0,1]
  double theta_m{M_PI / 12.0};  // homodyne phase (rad)
  double hbar{1.0};

  double gamma() const noexcept { return gamma1 + gamma2; }

  void validate() const {
    if (!(gamma1 > 0.0)) throw ConfigError("gamma1 must be > 0");
    if (!(gamma2 >= 0.0)) throw ConfigError("gamma2 must be >= 0");
    if (!(transmittance >= 0.0 && transmittance <= 1.0))
      throw ConfigError("transmittance must lie in [0,1]");
    if (!(hbar > 0.0)) throw ConfigError("hbar must be > 0");
    if (!std::isfinite(theta_m)) throw ConfigError("theta_m must be finite");
  }
};

inline Matrix2d symplectic() {
  Matrix2d s;
  s << 0.0, 1.0, -1.0, 0.0;
  return s;
}

/// Drift matrix diag(eps - gamma, -eps - gamma). Any real eps is accepted;
/// eps >= gamma makes the drift non-Hurwitz (above-threshold pumping) and is
/// flagged by StateSpaceModel::above_threshold for the caller to warn on.
inline Matrix2d build_drift(double epsilon, const PhysicalParams& p) {
  const double g = p.gamma();
  Matrix2d a = Matrix2d::Zero();
  a(0, 0) = epsilon - g;
  a(1, 1) = -epsilon - g;
  return a;
}

/// dA/d(eps) = diag(1, -1).
inline Matrix2d drift_epsilon_derivative() {
  Matrix2d d = Matrix2d::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  return d;
}

inline InputMatrix build_input_matrix(
    const PhysicalParams& p, BNormalization norm = BNormalization::kConsistent) {
  double c1, c2;
  if (norm == BNormalization::kConsistent) {
    c1 = std::sqrt(2.0 * p.gamma1);
    c2 = std::sqrt(2.0 * p.gamma2);
  } else {
    c1 = std::sqrt(p.hbar * p.gamma1);
    c2 = std::sqrt(p.hbar * p.gamma2);
  }
  InputMatrix b = InputMatrix::Zero();
  b(0, 0) = c1;
  b(1, 1) = c1;
  b(0, 2) = c2;
  b(1, 3) = c2;
  return b;
}

template <int K>
struct Measurement {
  Eigen::Matrix<double, K, 2> c;
  Eigen::Matrix<double, K, 6> m;
};

/// Homodyne detection at phase theta_m on the beamsplitter output.
inline Measurement<1> build_measurement_single(const PhysicalParams& p) {
  const double ct = std::cos(p.theta_m), st = std::sin(p.theta_m);
  const double t = p.transmittance;
  Measurement<1> out;
  const double cs = 2.0 * std::sqrt(t * p.gamma1 / p.hbar);
  out.c << cs * ct, cs * st;
  const double ms = -std::sqrt(2.0 / p.hbar);
  out.m << ms * std::sqrt(t) * ct, ms * std::sqrt(t) * st, 0.0, 0.0,
      ms * std::sqrt(1.0 - t) * ct, ms * std::sqrt(1.0 - t) * st;
  return out;
}

/// Three-channel record: transmitted beam (phase theta_m), reflected beam
/// (theta_lb) and the intracavity loss port (theta_lc). Rows ordered
/// (m, lb, lc).
inline Measurement<3> build_measurement_complete(const PhysicalParams& p,
                                                 double theta_lb,
                                                 double theta_lc) {
  const double t = p.transmittance;
  const double cm = std::cos(p.theta_m), sm = std::sin(p.theta_m);
  const double cb = std::cos(theta_lb), sb = std::sin(theta_lb);
  const double cc = std::cos(theta_lc), sc = std::sin(theta_lc);
  Measurement<3> out;
  const double cs = 2.0 / std::sqrt(p.hbar);
  out.c << cs * std::sqrt(t * p.gamma1) * cm, cs * std::sqrt(t * p.gamma1) * sm,
      cs * std::sqrt(p.gamma1 * (1.0 - t)) * cb,
      cs * std::sqrt(p.gamma1 * (1.0 - t)) * sb,
      cs * std::sqrt(p.gamma2) * cc, cs * std::sqrt(p.gamma2) * sc;
  const double ms = -std::sqrt(2.0 / p.hbar);
  const double rt = std::sqrt(t), rr = std::sqrt(1.0 - t);
  out.m << ms * rt * cm, ms * rt * sm, 0.0, 0.0, ms * rr * cm, ms * rr * sm,
      ms * rr * cb, ms * rr * sb, 0.0, 0.0, -ms * rt * cb, -ms * rt * sb,
      0.0, 0.0, ms * cc, ms * sc, 0.0, 0.0;
  return out;
}

template <int K>
struct NoiseCorrelations {
  Matrix2d d;                          // process-noise covariance rate
  Eigen::Matrix<double, K, 2> gamma;   // process-measurement correlation rate
  Eigen::Matrix<double, K, K> r;       // measurement-noise covariance rate
};

/// D = (hbar/2) b b^T, Gamma^T = (hbar/2) b m^T, R = (hbar/2) m m^T.
template <int K>
NoiseCorrelations<K> derive_noise_correlations(
    const InputMatrix& b, const Eigen::Matrix<double, K, 6>& m, double hbar) {
  NoiseCorrelations<K> out;
  const double h2 = hbar / 2.0;
  out.d = h2 * b * b.transpose();
  out.gamma = h2 * m * b.transpose();
  out.r = h2 * m * m.transpose();
  return out;
}

/// Dynamic-size variant; the noise dimension must be 6.
inline std::tuple<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd>
derive_noise_correlations(const Eigen::MatrixXd& b, const Eigen::MatrixXd& m,
                          double hbar) {
  if (b.cols() != 6 || m.cols() != 6 || b.rows() != 2)
    throw ConfigError("derive_noise_correlations: b must be 2x6, m must be kx6");
  const double h2 = hbar / 2.0;
  return {h2 * b * b.transpose(), h2 * m * b.transpose(),
          h2 * m * m.transpose()};
}

/// One measurement configuration with all derived correlation rates.
/// Immutable after construction; share freely across trial workers.
template <int K>
struct StateSpaceModel {
  PhysicalParams params;
  BNormalization normalization{BNormalization::kConsistent};
  InputMatrix b;
  Eigen::Matrix<double, K, 2> c;
  Eigen::Matrix<double, K, 6> m;
  Matrix2d d;
  Eigen::Matrix<double, K, 2> gamma_corr;
  Eigen::Matrix<double, K, K> r;
  Eigen::Matrix<double, K, K> r_inv;

  Matrix2d drift(double epsilon) const { return build_drift(epsilon, params); }
  bool above_threshold(double epsilon) const {
    return epsilon >= params.gamma();
  }
};

template <int K>
StateSpaceModel<K> finalize_model(const PhysicalParams& p, BNormalization norm,
                                  const Measurement<K>& meas) {
  p.validate();
  StateSpaceModel<K> model;
  model.params = p;
  model.normalization = norm;
  model.b = build_input_matrix(p, norm);
  model.c = meas.c;
  model.m = meas.m;
  const auto corr = derive_noise_correlations<K>(model.b, model.m, p.hbar);
  model.d = corr.d;
  model.gamma_corr = corr.gamma;
  model.r = corr.r;
  Eigen::FullPivLU<Eigen::Matrix<double, K, K>> lu(model.r);
  if (!lu.isInvertible())
    throw ConfigError("measurement-noise covariance R is singular");
  model.r_inv = lu.inverse();
  return model;
}

inline StateSpaceModel<1> make_single_channel_model(
    const PhysicalParams& p, BNormalization norm = BNormalization::kConsistent) {
  return finalize_model<1>(p, norm, build_measurement_single(p));
}

inline StateSpaceModel<3> make_complete_model(
    const PhysicalParams& p, double theta_lb, double theta_lc,
    BNormalization norm = BNormalization::kConsistent) {
  return finalize_model<3>(p, norm,
                           build_measurement_complete(p, theta_lb, theta_lc));
}

struct CheckResult {
  bool pass{false};
  double margin{0.0};  // smallest eigenvalue, or det(V) - hbar^2/4
};

/// Eigenvalue tolerance for PSD checks, scaled by the matrix trace.
inline double psd_tolerance(double trace) {
  return 1e-9 * (1.0 + std::abs(trace));
}

/// Heisenberg bound det(V) >= hbar^2/4.
inline CheckResult check_uncertainty(const Matrix2d& v, double hbar,
                                     double tol = 1e-9) {
  if ((v - v.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * (1.0 + v.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("check_uncertainty: covariance not symmetric");
  const double margin = v.determinant() - hbar * hbar / 4.0;
  return {margin >= -tol, margin};
}

/// Fluctuation-dissipation: D - i*hbar*(A*Sigma - Sigma^T*A^T)/2 >= 0.
inline CheckResult check_fluctuation_dissipation(const Matrix2d& a,
                                                 const Matrix2d& d,
                                                 double hbar) {
  const Matrix2d s = symplectic();
  const Matrix2d w = a * s - s.transpose() * a.transpose();
  Eigen::Matrix2cd f = d.cast<std::complex<double>>();
  f += std::complex<double>(0.0, -hbar / 2.0) * w.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(f);
  const double margin = es.eigenvalues().minCoeff();
  return {margin >= -psd_tolerance(d.trace()), margin};
}

/// Fluctuation-observation: D - Gamma^T*Gamma - (hbar^2/4)*Sigma*C^T*C*Sigma^T >= 0.
template <int K>
CheckResult check_fluctuation_observation(
    const Matrix2d& d, const Eigen::Matrix<double, K, 2>& gamma_corr,
    const Eigen::Matrix<double, K, 2>& c, double hbar) {
  const Matrix2d s = symplectic();
  const Matrix2d g = d - gamma_corr.transpose() * gamma_corr -
                     (hbar * hbar / 4.0) * s * c.transpose() * c * s.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(g);
  const double margin = es.eigenvalues().minCoeff();
  return {margin >= -psd_tolerance(d.trace()), margin};
}

}  // namespace opo::model
