#include "opo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "opo/svg.hpp"

namespace opo::harness {

namespace fs = std::filesystem;
using filters::GaussianBelief;
using filters::JointBelief;
using filters::ParamBelief;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> component(const std::vector<Eigen::Vector2d>& path,
                              int i) {
  std::vector<double> out(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) out[k] = path[k](i);
  return out;
}

constexpr const char* kColorTruth = "#000000";
constexpr const char* kColorBaseline = "#2ca02c";
constexpr const char* kColorDual = "#d62728";
constexpr const char* kColorJoint = "#1f77b4";

}  // namespace

TrialResult run_single_trial(const ExperimentConfig& config,
                             std::size_t trial_index, bool keep_paths) {
  config.validate();
  const auto grid = config.grid();
  const double dt = grid.dt;
  const auto norm = config.b_normalization;
  const auto single = model::make_single_channel_model(config.physical, norm);
  const auto complete = model::make_complete_model(
      config.physical, config.theta_lb_value(), config.theta_lc_value(), norm);
  const auto joint_model =
      filters::build_joint_model(config.physical, config.pump, norm);

  const std::uint64_t seed = sde::trial_seed(config.master_seed, trial_index);
  const auto pump_path =
      sde::simulate_pump(config.pump, grid, sde::substream_seed(seed, 0));
  const auto traj = sde::simulate_latent(single, complete, pump_path, grid,
                                         sde::substream_seed(seed, 1),
                                         config.x0);

  const Eigen::Matrix2d v0 =
      (config.physical.hbar / 2.0) * Eigen::Matrix2d::Identity();
  const GaussianBelief init_state{config.x0, v0};
  const double param_var0 = config.pump.stationary_variance();

  const auto truth = sde::ground_truth_filter(complete, traj.y_complete,
                                              pump_path, grid, init_state);
  const auto baseline = filters::kf_baseline_run(single, traj.y_single, dt,
                                                 config.pump.c, init_state);
  const auto dual =
      filters::dual_kf_run(single, config.pump, traj.y_single, dt, init_state,
                           ParamBelief{config.pump.c, param_var0});
  JointBelief joint_init;
  joint_init.mean << config.x0(0), config.x0(1), 0.0;
  joint_init.cov.setZero();
  joint_init.cov.topLeftCorner<2, 2>() = v0;
  joint_init.cov(2, 2) = param_var0;
  const auto joint =
      filters::joint_ekf_run(joint_model, traj.y_single, dt, joint_init);

  TrialResult result;
  result.clip_count = truth.clip_count + baseline.clip_count +
                      dual.clip_count + joint.clip_count;
  if (truth.diverged || baseline.diverged || dual.diverged || joint.diverged) {
    result.diverged = true;
    result.diverged_step = grid.n_steps;
    for (const auto* step : {&truth.diverged_step, &baseline.diverged_step,
                             &dual.diverged_step, &joint.diverged_step}) {
      if (*step > 0) result.diverged_step = std::min(result.diverged_step, *step);
    }
    return result;
  }

  result.min_det_margin =
      std::min({truth.min_det_margin, baseline.min_det_margin,
                dual.min_det_margin, joint.min_det_margin});

  const std::size_t burn = config.burn_in_steps();
  const std::vector<double> baseline_eps(pump_path.size(), config.pump.c);
  const auto q_truth = component(truth.mean, 0);
  const auto p_truth = component(truth.mean, 1);
  const auto q_base = component(baseline.mean, 0);
  const auto p_base = component(baseline.mean, 1);

  try {
    const auto rpi_for = [&](const std::vector<double>& est_eps,
                             const std::vector<Eigen::Vector2d>& est_x) {
      return std::array<double, 3>{
          metrics::rpi(est_eps, pump_path, baseline_eps, dt, burn),
          metrics::rpi(component(est_x, 0), q_truth, q_base, dt, burn),
          metrics::rpi(component(est_x, 1), p_truth, p_base, dt, burn)};
    };
    result.rpi[0] = rpi_for(dual.eps, dual.x_mean);
    result.rpi[1] = rpi_for(joint.eps, joint.x_mean);
  } catch (const UndefinedMetricError& e) {
    // Degenerate baseline; exclude the trial from the means.
    std::cerr << "trial " << trial_index << " excluded: " << e.what() << "\n";
    result.diverged = true;
    result.diverged_step = 0;
    return result;
  }

  if (keep_paths) {
    auto paths = std::make_shared<TrialPaths>();
    paths->times = traj.times;
    paths->eps_true = pump_path;
    paths->x_latent = traj.x_latent;
    paths->y_m.resize(grid.n_steps);
    paths->y_lb.resize(grid.n_steps);
    paths->y_lc.resize(grid.n_steps);
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      paths->y_m[k] = traj.y_complete[k](0);
      paths->y_lb[k] = traj.y_complete[k](1);
      paths->y_lc[k] = traj.y_complete[k](2);
    }
    paths->x_truth = truth.mean;
    paths->det_v_truth.resize(truth.cov.size());
    for (std::size_t k = 0; k < truth.cov.size(); ++k)
      paths->det_v_truth[k] = truth.cov[k].determinant();
    paths->x_baseline = baseline.mean;
    paths->x_dual = dual.x_mean;
    paths->x_joint = joint.x_mean;
    paths->eps_dual = dual.eps;
    paths->eps_joint = joint.eps;
    result.paths = std::move(paths);
  }
  return result;
}

std::vector<TrialResult> run_trials(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n = config.n_trials;
  std::vector<TrialResult> results(n);
  unsigned workers = config.workers == 0
                         ? std::max(1u, std::thread::hardware_concurrency())
                         : config.workers;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      results[i] = run_single_trial(config, i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        results[i] = run_single_trial(config, i);
      }
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

RpiSummary aggregate(const std::vector<TrialResult>& trials) {
  RpiSummary summary;
  summary.n_trials = trials.size();
  std::vector<double> values;
  values.reserve(trials.size());
  for (int method = 0; method < 2; ++method) {
    for (int quantity = 0; quantity < 3; ++quantity) {
      values.clear();
      for (const auto& t : trials) {
        if (!t.diverged) values.push_back(t.rpi[method][quantity]);
      }
      QuantitySummary& q = summary.values[method][quantity];
      if (values.size() >= 2) {
        const auto ms = metrics::mean_sem(values);
        q = {ms.mean, ms.sem};
      } else if (values.size() == 1) {
        q = {values[0], 0.0};
      }
    }
  }
  summary.n_diverged = 0;
  for (const auto& t : trials)
    if (t.diverged) ++summary.n_diverged;
  return summary;
}

void write_case_study_csv(const std::string& path, const RpiSummary& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  if (s.n_trials > 0 &&
      static_cast<double>(s.n_diverged) > 0.01 * static_cast<double>(s.n_trials))
    out << "# warning: " << s.n_diverged << " of " << s.n_trials
        << " trials diverged\n";
  out << "method,quantity,mean_rpi,sem,n_trials,n_diverged\n";
  for (int m = 0; m < 2; ++m) {
    for (int q = 0; q < 3; ++q) {
      out << kMethodNames[m] << "," << kQuantityNames[q] << ","
          << num(s.values[m][q].mean_rpi) << "," << num(s.values[m][q].sem)
          << "," << s.n_trials << "," << s.n_diverged << "\n";
    }
  }
}

void write_sweep_csv(const std::string& path, SweepParam param,
                     const std::vector<SweepPoint>& points) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << "param_name,param_value,method,quantity,mean_rpi,sem,n_trials,"
         "n_diverged\n";
  for (const auto& pt : points) {
    for (int m = 0; m < 2; ++m) {
      for (int q = 0; q < 3; ++q) {
        out << sweep_param_name(param) << "," << num(pt.value) << ","
            << kMethodNames[m] << "," << kQuantityNames[q] << ","
            << num(pt.summary.values[m][q].mean_rpi) << ","
            << num(pt.summary.values[m][q].sem) << "," << pt.summary.n_trials
            << "," << pt.summary.n_diverged << "\n";
      }
    }
  }
}

void write_trajectory_csv(const std::string& path, const TrialPaths& p) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << "t,eps_true,q_latent,p_latent,y_m,y_lb,y_lc,q_truth,p_truth,det_V\n";
  const std::size_t n_points = p.times.size();
  for (std::size_t k = 0; k < n_points; ++k) {
    const bool has_y = k < p.y_m.size();
    out << num(p.times[k]) << "," << num(p.eps_true[k]) << ","
        << num(p.x_latent[k](0)) << "," << num(p.x_latent[k](1)) << ","
        << num(has_y ? p.y_m[k] : 0.0) << "," << num(has_y ? p.y_lb[k] : 0.0)
        << "," << num(has_y ? p.y_lc[k] : 0.0) << "," << num(p.x_truth[k](0))
        << "," << num(p.x_truth[k](1)) << "," << num(p.det_v_truth[k]) << "\n";
  }
}

namespace {

svg::Series downsampled(const std::string& label, const std::string& color,
                        const std::vector<double>& t,
                        const std::vector<double>& y) {
  svg::Series s;
  s.label = label;
  s.color = color;
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);
  for (std::size_t k = 0; k < t.size() && k < y.size(); k += stride) {
    s.x.push_back(t[k]);
    s.y.push_back(y[k]);
  }
  return s;
}

}  // namespace

void write_trial_figure(const std::string& path, const TrialPaths& p) {
  const std::vector<double> baseline_eps(p.times.size(),
                                         p.eps_true.empty() ? 0.0
                                                            : p.eps_true[0]);
  auto comp = [&](const std::vector<Eigen::Vector2d>& v, int i) {
    return component(v, i);
  };
  std::vector<svg::Panel> panels(3);
  panels[0].title = "(a) pump power estimate";
  panels[0].xlabel = "t (s)";
  panels[0].ylabel = "eps";
  panels[0].series = {
      downsampled("true", kColorTruth, p.times, p.eps_true),
      downsampled("kf", kColorBaseline, p.times, baseline_eps),
      downsampled("dual-kf", kColorDual, p.times, p.eps_dual),
      downsampled("joint-ekf", kColorJoint, p.times, p.eps_joint)};
  panels[1].title = "(b) q estimate";
  panels[1].xlabel = "t (s)";
  panels[1].ylabel = "q";
  panels[1].series = {
      downsampled("true", kColorTruth, p.times, comp(p.x_truth, 0)),
      downsampled("kf", kColorBaseline, p.times, comp(p.x_baseline, 0)),
      downsampled("dual-kf", kColorDual, p.times, comp(p.x_dual, 0)),
      downsampled("joint-ekf", kColorJoint, p.times, comp(p.x_joint, 0))};
  panels[2].title = "(c) p estimate";
  panels[2].xlabel = "t (s)";
  panels[2].ylabel = "p";
  panels[2].series = {
      downsampled("true", kColorTruth, p.times, comp(p.x_truth, 1)),
      downsampled("kf", kColorBaseline, p.times, comp(p.x_baseline, 1)),
      downsampled("dual-kf", kColorDual, p.times, comp(p.x_dual, 1)),
      downsampled("joint-ekf", kColorJoint, p.times, comp(p.x_joint, 1))};
  svg::write_figure(path, panels);
}

void write_sweep_figure(const std::string& path, SweepParam param,
                        const std::vector<SweepPoint>& points) {
  std::vector<svg::Panel> panels(3);
  const std::string pname = sweep_param_name(param);
  for (int q = 0; q < 3; ++q) {
    panels[q].title = std::string("mean RPI of ") + kQuantityNames[q];
    panels[q].xlabel = pname;
    panels[q].ylabel = "mean RPI";
    for (int m = 0; m < 2; ++m) {
      svg::Series s;
      s.label = kMethodNames[m];
      s.color = m == 0 ? kColorDual : kColorJoint;
      for (const auto& pt : points) {
        s.x.push_back(pt.value);
        s.y.push_back(pt.summary.values[m][q].mean_rpi);
        s.yerr.push_back(pt.summary.values[m][q].sem);
      }
      panels[q].series.push_back(std::move(s));
    }
  }
  svg::write_figure(path, panels);
}

RpiSummary run_case_study(const ExperimentConfig& config) {
  config.validate();
  const auto trials = run_trials(config);
  const auto summary = aggregate(trials);
  fs::create_directories(config.out_dir);
  write_case_study_csv(
      (fs::path(config.out_dir) / "case_study.csv").string(), summary);
  const auto designated = run_single_trial(config, 0, /*keep_paths=*/true);
  if (designated.paths) {
    write_trial_figure(
        (fs::path(config.out_dir) / "case_study_trial0.svg").string(),
        *designated.paths);
  }
  if (summary.n_trials > 0 &&
      static_cast<double>(summary.n_diverged) >
          0.01 * static_cast<double>(summary.n_trials)) {
    std::cerr << "warning: " << summary.n_diverged << " of "
              << summary.n_trials << " trials diverged\n";
  }
  return summary;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config) {
  config.validate();
  if (!config.sweep) throw ConfigError("run_sweep requires a sweep spec");
  const SweepSpec& spec = *config.sweep;
  std::vector<SweepPoint> points;
  points.reserve(spec.values.size());
  for (double value : spec.values) {
    ExperimentConfig point_cfg = config;
    switch (spec.param) {
      case SweepParam::kTransmittance:
        point_cfg.physical.transmittance = value;
        break;
      case SweepParam::kDiffusion:
        point_cfg.pump.g = value;
        break;
      case SweepParam::kTendency:
        point_cfg.pump.c = value;
        if (!config.epsilon0_explicit) point_cfg.pump.epsilon0 = value;
        break;
    }
    points.push_back({value, aggregate(run_trials(point_cfg))});
  }
  fs::create_directories(config.out_dir);
  const std::string stem = "sweep_" + sweep_param_name(spec.param);
  write_sweep_csv((fs::path(config.out_dir) / (stem + ".csv")).string(),
                  spec.param, points);
  write_sweep_figure((fs::path(config.out_dir) / (stem + ".svg")).string(),
                     spec.param, points);
  return points;
}

namespace {

struct CheckReporter {
  std::ostream& out;
  int failures = 0;

  void item(const std::string& name, bool pass, const std::string& detail) {
    out << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
    if (!pass) ++failures;
  }
  void expected_fail(const std::string& name, bool failed_as_expected,
                     const std::string& detail) {
    out << (failed_as_expected ? "[XFAIL] " : "[FAIL] ") << name << ": "
        << detail << "\n";
    if (!failed_as_expected) ++failures;
  }
};

}  // namespace

int check_invariants(const ExperimentConfig& config, std::ostream& report,
                     const InvariantCheckOptions& opts) {
  config.validate();
  CheckReporter rep{report};
  const bool paper_norm =
      config.b_normalization == model::BNormalization::kPaper;
  const double hbar = config.physical.hbar;

  const auto single =
      model::make_single_channel_model(config.physical, config.b_normalization);
  const auto complete = model::make_complete_model(
      config.physical, config.theta_lb_value(), config.theta_lc_value(),
      config.b_normalization);

  // Unit-measurement-noise normalization.
  {
    const double r_err = std::abs(single.r(0, 0) - 1.0);
    const double r3_err =
        (complete.r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    rep.item("measurement noise normalization", r_err < 1e-12 && r3_err < 1e-12,
             "single-channel |R-1| = " + std::to_string(r_err) +
                 ", complete |R-I| = " + std::to_string(r3_err));
  }

  // Vacuum Lyapunov steady state at eps = 0.
  {
    const auto v = filters::steady_state_lyapunov(single.drift(0.0), single.d);
    const double err =
        (v - (hbar / 2.0) * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    const bool ok = err < 1e-10;
    const std::string detail = "max |V - (hbar/2) I| = " + std::to_string(err);
    if (paper_norm)
      rep.expected_fail("vacuum steady state (paper B)", !ok, detail);
    else
      rep.item("vacuum steady state", ok, detail);
  }

  // Fluctuation-dissipation at the configured operating point.
  {
    const auto res = model::check_fluctuation_dissipation(
        single.drift(config.pump.c), single.d, hbar);
    const std::string detail = "min eigenvalue = " + std::to_string(res.margin);
    if (paper_norm)
      rep.expected_fail("fluctuation-dissipation (paper B)", !res.pass, detail);
    else
      rep.item("fluctuation-dissipation", res.pass, detail);
  }

  // Fluctuation-observation; fails by construction under the paper B.
  {
    const auto res = model::check_fluctuation_observation<1>(
        single.d, single.gamma_corr, single.c, hbar);
    const std::string detail = "min eigenvalue = " + std::to_string(res.margin);
    if (paper_norm)
      rep.expected_fail("fluctuation-observation (paper B)", !res.pass, detail);
    else
      rep.item("fluctuation-observation", res.pass, detail);
  }

  // Random property sweep over (T, theta_m, gamma1, gamma2) with the
  // consistent normalization.
  {
    std::mt19937_64 rng(config.master_seed ^ 0xda7a5eedULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool all_pass = true;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < opts.property_sweep_points; ++i) {
      model::PhysicalParams p = config.physical;
      p.transmittance = unit(rng);
      p.theta_m = 2.0 * M_PI * unit(rng);
      p.gamma1 = 0.05 + 2.0 * unit(rng);
      p.gamma2 = 0.05 + 2.0 * unit(rng);
      const auto m = model::make_single_channel_model(
          p, model::BNormalization::kConsistent);
      const auto fd = model::check_fluctuation_dissipation(
          m.drift(0.3 * p.gamma()), m.d, p.hbar);
      const auto fo = model::check_fluctuation_observation<1>(
          m.d, m.gamma_corr, m.c, p.hbar);
      all_pass = all_pass && fd.pass && fo.pass;
      worst = std::min({worst, fd.margin, fo.margin});
    }
    rep.item("random parameter sweep (consistent B)", all_pass,
             std::to_string(opts.property_sweep_points) +
                 " points, worst margin = " + std::to_string(worst));
  }

  // Conditional steady state: Heisenberg bound and purity saturation at T=1.
  if (!paper_norm) {
    const auto v_c = filters::steady_state_riccati<3>(complete, config.pump.c);
    const auto unc = model::check_uncertainty(v_c, hbar, 1e-6);
    rep.item("conditional steady state uncertainty", unc.pass,
             "det margin = " + std::to_string(unc.margin));
    model::PhysicalParams pure = config.physical;
    pure.transmittance = 1.0;
    const auto complete_pure = model::make_complete_model(
        pure, config.theta_lb_value(), config.theta_lc_value(),
        model::BNormalization::kConsistent);
    const auto v_pure =
        filters::steady_state_riccati<3>(complete_pure, config.pump.c);
    const double purity_err =
        std::abs(v_pure.determinant() - hbar * hbar / 4.0);
    rep.item("purity saturation at T=1", purity_err < 1e-6,
             "|det(V_c) - hbar^2/4| = " + std::to_string(purity_err));
  }

  // Riccati fixed point vs. long-run integration of the covariance ODE.
  {
    const auto v_fp = filters::steady_state_riccati<1>(single, config.pump.c);
    filters::GaussianBelief belief{Eigen::Vector2d::Zero(),
                                   (hbar / 2.0) * Eigen::Matrix2d::Identity()};
    const Eigen::Matrix2d a = single.drift(config.pump.c);
    const double dt = 1e-3;
    const Eigen::Matrix<double, 1, 1> zero_increment =
        Eigen::Matrix<double, 1, 1>::Zero();
    for (int k = 0; k < 200000; ++k)
      filters::kalman_bucy_step<1>(belief, a, single, zero_increment, dt);
    const double err = (belief.cov - v_fp).cwiseAbs().maxCoeff();
    rep.item("riccati cross-validation", err < 1e-8,
             "fixed point vs integrated max error = " + std::to_string(err));
  }

  // Ornstein-Uhlenbeck stationary variance from long-run sampling.
  {
    sde::PumpProcess pump = config.pump;
    if (!(pump.g > 0.0)) pump.g = 0.028;
    const auto grid = sde::SimGrid::from_horizon(opts.ou_dt, opts.ou_t_final);
    const std::size_t skip = std::min<std::size_t>(
        grid.n_steps / 2,
        static_cast<std::size_t>(5.0 / (2.0 * -pump.mu) / opts.ou_dt));
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t path_idx = 0; path_idx < opts.ou_paths; ++path_idx) {
      const auto path = sde::simulate_pump(
          pump, grid, sde::trial_seed(config.master_seed ^ 0x00700aaULL,
                                      path_idx));
      for (std::size_t k = skip; k < path.size(); ++k) {
        sum += path[k];
        sum_sq += path[k] * path[k];
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sum_sq / static_cast<double>(count) - mean * mean;
    const double expected = pump.stationary_variance();
    const double rel_err = std::abs(var - expected) / expected;
    rep.item("OU stationary variance",
             rel_err < 0.05,
             "sample " + std::to_string(var) + " vs " +
                 std::to_string(expected) +
                 " (rel err " + std::to_string(rel_err) + ")");
  }

  return rep.failures == 0 ? 0 : 1;
}

}  // namespace opo::harness
