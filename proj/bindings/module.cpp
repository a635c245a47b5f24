// Python bindings: a thin JSON-string/config-driven surface over the core
// simulation and estimation routines.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "opo/config.hpp"
#include "opo/harness.hpp"
#include "opo/metrics.hpp"
#include "opo/sde.hpp"

namespace py = pybind11;
using namespace opo;
using harness::ExperimentConfig;

namespace {

ExperimentConfig config_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return ExperimentConfig::from_json(j);
}

py::dict summary_to_dict(const harness::RpiSummary& s) {
  py::dict out;
  out["n_trials"] = s.n_trials;
  out["n_diverged"] = s.n_diverged;
  for (int m = 0; m < 2; ++m) {
    py::dict method;
    for (int q = 0; q < 3; ++q) {
      py::dict entry;
      entry["mean_rpi"] = s.values[m][q].mean_rpi;
      entry["sem"] = s.values[m][q].sem;
      method[harness::kQuantityNames[q]] = entry;
    }
    out[harness::kMethodNames[m]] = method;
  }
  return out;
}

py::dict trial_to_dict(const harness::TrialResult& r) {
  py::dict out;
  out["diverged"] = r.diverged;
  out["min_det_margin"] = r.min_det_margin;
  out["clip_count"] = r.clip_count;
  for (int m = 0; m < 2; ++m) {
    py::dict method;
    for (int q = 0; q < 3; ++q)
      method[harness::kQuantityNames[q]] = r.rpi[m][q];
    out[harness::kMethodNames[m]] = method;
  }
  if (r.paths) {
    py::dict paths;
    paths["times"] = r.paths->times;
    paths["eps_true"] = r.paths->eps_true;
    paths["eps_dual"] = r.paths->eps_dual;
    paths["eps_joint"] = r.paths->eps_joint;
    auto comp = [](const std::vector<Eigen::Vector2d>& v, int i) {
      std::vector<double> out_v;
      out_v.reserve(v.size());
      for (const auto& x : v) out_v.push_back(x(i));
      return out_v;
    };
    paths["q_truth"] = comp(r.paths->x_truth, 0);
    paths["p_truth"] = comp(r.paths->x_truth, 1);
    paths["q_baseline"] = comp(r.paths->x_baseline, 0);
    paths["p_baseline"] = comp(r.paths->x_baseline, 1);
    paths["q_dual"] = comp(r.paths->x_dual, 0);
    paths["p_dual"] = comp(r.paths->x_dual, 1);
    paths["q_joint"] = comp(r.paths->x_joint, 0);
    paths["p_joint"] = comp(r.paths->x_joint, 1);
    out["paths"] = paths;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_opo_estim, m) {
  m.doc() =
      "Simultaneous state and pump-power estimation for an optical "
      "parametric oscillator: Kalman-Bucy baseline, dual-KF and joint-EKF.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                          PyExc_RuntimeError);
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError",
                                               PyExc_ArithmeticError);

  m.def("default_config",
        []() { return ExperimentConfig{}.to_json().dump(2); },
        "Default experiment configuration as a JSON string.");

  m.def(
      "run_single_trial",
      [](const std::string& config_json, std::size_t index, bool keep_paths) {
        const auto cfg = config_from_json_string(config_json);
        return trial_to_dict(harness::run_single_trial(cfg, index,
                                                       keep_paths));
      },
      py::arg("config_json"), py::arg("index") = 0,
      py::arg("keep_paths") = false,
      "Run one Monte Carlo trial; returns per-method RPIs and diagnostics.");

  m.def(
      "run_case_study",
      [](const std::string& config_json) {
        const auto cfg = config_from_json_string(config_json);
        py::gil_scoped_release release;
        const auto summary = harness::run_case_study(cfg);
        py::gil_scoped_acquire acquire;
        return summary_to_dict(summary);
      },
      py::arg("config_json"),
      "Run the full trial batch, write case_study.csv and the trial figure, "
      "and return the RPI summary.");

  m.def(
      "run_sweep",
      [](const std::string& config_json) {
        const auto cfg = config_from_json_string(config_json);
        std::vector<harness::SweepPoint> points;
        {
          py::gil_scoped_release release;
          points = harness::run_sweep(cfg);
        }
        py::list out;
        for (const auto& p : points) {
          py::dict d;
          d["value"] = p.value;
          d["summary"] = summary_to_dict(p.summary);
          out.append(d);
        }
        return out;
      },
      py::arg("config_json"),
      "Run a parameter sweep (the config must carry a sweep spec); writes "
      "the sweep CSV/figure and returns per-point summaries.");

  m.def(
      "check_invariants",
      [](const std::string& config_json, std::size_t sweep_points,
         std::size_t ou_paths, double ou_t_final, double ou_dt) {
        const auto cfg = config_from_json_string(config_json);
        harness::InvariantCheckOptions opts;
        opts.property_sweep_points = sweep_points;
        opts.ou_paths = ou_paths;
        opts.ou_t_final = ou_t_final;
        opts.ou_dt = ou_dt;
        std::ostringstream report;
        int rc;
        {
          py::gil_scoped_release release;
          rc = harness::check_invariants(cfg, report, opts);
        }
        return py::make_tuple(rc, report.str());
      },
      py::arg("config_json"), py::arg("sweep_points") = 100,
      py::arg("ou_paths") = 100, py::arg("ou_t_final") = 1e4,
      py::arg("ou_dt") = 1e-2,
      "Run the physical-consistency checks; returns (exit_code, report).");

  m.def(
      "simulate_pump",
      [](double mu, double c, double g, double epsilon0, double dt,
         double t_final, std::uint64_t seed) {
        sde::PumpProcess pump{mu, c, g, epsilon0};
        return sde::simulate_pump(pump,
                                  sde::SimGrid::from_horizon(dt, t_final),
                                  seed);
      },
      py::arg("mu") = -0.01, py::arg("c") = 0.5, py::arg("g") = 0.028,
      py::arg("epsilon0") = 0.5, py::arg("dt") = 1e-3,
      py::arg("t_final") = 100.0, py::arg("seed") = 0,
      "Euler-Maruyama path of the Ornstein-Uhlenbeck pump power.");

  m.def(
      "rpi",
      [](const std::vector<double>& estimate, const std::vector<double>& truth,
         const std::vector<double>& baseline, double dt,
         std::size_t burn_in_steps) {
        return metrics::rpi(estimate, truth, baseline, dt, burn_in_steps);
      },
      py::arg("estimate"), py::arg("truth"), py::arg("baseline"),
      py::arg("dt"), py::arg("burn_in_steps") = 0,
      "Relative performance improvement of an estimate over a baseline.");

  m.def(
      "mean_sem",
      [](const std::vector<double>& values) {
        const auto ms = metrics::mean_sem(values);
        return py::make_tuple(ms.mean, ms.sem);
      },
      py::arg("values"), "Mean and standard error of the mean.");

  m.def(
      "trial_seed",
      [](std::uint64_t master, std::uint64_t index) {
        return sde::trial_seed(master, index);
      },
      py::arg("master"), py::arg("index"),
      "Counter-based per-trial seed derivation.");
}
