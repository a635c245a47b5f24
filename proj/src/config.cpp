#include "opo/config.hpp"

#include <cmath>
#include <fstream>

namespace opo::harness {

namespace {

using nlohmann::json;

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw ConfigError(std::string("config field '") + key +
                      "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

std::string sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::kTransmittance: return "T";
    case SweepParam::kDiffusion: return "g";
    case SweepParam::kTendency: return "c";
  }
  throw ConfigError("unknown sweep parameter");
}

SweepParam sweep_param_from_name(const std::string& name) {
  if (name == "T") return SweepParam::kTransmittance;
  if (name == "g") return SweepParam::kDiffusion;
  if (name == "c") return SweepParam::kTendency;
  throw ConfigError("sweep parameter must be one of T, g, c (got '" + name +
                    "')");
}

std::vector<double> default_sweep_grid(SweepParam p) {
  switch (p) {
    case SweepParam::kTransmittance:
      return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    case SweepParam::kDiffusion:
      return {0.005, 0.010, 0.015, 0.020, 0.025, 0.030, 0.035};
    case SweepParam::kTendency:
      return {0.3, 0.4, 0.5, 0.6, 0.7};
  }
  throw ConfigError("unknown sweep parameter");
}

std::size_t ExperimentConfig::burn_in_steps() const {
  return static_cast<std::size_t>(std::llround(burn_in / dt));
}

void ExperimentConfig::validate() const {
  physical.validate();
  pump.validate();
  grid().validate();
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (burn_in < 0.0) throw ConfigError("burn_in must be >= 0");
  if (burn_in >= t_final) throw ConfigError("burn_in must be < t_final");
  if (sweep && sweep->values.empty())
    throw ConfigError("sweep grid must be non-empty");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  if (j.contains("physical")) {
    const auto& p = j.at("physical");
    cfg.physical.gamma1 = get_num(p, "gamma1", cfg.physical.gamma1);
    cfg.physical.gamma2 = get_num(p, "gamma2", cfg.physical.gamma2);
    cfg.physical.transmittance =
        get_num(p, "transmittance", cfg.physical.transmittance);
    cfg.physical.theta_m = get_num(p, "theta_m", cfg.physical.theta_m);
    cfg.physical.hbar = get_num(p, "hbar", cfg.physical.hbar);
    if (p.contains("theta_lb")) cfg.theta_lb = p.at("theta_lb").get<double>();
    if (p.contains("theta_lc")) cfg.theta_lc = p.at("theta_lc").get<double>();
  }
  if (j.contains("pump")) {
    const auto& p = j.at("pump");
    cfg.pump.mu = get_num(p, "mu", cfg.pump.mu);
    cfg.pump.c = get_num(p, "c", cfg.pump.c);
    cfg.pump.g = get_num(p, "g", cfg.pump.g);
    if (p.contains("epsilon0")) {
      cfg.pump.epsilon0 = p.at("epsilon0").get<double>();
      cfg.epsilon0_explicit = true;
    } else {
      cfg.pump.epsilon0 = cfg.pump.c;
    }
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    cfg.dt = get_num(g, "dt", cfg.dt);
    cfg.t_final = get_num(g, "t_final", cfg.t_final);
  }
  if (j.contains("trials")) cfg.n_trials = j.at("trials").get<std::size_t>();
  if (j.contains("seed")) cfg.master_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<double>();
  if (j.contains("b_normalization")) {
    const std::string norm = j.at("b_normalization").get<std::string>();
    if (norm == "consistent")
      cfg.b_normalization = model::BNormalization::kConsistent;
    else if (norm == "paper")
      cfg.b_normalization = model::BNormalization::kPaper;
    else
      throw ConfigError("b_normalization must be 'consistent' or 'paper'");
  }
  if (j.contains("x0")) {
    const auto& x0 = j.at("x0");
    if (!x0.is_array() || x0.size() != 2)
      throw ConfigError("x0 must be a 2-element array");
    cfg.x0 << x0.at(0).get<double>(), x0.at(1).get<double>();
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    SweepSpec spec;
    spec.param = sweep_param_from_name(s.at("param").get<std::string>());
    if (s.contains("values"))
      spec.values = s.at("values").get<std::vector<double>>();
    else
      spec.values = default_sweep_grid(spec.param);
    cfg.sweep = spec;
  }
  if (j.contains("workers")) cfg.workers = j.at("workers").get<unsigned>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["physical"] = {{"gamma1", physical.gamma1},
                   {"gamma2", physical.gamma2},
                   {"transmittance", physical.transmittance},
                   {"theta_m", physical.theta_m},
                   {"hbar", physical.hbar}};
  if (theta_lb) j["physical"]["theta_lb"] = *theta_lb;
  if (theta_lc) j["physical"]["theta_lc"] = *theta_lc;
  j["pump"] = {{"mu", pump.mu}, {"c", pump.c}, {"g", pump.g}};
  if (epsilon0_explicit) j["pump"]["epsilon0"] = pump.epsilon0;
  j["grid"] = {{"dt", dt}, {"t_final", t_final}};
  j["trials"] = n_trials;
  j["seed"] = master_seed;
  j["burn_in"] = burn_in;
  j["b_normalization"] =
      b_normalization == model::BNormalization::kConsistent ? "consistent"
                                                            : "paper";
  j["x0"] = {x0(0), x0(1)};
  if (sweep) {
    j["sweep"] = {{"param", sweep_param_name(sweep->param)},
                  {"values", sweep->values}};
  }
  j["workers"] = workers;
  j["out_dir"] = out_dir;
  return j;
}

}  // namespace opo::harness
