#include "crf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace crf {

std::string to_string(WeightClass c) {
  switch (c) {
    case WeightClass::kIdentity: return "identity";
    case WeightClass::kEquicorrelated: return "equicorrelated";
    case WeightClass::kAr1: return "ar1";
  }
  return "identity";
}

std::string to_string(RhoStrategy s) {
  switch (s) {
    case RhoStrategy::kFixed: return "fixed";
    case RhoStrategy::kQShift: return "q_shift";
    case RhoStrategy::kTrain: return "train";
    case RhoStrategy::kMoment: return "moment";
  }
  return "fixed";
}

WeightClass weight_class_from_string(const std::string& s) {
  if (s == "identity") return WeightClass::kIdentity;
  if (s == "equicorrelated") return WeightClass::kEquicorrelated;
  if (s == "ar1") return WeightClass::kAr1;
  throw ConfigError("unknown weight_class: " + s);
}

RhoStrategy rho_strategy_from_string(const std::string& s) {
  if (s == "fixed") return RhoStrategy::kFixed;
  if (s == "q_shift") return RhoStrategy::kQShift;
  if (s == "train") return RhoStrategy::kTrain;
  if (s == "moment") return RhoStrategy::kMoment;
  throw ConfigError("unknown rho_strategy: " + s);
}

void ForestConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (B < 1) throw ConfigError("B must be >= 1");
  if (R < 1) throw ConfigError("R must be >= 1");
  if (!(alpha_split > 0.0 && alpha_split <= 0.5))
    throw ConfigError("alpha_split must be in (0, 0.5]");
  if (!(pi_frac > 0.0 && pi_frac <= 1.0))
    throw ConfigError("pi_frac must be in (0, 1]");
  if (!(alpha_ci > 0.0 && alpha_ci < 1.0))
    throw ConfigError("alpha_ci must be in (0, 1)");
  if (beta < 0.0 || beta >= 1.0)
    throw ConfigError("beta must be in [0, 1)");
  if (!(dishonest_frac > 0.0 && dishonest_frac <= 1.0))
    throw ConfigError("dishonest_frac must be in (0, 1]");
  if (rho_grid < 2) throw ConfigError("rho_grid must be >= 2");
  if (!(cg_tol > 0.0)) throw ConfigError("cg_tol must be positive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

void ForestConfig::resolve(std::size_t num_clusters) {
  validate();
  if (s_I == 0) {
    if (beta <= 0.0)
      throw ConfigError("either s_I or beta must be given");
    s_I = static_cast<std::size_t>(
        std::floor(std::pow(static_cast<double>(num_clusters), beta) / 3.0));
    if (s_I < 1) s_I = 1;
  }
  if (s_corr == 0) s_corr = s_I;
  if (honesty) {
    const std::size_t half = num_clusters / 2;
    if (2 * s_I + s_corr > half)
      throw ConfigError(
          "honesty requires 2*s_I + s_corr <= floor(I/2); have s_I=" +
          std::to_string(s_I) + ", s_corr=" + std::to_string(s_corr) +
          ", floor(I/2)=" + std::to_string(half));
  } else {
    const auto sub = static_cast<std::size_t>(
        std::floor(dishonest_frac * static_cast<double>(num_clusters)));
    if (sub < 1) throw ConfigError("dishonest subsample is empty");
  }
}

namespace {

using nlohmann::json;

ForestConfig from_json_obj(const json& j) {
  ForestConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("s_I", cfg.s_I);
  get("s_corr", cfg.s_corr);
  get("k", cfg.k);
  get("B", cfg.B);
  get("R", cfg.R);
  get("beta", cfg.beta);
  get("alpha_split", cfg.alpha_split);
  get("pi_frac", cfg.pi_frac);
  get("honesty", cfg.honesty);
  get("dishonest_frac", cfg.dishonest_frac);
  get("alpha_ci", cfg.alpha_ci);
  get("seed", cfg.seed);
  get("rho_fixed", cfg.rho_fixed);
  get("rho_grid", cfg.rho_grid);
  get("gamma_lo", cfg.gamma_lo);
  get("gamma_hi", cfg.gamma_hi);
  get("cg_tol", cfg.cg_tol);
  get("cg_max_iter", cfg.cg_max_iter);
  get("threads", cfg.threads);
  if (j.contains("weight_class"))
    cfg.weight_class =
        weight_class_from_string(j.at("weight_class").get<std::string>());
  if (j.contains("rho_strategy"))
    cfg.rho_strategy =
        rho_strategy_from_string(j.at("rho_strategy").get<std::string>());
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const char* known[] = {
        "s_I",          "s_corr",   "k",           "B",
        "R",            "beta",     "alpha_split", "pi_frac",
        "honesty",      "dishonest_frac", "alpha_ci", "seed",
        "weight_class", "rho_strategy", "rho_fixed", "rho_grid",
        "gamma_lo",     "gamma_hi", "cg_tol",      "cg_max_iter",
        "threads"};
    bool found = false;
    for (const char* k : known)
      if (it.key() == k) { found = true; break; }
    if (!found) throw ConfigError("unknown config key: " + it.key());
  }
  return cfg;
}

}  // namespace

ForestConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

ForestConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_json_obj(j);
}

std::string config_to_json(const ForestConfig& cfg) {
  json j;
  j["s_I"] = cfg.s_I;
  j["s_corr"] = cfg.s_corr;
  j["k"] = cfg.k;
  j["B"] = cfg.B;
  j["R"] = cfg.R;
  j["beta"] = cfg.beta;
  j["alpha_split"] = cfg.alpha_split;
  j["pi_frac"] = cfg.pi_frac;
  j["honesty"] = cfg.honesty;
  j["dishonest_frac"] = cfg.dishonest_frac;
  j["alpha_ci"] = cfg.alpha_ci;
  j["seed"] = cfg.seed;
  j["weight_class"] = to_string(cfg.weight_class);
  j["rho_strategy"] = to_string(cfg.rho_strategy);
  j["rho_fixed"] = cfg.rho_fixed;
  j["rho_grid"] = cfg.rho_grid;
  j["gamma_lo"] = cfg.gamma_lo;
  j["gamma_hi"] = cfg.gamma_hi;
  j["cg_tol"] = cfg.cg_tol;
  j["cg_max_iter"] = cfg.cg_max_iter;
  j["threads"] = cfg.threads;
  return j.dump(2);
}

}  // namespace crf
