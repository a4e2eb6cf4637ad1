#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace crf {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class WeightClass { kIdentity, kEquicorrelated, kAr1 };

enum class RhoStrategy { kFixed, kQShift, kTrain, kMoment };

std::string to_string(WeightClass c);
std::string to_string(RhoStrategy s);
WeightClass weight_class_from_string(const std::string& s);
RhoStrategy rho_strategy_from_string(const std::string& s);

struct ForestConfig {
  std::size_t s_I = 0;       // eval subsample size (clusters); 0 = from beta
  std::size_t s_corr = 0;    // correlation subsample size; 0 = same as s_I
  std::size_t k = 10;        // minimum node size (observations)
  std::size_t B = 500;       // trees per bag
  std::size_t R = 1;         // little bags
  double beta = 0.0;         // s_I = floor(I^beta / 3) when s_I unset
  double alpha_split = 0.05;
  double pi_frac = 0.25;
  bool honesty = true;
  double dishonest_frac = 0.5;  // subsample fraction in dishonest mode
  double alpha_ci = 0.05;
  std::uint64_t seed = 0;
  WeightClass weight_class = WeightClass::kIdentity;
  RhoStrategy rho_strategy = RhoStrategy::kFixed;
  double rho_fixed = 0.0;
  std::size_t rho_grid = 33;
  double gamma_lo = 0.0;  // 0/0 = class default
  double gamma_hi = 0.0;
  double cg_tol = 1e-10;
  std::size_t cg_max_iter = 0;  // 0 = condition-bound default
  std::size_t threads = 1;

  void validate() const;

  // Fill derived values against a concrete dataset size.
  void resolve(std::size_t num_clusters);
};

ForestConfig load_config(const std::string& path);
std::string config_to_json(const ForestConfig& cfg);
ForestConfig config_from_json(const std::string& json_text);

}  // namespace crf
