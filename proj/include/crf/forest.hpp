#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crf/rho.hpp"
#include "crf/shift.hpp"
#include "crf/wls.hpp"

namespace crf {

struct ForestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClusteredTree {
  TreePartition partition;
  double rho_hat = 0.0;
  std::vector<double> leaf_values;
  std::vector<std::uint8_t> imputed;  // per leaf
  std::vector<std::size_t> split_ids, eval_ids, corr_ids;
  bool degenerate = false;  // empty eval design; skipped in aggregation
};

struct ClusteredForest {
  ForestConfig config;
  std::size_t d = 0;
  std::vector<double> box_lo, box_hi;  // training covariate bounding box
  std::vector<std::vector<ClusteredTree>> bags;  // R bags of B trees
};

struct IntervalEstimate {
  double point = 0.0;
  double variance = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// One weighting method to fit on shared partitions: several methods can
// reuse the same subsets, partitions, eval designs and pilot residuals,
// differing only in rho and hence leaf values.
struct ForestMethod {
  RhoStrategy strategy = RhoStrategy::kFixed;
  double rho_fixed = 0.0;
  CovariateShiftSpec shift;  // used by q_shift
};

ClusteredTree fit_tree(const ClusteredDataset& ds,
                       std::span<const std::size_t> split_ids,
                       std::span<const std::size_t> eval_ids,
                       std::span<const std::size_t> corr_ids,
                       const ForestConfig& cfg,
                       const CovariateShiftSpec& shift, RngStream& rng);

ClusteredForest fit_forest(const ClusteredDataset& ds,
                           const ForestConfig& cfg,
                           const CovariateShiftSpec& shift);

// Fit one forest per method with shared subsampling and partitions. Entry
// point for method comparisons where the trees differ only in weighting.
std::vector<ClusteredForest> fit_forests(const ClusteredDataset& ds,
                                         const ForestConfig& cfg,
                                         std::span<const ForestMethod> methods);

// mu_hat(x): mean over bags of the mean over that bag's non-degenerate
// trees. `extrapolated` reports x outside the training bounding box.
double predict(const ClusteredForest& forest, std::span<const double> x,
               bool* extrapolated = nullptr);

// V_hat(x) = (1/R) sum_r (mu_r(x) - mu(x))^2; requires honesty and R >= 2.
double variance_little_bags(const ClusteredForest& forest,
                            std::span<const double> x);

IntervalEstimate confidence_interval(const ClusteredForest& forest,
                                     std::span<const double> x,
                                     double alpha_ci);

// Standard normal quantile, |error| < 1e-9.
double normal_quantile(double p);

// Integral of mu_hat against Q: exact for point mass and empirical sets,
// Monte-Carlo with n_draws for a uniform box.
double integrated_mean(const ClusteredForest& forest,
                       const CovariateShiftSpec& shift, std::size_t n_draws,
                       RngStream& rng);

// Plug-in subsample-to-node-size ratio
//   2 (C_bias^2 phi I / (n_c^{2 phi/d} v_hat))^{d/(2 phi + d)}
// with phi = pi_frac log((1-alpha)^{-1}) / log(alpha^{-1}).
double recommend_ratio(std::size_t I, std::size_t n_c, std::size_t d,
                       double alpha_split, double pi_frac, double c_bias,
                       double v_hat);

// Q-integrated across-tree variance of single-tree predictions; a plug-in
// v_hat for recommend_ratio.
double estimate_vq(const ClusteredForest& forest,
                   const CovariateShiftSpec& shift, std::size_t n_draws,
                   RngStream& rng);

}  // namespace crf
