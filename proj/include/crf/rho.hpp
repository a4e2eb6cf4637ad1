#pragma once

#include <span>
#include <vector>

#include "crf/wls.hpp"

namespace crf {

// Pilot residuals on the correlation subsample: response minus the
// unweighted leaf mean of the corr-sample responses in the row's leaf.
struct PilotResiduals {
  DesignAssembly design;  // over the corr clusters
  std::vector<std::vector<double>> residuals;  // aligned to design rows
};

PilotResiduals pilot_residuals(const TreePartition& partition,
                               const ClusteredDataset& ds,
                               std::span<const std::size_t> corr_ids);

struct RhoLossCurve {
  std::vector<std::pair<double, double>> grid;  // (rho, loss)
  double rho_hat = 0.0;
  RhoStrategy strategy = RhoStrategy::kFixed;
};

// Empirical Q-adjusted integrated tree variance at rho:
//   tr{ diag(q) A^{-1} B A^{-1} },  A = sum chi^T W chi,
//   B = sum chi^T W eps eps^T W chi,
// evaluated without forming B: one basis solve per Q-supported leaf, then
// per-cluster squared projections. Masses are renormalised over occupied
// leaves; empty-leaf mass is dropped.
double loss_q(const PilotResiduals& residuals, const WeightSpec& spec,
              double rho, std::span<const double> masses,
              const ForestConfig& cfg);

// Training-distribution loss: same trace with diag(q) replaced by the
// (unnormalised) corr-sample leaf counts.
double loss_train(const PilotResiduals& residuals, const WeightSpec& spec,
                  double rho, const ForestConfig& cfg);

// One target per loss to minimise; solves are shared across targets at
// each grid point.
struct RhoLossTarget {
  std::vector<double> masses;
  bool normalize = true;  // false for the training loss
};

std::vector<RhoLossCurve> estimate_rho_multi(
    const PilotResiduals& residuals, const WeightSpec& spec,
    const ForestConfig& cfg, std::span<const RhoLossTarget> targets);

// Grid argmin of the requested loss (ties -> smaller |rho|), the moment
// estimator, or the fixed passthrough.
RhoLossCurve estimate_rho(const PilotResiduals& residuals,
                          const WeightSpec& spec, const ForestConfig& cfg,
                          RhoStrategy strategy,
                          std::span<const double> masses = {});

// Intercept-only random-effects moment estimator: mean within-cluster
// pairwise residual product over the overall residual second moment,
// clipped to Gamma. All-zero residuals resolve to 0.
double moment_rho(const PilotResiduals& residuals, const WeightSpec& spec);

}  // namespace crf
