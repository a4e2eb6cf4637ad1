#include "crf/rho.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace crf {
namespace {

// w_i = W_i(rho) eps_i per cluster, flattened into `out`.
void weighted_residuals(const PilotResiduals& res, const WeightSpec& spec,
                        std::vector<std::vector<double>>& out) {
  out.resize(res.residuals.size());
  for (std::size_t i = 0; i < res.residuals.size(); ++i) {
    const auto& eps = res.residuals[i];
    out[i].resize(eps.size());
    if (spec.cls == WeightClass::kIdentity || spec.rho == 0.0)
      std::copy(eps.begin(), eps.end(), out[i].begin());
    else
      weight_matvec(spec, eps, out[i]);
  }
}

// s_m = sum_i (a_m . z_i)^2 with z_i = chi_i^T w_i, so the dot is a gather
// of a_m at the cluster's leaf rows against w_i.
double leaf_quadratic(const DesignAssembly& design,
                      const std::vector<std::vector<double>>& w,
                      std::span<const double> a) {
  double s = 0.0;
  for (std::size_t i = 0; i < design.leaf_rows.size(); ++i) {
    const auto& rows = design.leaf_rows[i];
    const auto& wi = w[i];
    double dot = 0.0;
    for (std::size_t j = 0; j < rows.size(); ++j) dot += a[rows[j]] * wi[j];
    s += dot * dot;
  }
  return s;
}

struct LossEngine {
  const PilotResiduals* res = nullptr;
  const ForestConfig* cfg = nullptr;
  std::vector<std::vector<double>> masses;  // per target, renormalised
  std::vector<std::size_t> active;          // union of mass-carrying leaves

  LossEngine(const PilotResiduals& r, const ForestConfig& c,
             std::span<const RhoLossTarget> targets)
      : res(&r), cfg(&c) {
    const DesignAssembly& design = r.design;
    masses.reserve(targets.size());
    std::vector<std::uint8_t> in_union(design.M, 0);
    for (const auto& t : targets) {
      if (t.masses.size() != design.M)
        throw std::invalid_argument("rho loss: mass vector length mismatch");
      std::vector<double> q(design.M, 0.0);
      double total = 0.0;
      for (std::size_t m = 0; m < design.M; ++m) {
        if (design.counts[m] == 0 || t.masses[m] <= 0.0) continue;
        q[m] = t.masses[m];
        total += q[m];
      }
      if (total <= 0.0)
        throw std::invalid_argument(
            "rho loss: no mass on occupied leaves");
      if (t.normalize)
        for (double& v : q) v /= total;
      for (std::size_t m = 0; m < design.M; ++m)
        if (q[m] > 0.0 && !in_union[m]) {
          in_union[m] = 1;
          active.push_back(m);
        }
      masses.push_back(std::move(q));
    }
    std::sort(active.begin(), active.end());
  }

  // Losses for every target at one rho. `warm` carries the basis solutions
  // across grid points, indexed like `active`.
  std::vector<double> eval(const WeightSpec& sp,
                           std::vector<std::vector<double>>* warm) const {
    const DesignAssembly& design = res->design;
    std::vector<std::vector<double>> w;
    weighted_residuals(*res, sp, w);
    std::vector<double> losses(masses.size(), 0.0);
    for (std::size_t idx = 0; idx < active.size(); ++idx) {
      const std::size_t m = active[idx];
      std::span<const double> start;
      if (warm && !(*warm)[idx].empty()) start = (*warm)[idx];
      SolveReport sol = basis_solve(design, sp, m, *cfg, start);
      const double s_m = leaf_quadratic(design, w, sol.x);
      for (std::size_t t = 0; t < masses.size(); ++t)
        losses[t] += masses[t][m] * s_m;
      if (warm) (*warm)[idx] = std::move(sol.x);
    }
    return losses;
  }
};

std::vector<double> grid_points(const WeightSpec& spec, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rho grid must be non-empty");
  std::vector<double> pts;
  if (n == 1 || spec.gamma_hi == spec.gamma_lo) {
    pts.push_back(spec.gamma_lo);
    return pts;
  }
  pts.reserve(n);
  const double step = (spec.gamma_hi - spec.gamma_lo) / double(n - 1);
  for (std::size_t g = 0; g < n; ++g)
    pts.push_back(g + 1 == n ? spec.gamma_hi : spec.gamma_lo + step * g);
  return pts;
}

}  // namespace

PilotResiduals pilot_residuals(const TreePartition& partition,
                               const ClusteredDataset& ds,
                               std::span<const std::size_t> corr_ids) {
  PilotResiduals out;
  out.design = assemble_design(partition, ds, corr_ids);
  const DesignAssembly& design = out.design;
  std::vector<double> mean(design.M, 0.0);
  for (std::size_t i = 0; i < design.leaf_rows.size(); ++i)
    for (std::size_t j = 0; j < design.leaf_rows[i].size(); ++j)
      mean[design.leaf_rows[i][j]] += design.y[i][j];
  for (std::size_t m = 0; m < design.M; ++m)
    if (design.counts[m] > 0) mean[m] /= double(design.counts[m]);
  out.residuals.resize(design.leaf_rows.size());
  for (std::size_t i = 0; i < design.leaf_rows.size(); ++i) {
    out.residuals[i].resize(design.leaf_rows[i].size());
    for (std::size_t j = 0; j < design.leaf_rows[i].size(); ++j)
      out.residuals[i][j] =
          design.y[i][j] - mean[design.leaf_rows[i][j]];
  }
  return out;
}

double loss_q(const PilotResiduals& residuals, const WeightSpec& spec,
              double rho, std::span<const double> masses,
              const ForestConfig& cfg) {
  RhoLossTarget target;
  target.masses.assign(masses.begin(), masses.end());
  target.normalize = true;
  LossEngine engine(residuals, cfg, std::span(&target, 1));
  return engine.eval(spec.with_rho(rho), nullptr)[0];
}

double loss_train(const PilotResiduals& residuals, const WeightSpec& spec,
                  double rho, const ForestConfig& cfg) {
  RhoLossTarget target;
  target.masses.reserve(residuals.design.M);
  for (std::size_t c : residuals.design.counts)
    target.masses.push_back(double(c));
  target.normalize = false;
  LossEngine engine(residuals, cfg, std::span(&target, 1));
  return engine.eval(spec.with_rho(rho), nullptr)[0];
}

std::vector<RhoLossCurve> estimate_rho_multi(
    const PilotResiduals& residuals, const WeightSpec& spec,
    const ForestConfig& cfg, std::span<const RhoLossTarget> targets) {
  LossEngine engine(residuals, cfg, targets);
  const std::vector<double> grid = grid_points(spec, cfg.rho_grid);
  std::vector<RhoLossCurve> curves(targets.size());
  for (auto& c : curves) c.grid.reserve(grid.size());
  std::vector<std::vector<double>> warm(engine.active.size());
  for (double rho : grid) {
    std::vector<double> losses = engine.eval(spec.with_rho(rho), &warm);
    for (std::size_t t = 0; t < curves.size(); ++t)
      curves[t].grid.emplace_back(rho, losses[t]);
  }
  for (auto& c : curves) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < c.grid.size(); ++g) {
      const auto& [rho, loss] = c.grid[g];
      const auto& [brho, bloss] = c.grid[best];
      if (loss < bloss ||
          (loss == bloss && std::abs(rho) < std::abs(brho)))
        best = g;
    }
    c.rho_hat = c.grid[best].first;
  }
  return curves;
}

RhoLossCurve estimate_rho(const PilotResiduals& residuals,
                          const WeightSpec& spec, const ForestConfig& cfg,
                          RhoStrategy strategy,
                          std::span<const double> masses) {
  RhoLossCurve curve;
  curve.strategy = strategy;
  switch (strategy) {
    case RhoStrategy::kFixed: {
      spec.require_admissible();
      curve.rho_hat = spec.rho;
      return curve;
    }
    case RhoStrategy::kMoment: {
      curve.rho_hat = moment_rho(residuals, spec);
      return curve;
    }
    case RhoStrategy::kQShift: {
      RhoLossTarget target;
      target.masses.assign(masses.begin(), masses.end());
      target.normalize = true;
      auto curves =
          estimate_rho_multi(residuals, spec, cfg, std::span(&target, 1));
      curves[0].strategy = strategy;
      return std::move(curves[0]);
    }
    case RhoStrategy::kTrain: {
      RhoLossTarget target;
      target.masses.reserve(residuals.design.M);
      for (std::size_t c : residuals.design.counts)
        target.masses.push_back(double(c));
      target.normalize = false;
      auto curves =
          estimate_rho_multi(residuals, spec, cfg, std::span(&target, 1));
      curves[0].strategy = strategy;
      return std::move(curves[0]);
    }
  }
  throw std::logic_error("unknown rho strategy");
}

double moment_rho(const PilotResiduals& residuals, const WeightSpec& spec) {
  double pair_sum = 0.0;
  std::size_t pair_count = 0;
  double sq_sum = 0.0;
  std::size_t rows = 0;
  for (const auto& eps : residuals.residuals) {
    for (double e : eps) {
      sq_sum += e * e;
      ++rows;
    }
    for (std::size_t j = 0; j < eps.size(); ++j)
      for (std::size_t l = j + 1; l < eps.size(); ++l) {
        pair_sum += eps[j] * eps[l];
        ++pair_count;
      }
  }
  if (pair_count == 0)
    throw std::invalid_argument(
        "moment_rho: no cluster with at least two observations");
  if (rows == 0 || sq_sum == 0.0) return spec.clip_to_gamma(0.0);
  const double second_moment = sq_sum / double(rows);
  const double raw = (pair_sum / double(pair_count)) / second_moment;
  return spec.clip_to_gamma(raw);
}

}  // namespace crf
