#include "crf/wls.hpp"

#include <algorithm>
#include <cmath>

#include "crf/kernels.hpp"

namespace crf {

DesignAssembly assemble_design(const TreePartition& partition,
                               const ClusteredDataset& ds,
                               std::span<const std::size_t> cluster_ids) {
  DesignAssembly design;
  design.M = partition.num_leaves();
  design.counts.assign(design.M, 0);
  design.leaf_rows.reserve(cluster_ids.size());
  design.y.reserve(cluster_ids.size());
  for (std::size_t ci : cluster_ids) {
    const Cluster& c = ds.clusters[ci];
    std::vector<std::uint32_t> rows(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
      const std::size_t m = partition.leaf_index(
          std::span<const double>(c.row(j, ds.d), ds.d));
      rows[j] = static_cast<std::uint32_t>(m);
      design.counts[m] += 1;
    }
    design.total_rows += c.size();
    design.max_cluster_size = std::max(design.max_cluster_size, c.size());
    design.leaf_rows.push_back(std::move(rows));
    design.y.push_back(c.y);
  }
  return design;
}

NormalOperator::NormalOperator(const DesignAssembly& design, WeightSpec spec)
    : design_(design), spec_(spec), ops_(&kernels::ops()) {
  spec_.require_admissible();
  gather_.resize(design.max_cluster_size);
  scatter_.resize(design.max_cluster_size);
}

void NormalOperator::apply(std::span<const double> b,
                           std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (spec_.cls == WeightClass::kIdentity || spec_.rho == 0.0) {
    // chi^T chi is the diagonal of leaf counts.
    for (std::size_t m = 0; m < design_.M; ++m)
      out[m] = static_cast<double>(design_.counts[m]) * b[m];
    return;
  }
  const kernels::Ops& k = *ops_;
  const double rho = spec_.rho;
  const bool equi = spec_.cls == WeightClass::kEquicorrelated;
  const double scale = equi ? 1.0 / (1.0 - rho) : 0.0;
  for (const auto& rows : design_.leaf_rows) {
    const std::size_t n = rows.size();
    for (std::size_t j = 0; j < n; ++j) gather_[j] = b[rows[j]];
    if (equi) {
      const double c = rho / (1.0 + (static_cast<double>(n) - 1.0) * rho);
      const double total = k.sum(gather_.data(), n);
      k.scale_shift(gather_.data(), scale, -scale * c * total,
                    scatter_.data(), n);
    } else {
      k.ar1_apply(gather_.data(), scatter_.data(), n, rho);
    }
    for (std::size_t j = 0; j < n; ++j) out[rows[j]] += scatter_[j];
  }
}

std::vector<double> normal_matvec(const DesignAssembly& design,
                                  const WeightSpec& spec,
                                  std::span<const double> b) {
  std::vector<double> out(design.M, 0.0);
  NormalOperator(design, spec).apply(b, out);
  return out;
}

std::vector<double> weighted_rhs(const DesignAssembly& design,
                                 const WeightSpec& spec) {
  std::vector<double> rhs(design.M, 0.0);
  std::vector<double> w(design.max_cluster_size);
  for (std::size_t i = 0; i < design.leaf_rows.size(); ++i) {
    const auto& rows = design.leaf_rows[i];
    const auto& yi = design.y[i];
    const std::size_t n = rows.size();
    if (spec.cls == WeightClass::kIdentity || spec.rho == 0.0) {
      for (std::size_t j = 0; j < n; ++j) rhs[rows[j]] += yi[j];
    } else {
      weight_matvec(spec, yi, std::span<double>(w.data(), n));
      for (std::size_t j = 0; j < n; ++j) rhs[rows[j]] += w[j];
    }
  }
  return rhs;
}

std::size_t default_cg_max_iter(const WeightSpec& spec,
                                std::size_t max_cluster_size, double tol) {
  const std::size_t n = std::max<std::size_t>(max_cluster_size, 1);
  double c_w = 1.0, c_upper = 1.0;
  for (double endpoint : {spec.gamma_lo, spec.gamma_hi}) {
    const WeightSpec at = spec.with_rho(endpoint);
    c_w = std::min(c_w, dominance_margin(at, n));
    c_upper = std::max(c_upper, weight_one_norm(at, n));
  }
  const double kappa = 2.0 * c_upper / std::max(c_w, 1e-12);
  const double iters =
      10.0 * std::ceil(std::sqrt(kappa) * std::log(1.0 / tol));
  return static_cast<std::size_t>(std::max(iters, 32.0));
}

SolveReport cg_solve(
    const std::function<void(std::span<const double>, std::span<double>)>&
        matvec,
    std::span<const double> rhs, double tol, std::size_t max_iter,
    std::span<const double> warm_start) {
  const std::size_t n = rhs.size();
  const auto& k = kernels::ops();

  SolveReport rep;
  rep.x.assign(n, 0.0);
  std::vector<double> r(rhs.begin(), rhs.end());
  if (!warm_start.empty()) {
    std::copy(warm_start.begin(), warm_start.end(), rep.x.begin());
    std::vector<double> ax(n);
    matvec(rep.x, ax);
    k.axpy(-1.0, ax.data(), r.data(), n);
  }
  const double rhs_norm = std::sqrt(k.dot(rhs.data(), rhs.data(), n));
  const double target = tol * (rhs_norm > 0.0 ? rhs_norm : 1.0);

  double rr = k.dot(r.data(), r.data(), n);
  rep.residual_norm = std::sqrt(rr);
  if (rep.residual_norm <= target) {
    rep.converged = true;
    return rep;
  }

  std::vector<double> p(r), ap(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    matvec(p, ap);
    const double pap = k.dot(p.data(), ap.data(), n);
    if (!(pap > 0.0)) break;  // operator not SPD on this subspace
    const double alpha = rr / pap;
    k.axpy(alpha, p.data(), rep.x.data(), n);
    k.axpy(-alpha, ap.data(), r.data(), n);
    const double rr_next = k.dot(r.data(), r.data(), n);
    rep.iterations = it + 1;
    rep.residual_norm = std::sqrt(rr_next);
    if (rep.residual_norm <= target) {
      rep.converged = true;
      return rep;
    }
    k.xpay(rr_next / rr, r.data(), p.data(), n);
    rr = rr_next;
  }
  throw ConvergenceError(std::move(rep));
}

namespace {

SolveReport solve_normal(const DesignAssembly& design, const WeightSpec& spec,
                         std::span<const double> rhs, const ForestConfig& cfg,
                         std::span<const double> warm_start = {}) {
  NormalOperator op(design, spec);
  const std::size_t cap =
      cfg.cg_max_iter > 0
          ? cfg.cg_max_iter
          : default_cg_max_iter(spec, design.max_cluster_size, cfg.cg_tol);
  return cg_solve(
      [&op](std::span<const double> b, std::span<double> out) {
        op.apply(b, out);
      },
      rhs, cfg.cg_tol, cap, warm_start);
}

}  // namespace

LeafFit fitted_leaf_values(const DesignAssembly& design,
                           const WeightSpec& spec, const ForestConfig& cfg) {
  if (design.total_rows == 0)
    throw std::invalid_argument("fitted_leaf_values: empty design");
  LeafFit fit;
  fit.imputed.assign(design.M, 0);

  if (spec.cls == WeightClass::kIdentity || spec.rho == 0.0) {
    // Diagonal system: exact leaf means, no CG.
    std::vector<double> sums(design.M, 0.0);
    for (std::size_t i = 0; i < design.leaf_rows.size(); ++i)
      for (std::size_t j = 0; j < design.leaf_rows[i].size(); ++j)
        sums[design.leaf_rows[i][j]] += design.y[i][j];
    fit.gamma.assign(design.M, 0.0);
    for (std::size_t m = 0; m < design.M; ++m)
      if (design.counts[m] > 0)
        fit.gamma[m] = sums[m] / static_cast<double>(design.counts[m]);
  } else {
    const auto rhs = weighted_rhs(design, spec);
    auto rep = solve_normal(design, spec, rhs, cfg);
    fit.gamma = std::move(rep.x);
    fit.cg_iterations = rep.iterations;
  }

  if (design.has_empty_leaf()) {
    double wsum = 0.0, vsum = 0.0;
    for (std::size_t m = 0; m < design.M; ++m)
      if (design.counts[m] > 0) {
        wsum += static_cast<double>(design.counts[m]) * fit.gamma[m];
        vsum += static_cast<double>(design.counts[m]);
      }
    const double fill = vsum > 0.0 ? wsum / vsum : 0.0;
    for (std::size_t m = 0; m < design.M; ++m)
      if (design.counts[m] == 0) {
        fit.gamma[m] = fill;
        fit.imputed[m] = 1;
      }
  }
  return fit;
}

SolveReport basis_solve(const DesignAssembly& design, const WeightSpec& spec,
                        std::size_t m, const ForestConfig& cfg,
                        std::span<const double> warm_start) {
  if (m >= design.M) throw std::invalid_argument("basis_solve: leaf index");
  if (design.counts[m] == 0)
    throw std::invalid_argument("basis_solve: empty leaf");
  std::vector<double> rhs(design.M, 0.0);
  rhs[m] = 1.0;
  if (spec.cls == WeightClass::kIdentity || spec.rho == 0.0) {
    SolveReport rep;
    rep.x.assign(design.M, 0.0);
    rep.x[m] = 1.0 / static_cast<double>(design.counts[m]);
    rep.converged = true;
    return rep;
  }
  return solve_normal(design, spec, rhs, cfg, warm_start);
}

}  // namespace crf
