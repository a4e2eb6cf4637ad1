#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crf/kernels.hpp"
#include "crf/partition.hpp"
#include "crf/weights.hpp"

namespace crf {

// Leaf-membership design chi over a set of clusters, stored as per-cluster
// leaf-index sequences plus per-leaf counts. Responses travel with the
// design so solves and residual sweeps can share it.
struct DesignAssembly {
  std::vector<std::vector<std::uint32_t>> leaf_rows;  // J(X_ij) per cluster
  std::vector<std::vector<double>> y;                 // responses per cluster
  std::vector<std::size_t> counts;                    // v_m per leaf
  std::size_t M = 0;
  std::size_t total_rows = 0;
  std::size_t max_cluster_size = 0;

  bool has_empty_leaf() const {
    for (std::size_t c : counts)
      if (c == 0) return true;
    return false;
  }
};

struct SolveReport {
  std::vector<double> x;
  std::size_t iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
};

struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(SolveReport r)
      : std::runtime_error("conjugate gradient failed to converge after " +
                           std::to_string(r.iterations) + " iterations"),
        report(std::move(r)) {}
  SolveReport report;
};

DesignAssembly assemble_design(const TreePartition& partition,
                               const ClusteredDataset& ds,
                               std::span<const std::size_t> cluster_ids);

// The normal-equation operator b -> (sum_i chi_i^T W_i(rho) chi_i) b in
// O(sum n_i) work: per cluster gather b at the cluster's leaf indices,
// apply the O(n) weight kernel, scatter-add back.
class NormalOperator {
 public:
  NormalOperator(const DesignAssembly& design, WeightSpec spec);
  void apply(std::span<const double> b, std::span<double> out) const;
  const WeightSpec& spec() const { return spec_; }

 private:
  const DesignAssembly& design_;
  WeightSpec spec_;
  const kernels::Ops* ops_;  // resolved once; apply() sits in the CG hot loop
  mutable std::vector<double> gather_, scatter_;
};

// Free-function form of the operator (spec surface).
std::vector<double> normal_matvec(const DesignAssembly& design,
                                  const WeightSpec& spec,
                                  std::span<const double> b);

// rhs = sum_i chi_i^T W_i(rho) y_i, O(sum n_i).
std::vector<double> weighted_rhs(const DesignAssembly& design,
                                 const WeightSpec& spec);

// Iteration cap from the condition-number bound kappa <= 2 C_W / c_W over
// the Gamma endpoints, when cfg.cg_max_iter is 0.
std::size_t default_cg_max_iter(const WeightSpec& spec,
                                std::size_t max_cluster_size, double tol);

// Plain CG; throws ConvergenceError (carrying the best iterate) at the cap.
SolveReport cg_solve(
    const std::function<void(std::span<const double>, std::span<double>)>&
        matvec,
    std::span<const double> rhs, double tol, std::size_t max_iter,
    std::span<const double> warm_start = {});

struct LeafFit {
  std::vector<double> gamma;
  std::vector<std::uint8_t> imputed;  // per leaf
  std::size_t cg_iterations = 0;
};

// Leaf values: solve (chi^T W chi) gamma = chi^T W y. Identity weights (or
// rho == 0) reduce to exact per-leaf means of y. Empty leaves are imputed
// with the count-weighted mean of the occupied leaf values and flagged.
LeafFit fitted_leaf_values(const DesignAssembly& design,
                           const WeightSpec& spec, const ForestConfig& cfg);

// Column (chi^T W chi)^{-1} e_m restricted to occupied leaves.
SolveReport basis_solve(const DesignAssembly& design, const WeightSpec& spec,
                        std::size_t m, const ForestConfig& cfg,
                        std::span<const double> warm_start = {});

}  // namespace crf
