#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crf/config.hpp"

namespace crf {

struct WeightError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A per-cluster weight family W_i(rho) with its admissible range Gamma.
// The equicorrelated weights are the inverse of the unit-diagonal
// exchangeable correlation matrix, expanded by Sherman-Morrison; the AR(1)
// weights are the tridiagonal matrix with unit diagonal at the ends,
// 1+rho^2 on the interior and -rho off-diagonal (the n=1 case degenerates
// to the scalar 1-rho^2).
struct WeightSpec {
  WeightClass cls = WeightClass::kIdentity;
  double rho = 0.0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;

  // gamma_lo == gamma_hi == 0 picks the class default range.
  static WeightSpec make(WeightClass cls, double rho = 0.0,
                         double gamma_lo = 0.0, double gamma_hi = 0.0);

  WeightSpec with_rho(double new_rho) const;
  bool rho_admissible(double r) const {
    return r >= gamma_lo && r <= gamma_hi;
  }
  void require_admissible() const;
  double clip_to_gamma(double r) const;
};

// out = W_i(rho) * v, O(n) work.
void weight_matvec(const WeightSpec& spec, std::span<const double> v,
                   std::span<double> out);

// In-place variant over a scratch-free buffer is not provided; callers keep
// a per-cluster scratch vector.

// Explicit n x n matrix, test oracle only (n <= 512). Row-major.
std::vector<double> weight_dense(const WeightSpec& spec, std::size_t n);

// Exact zeta(W_i(rho)) = min_j (W_jj - sum_{j'!=j} |W_jj'|) from the
// closed-form entries.
double dominance_margin(const WeightSpec& spec, std::size_t n);

// Closed-form ||W_i(rho)||_1 (max absolute row sum).
double weight_one_norm(const WeightSpec& spec, std::size_t n);

// Correlation matrix the class inverts (unit diagonal), test oracle.
std::vector<double> correlation_dense(const WeightSpec& spec, std::size_t n);

}  // namespace crf
