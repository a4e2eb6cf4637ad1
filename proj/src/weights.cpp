#include "crf/weights.hpp"

#include <algorithm>
#include <cmath>

#include "crf/kernels.hpp"

namespace crf {

WeightSpec WeightSpec::make(WeightClass cls, double rho, double gamma_lo,
                            double gamma_hi) {
  WeightSpec spec;
  spec.cls = cls;
  spec.rho = rho;
  if (gamma_lo == 0.0 && gamma_hi == 0.0) {
    switch (cls) {
      case WeightClass::kIdentity:
        spec.gamma_lo = spec.gamma_hi = 0.0;
        break;
      case WeightClass::kEquicorrelated:
        spec.gamma_lo = 0.0;
        spec.gamma_hi = 0.95;
        break;
      case WeightClass::kAr1:
        spec.gamma_lo = -0.95;
        spec.gamma_hi = 0.95;
        break;
    }
  } else {
    spec.gamma_lo = gamma_lo;
    spec.gamma_hi = gamma_hi;
  }
  if (cls == WeightClass::kIdentity) spec.gamma_lo = spec.gamma_hi = 0.0;
  if (cls == WeightClass::kEquicorrelated)
    spec.gamma_lo = std::max(spec.gamma_lo, 0.0);
  spec.gamma_lo = std::max(spec.gamma_lo, -0.95);
  spec.gamma_hi = std::min(spec.gamma_hi, 0.95);
  if (spec.gamma_lo > spec.gamma_hi)
    throw WeightError("empty admissible range Gamma");
  spec.require_admissible();
  return spec;
}

WeightSpec WeightSpec::with_rho(double new_rho) const {
  WeightSpec s = *this;
  s.rho = new_rho;
  s.require_admissible();
  return s;
}

void WeightSpec::require_admissible() const {
  if (!rho_admissible(rho))
    throw WeightError("rho=" + std::to_string(rho) +
                      " outside admissible range [" +
                      std::to_string(gamma_lo) + ", " +
                      std::to_string(gamma_hi) + "]");
}

double WeightSpec::clip_to_gamma(double r) const {
  return std::clamp(r, gamma_lo, gamma_hi);
}

void weight_matvec(const WeightSpec& spec, std::span<const double> v,
                   std::span<double> out) {
  spec.require_admissible();
  const std::size_t n = v.size();
  const auto& k = kernels::ops();
  switch (spec.cls) {
    case WeightClass::kIdentity:
      std::copy(v.begin(), v.end(), out.begin());
      return;
    case WeightClass::kEquicorrelated: {
      const double rho = spec.rho;
      if (rho == 0.0) {
        std::copy(v.begin(), v.end(), out.begin());
        return;
      }
      const double c =
          rho / (1.0 + (static_cast<double>(n) - 1.0) * rho);
      const double total = k.sum(v.data(), n);
      const double scale = 1.0 / (1.0 - rho);
      k.scale_shift(v.data(), scale, -scale * c * total, out.data(), n);
      return;
    }
    case WeightClass::kAr1:
      k.ar1_apply(v.data(), out.data(), n, spec.rho);
      return;
  }
}

std::vector<double> weight_dense(const WeightSpec& spec, std::size_t n) {
  if (n > 512) throw WeightError("weight_dense oracle capped at n <= 512");
  spec.require_admissible();
  std::vector<double> w(n * n, 0.0);
  switch (spec.cls) {
    case WeightClass::kIdentity:
      for (std::size_t j = 0; j < n; ++j) w[j * n + j] = 1.0;
      break;
    case WeightClass::kEquicorrelated: {
      const double rho = spec.rho;
      const double c =
          rho / (1.0 + (static_cast<double>(n) - 1.0) * rho);
      const double scale = 1.0 / (1.0 - rho);
      const double off = rho == 0.0 ? 0.0 : -scale * c;
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l)
          w[j * n + l] = (j == l) ? (rho == 0.0 ? 1.0 : scale * (1.0 - c))
                                  : off;
      break;
    }
    case WeightClass::kAr1: {
      const double rho = spec.rho;
      if (n == 1) {
        w[0] = 1.0 - rho * rho;
        break;
      }
      for (std::size_t j = 0; j < n; ++j) {
        w[j * n + j] = (j == 0 || j + 1 == n) ? 1.0 : 1.0 + rho * rho;
        if (j + 1 < n) {
          w[j * n + j + 1] = -rho;
          w[(j + 1) * n + j] = -rho;
        }
      }
      break;
    }
  }
  return w;
}

double dominance_margin(const WeightSpec& spec, std::size_t n) {
  spec.require_admissible();
  const double rho = spec.rho;
  switch (spec.cls) {
    case WeightClass::kIdentity:
      return 1.0;
    case WeightClass::kEquicorrelated:
      return 1.0 / (1.0 + (static_cast<double>(n) - 1.0) * rho);
    case WeightClass::kAr1: {
      const double a = std::abs(rho);
      if (n == 1) return 1.0 - rho * rho;
      if (n == 2) return 1.0 - a;
      return (1.0 - a) * (1.0 - a);
    }
  }
  return 1.0;
}

double weight_one_norm(const WeightSpec& spec, std::size_t n) {
  spec.require_admissible();
  const double rho = spec.rho;
  switch (spec.cls) {
    case WeightClass::kIdentity:
      return 1.0;
    case WeightClass::kEquicorrelated: {
      if (n == 1 || rho == 0.0) return 1.0;
      const double c =
          rho / (1.0 + (static_cast<double>(n) - 1.0) * rho);
      return (1.0 + (static_cast<double>(n) - 2.0) * c) / (1.0 - rho);
    }
    case WeightClass::kAr1: {
      const double a = std::abs(rho);
      if (n == 1) return 1.0 - rho * rho;
      if (n == 2) return 1.0 + a;
      return (1.0 + a) * (1.0 + a);
    }
  }
  return 1.0;
}

std::vector<double> correlation_dense(const WeightSpec& spec, std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l) {
      switch (spec.cls) {
        case WeightClass::kIdentity:
          c[j * n + l] = j == l ? 1.0 : 0.0;
          break;
        case WeightClass::kEquicorrelated:
          c[j * n + l] = j == l ? 1.0 : spec.rho;
          break;
        case WeightClass::kAr1:
          c[j * n + l] = std::pow(spec.rho, std::abs(static_cast<double>(j) -
                                                     static_cast<double>(l)));
          break;
      }
    }
  return c;
}

}  // namespace crf
