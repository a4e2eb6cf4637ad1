#pragma once

#include <cstddef>

// Vectorised inner loops used by the conjugate-gradient solver and the
// per-cluster weight applications. Scalar reference implementations always
// exist; an AVX2 variant is selected at runtime when the CPU supports it.
// The two variants are equivalence-tested against each other.

namespace crf::kernels {

struct Ops {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* v, std::size_t n);
  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = x + a*y
  void (*xpay)(double a, const double* x, double* y, std::size_t n);
  // out = a*v + b
  void (*scale_shift)(const double* v, double a, double b, double* out,
                      std::size_t n);
  // Tridiagonal AR(1) inverse-correlation apply: unit diagonal at the ends,
  // 1+rho^2 on the interior diagonal, -rho off-diagonal. n==1 is the
  // (1-rho^2) scalar case.
  void (*ar1_apply)(const double* v, double* out, std::size_t n, double rho);
  const char* name;
};

const Ops& scalar_ops();

// Best available variant for this machine (scalar unless AVX2 is detected).
const Ops& ops();

}  // namespace crf::kernels
