#include "crf/kernels.hpp"

namespace crf::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_scalar(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale_shift_scalar(const double* v, double a, double b, double* out,
                        std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * v[i] + b;
}

void ar1_apply_scalar(const double* v, double* out, std::size_t n,
                      double rho) {
  if (n == 1) {
    out[0] = (1.0 - rho * rho) * v[0];
    return;
  }
  const double d = 1.0 + rho * rho;
  out[0] = v[0] - rho * v[1];
  for (std::size_t j = 1; j + 1 < n; ++j)
    out[j] = d * v[j] - rho * (v[j - 1] + v[j + 1]);
  out[n - 1] = v[n - 1] - rho * v[n - 2];
}

const Ops kScalar = {dot_scalar,  sum_scalar,         axpy_scalar,
                     xpay_scalar, scale_shift_scalar, ar1_apply_scalar,
                     "scalar"};

}  // namespace

const Ops& scalar_ops() { return kScalar; }

#ifdef CRF_KERNELS_AVX2
const Ops& avx2_ops();
#endif

const Ops& ops() {
#ifdef CRF_KERNELS_AVX2
  static const Ops* selected =
      __builtin_cpu_supports("avx2") ? &avx2_ops() : &kScalar;
  return *selected;
#else
  return kScalar;
#endif
}

}  // namespace crf::kernels
