#include <immintrin.h>

#include "crf/kernels.hpp"

namespace crf::kernels {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
  return _mm_cvtsd_f64(lo);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_avx2(const double* v, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += v[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void xpay_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(y + i),
                                 _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale_shift_avx2(const double* v, double a, double b, double* out,
                      std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(v + i), vb));
  for (; i < n; ++i) out[i] = a * v[i] + b;
}

void ar1_apply_avx2(const double* v, double* out, std::size_t n, double rho) {
  if (n == 1) {
    out[0] = (1.0 - rho * rho) * v[0];
    return;
  }
  const double d = 1.0 + rho * rho;
  const __m256d vd = _mm256_set1_pd(d);
  const __m256d vr = _mm256_set1_pd(rho);
  out[0] = v[0] - rho * v[1];
  std::size_t j = 1;
  for (; j + 5 <= n; j += 4) {
    __m256d mid = _mm256_loadu_pd(v + j);
    __m256d nb =
        _mm256_add_pd(_mm256_loadu_pd(v + j - 1), _mm256_loadu_pd(v + j + 1));
    _mm256_storeu_pd(out + j,
                     _mm256_fnmadd_pd(vr, nb, _mm256_mul_pd(vd, mid)));
  }
  for (; j + 1 < n; ++j) out[j] = d * v[j] - rho * (v[j - 1] + v[j + 1]);
  out[n - 1] = v[n - 1] - rho * v[n - 2];
}

const Ops kAvx2 = {dot_avx2,  sum_avx2,         axpy_avx2,
                   xpay_avx2, scale_shift_avx2, ar1_apply_avx2,
                   "avx2"};

}  // namespace

const Ops& avx2_ops() { return kAvx2; }

}  // namespace crf::kernels
