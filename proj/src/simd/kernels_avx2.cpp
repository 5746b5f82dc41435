// SPDX-License-Identifier: Apache-2.0
//
// Compiled with -mavx2 -mfma. Nothing in here may be called unless
// cpu_supports(Isa::Avx2) returned true.
#include "hgrf/simd/kernels.hpp"

#include <immintrin.h>

namespace hgrf::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

} // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpby(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                      _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double lagged_product_sum(const double* x, std::size_t n, std::size_t lag,
                          double shift) {
  if (lag >= n) return 0.0;
  const std::size_t m = n - lag;
  const double* y = x + lag;
  const __m256d vs = _mm256_set1_pd(shift);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= m; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs),
                           _mm256_sub_pd(_mm256_loadu_pd(y + i), vs), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i + 4), vs),
                           _mm256_sub_pd(_mm256_loadu_pd(y + i + 4), vs), acc1);
  }
  for (; i + 4 <= m; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vs),
                           _mm256_sub_pd(_mm256_loadu_pd(y + i), vs), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < m; ++i) s += (x[i] - shift) * (y[i] - shift);
  return s;
}

} // namespace hgrf::simd::avx2
