// SPDX-License-Identifier: Apache-2.0
#include "hgrf/simd/kernels.hpp"

namespace hgrf::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpby(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double lagged_product_sum(const double* x, std::size_t n, std::size_t lag,
                          double shift) {
  if (lag >= n) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i)
    s += (x[i] - shift) * (x[i + lag] - shift);
  return s;
}

} // namespace hgrf::simd::scalar
