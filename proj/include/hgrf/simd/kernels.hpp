// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense inner-loop kernels with a scalar reference implementation and
// vectorized variants chosen once at runtime.
//
// Every variant must agree with the scalar reference to within summation
// reordering error; tests/unit/test_simd_kernels.cpp checks that.

#include <cstddef>
#include <span>
#include <string_view>

namespace hgrf::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// out[i] = alpha * x[i] + beta * y[i]   (out may alias x or y)
  void (*axpby)(double alpha, const double* x, double beta, const double* y,
                double* out, std::size_t n);
  /// sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  /// sum_i (x[i] - shift) * (x[i + lag] - shift), i in [0, n - lag)
  double (*lagged_product_sum)(const double* x, std::size_t n, std::size_t lag,
                               double shift);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpby(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double lagged_product_sum(const double* x, std::size_t n, std::size_t lag,
                          double shift);
} // namespace scalar

#if defined(HGRF_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpby(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double lagged_product_sum(const double* x, std::size_t n, std::size_t lag,
                          double shift);
} // namespace avx2
#endif

/// The table for a specific ISA. Throws InvalidArgument if that ISA was not
/// compiled in or the running CPU lacks it.
const KernelTable& table(Isa isa);

/// The best table supported by this CPU. Chosen on first call; the
/// HGRF_SIMD environment variable ("scalar" or "avx2") overrides detection.
const KernelTable& active();

bool cpu_supports(Isa isa);
std::string_view name(Isa isa);

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

} // namespace hgrf::simd
