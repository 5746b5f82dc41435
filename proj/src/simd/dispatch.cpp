// SPDX-License-Identifier: Apache-2.0
#include "hgrf/simd/kernels.hpp"

#include "hgrf/types.hpp"

#include <cstdlib>
#include <string>

namespace hgrf::simd {
namespace {

constexpr KernelTable kScalarTable{Isa::Scalar, &scalar::dot, &scalar::axpby,
                                   &scalar::squared_distance,
                                   &scalar::lagged_product_sum};

#if defined(HGRF_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::Avx2, &avx2::dot, &avx2::axpby,
                                 &avx2::squared_distance,
                                 &avx2::lagged_product_sum};
#endif

const KernelTable& select() {
  if (const char* env = std::getenv("HGRF_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return kScalarTable;
    if (want == "avx2" && cpu_supports(Isa::Avx2)) return table(Isa::Avx2);
  }
  if (cpu_supports(Isa::Avx2)) return table(Isa::Avx2);
  return kScalarTable;
}

} // namespace

bool cpu_supports(Isa isa) {
  switch (isa) {
  case Isa::Scalar:
    return true;
  case Isa::Avx2:
#if defined(HGRF_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!cpu_supports(isa))
    throw InvalidArgument("SIMD variant '" + std::string(name(isa)) +
                          "' is not available on this build/CPU");
#if defined(HGRF_HAVE_AVX2)
  if (isa == Isa::Avx2) return kAvx2Table;
#endif
  return kScalarTable;
}

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

std::string_view name(Isa isa) {
  switch (isa) {
  case Isa::Scalar:
    return "scalar";
  case Isa::Avx2:
    return "avx2";
  }
  return "unknown";
}

} // namespace hgrf::simd
