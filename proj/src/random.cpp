// SPDX-License-Identifier: Apache-2.0
#include "hgrf/random.hpp"

namespace hgrf {

Engine make_engine(const StreamId& id) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(id.root_seed), hi(id.root_seed), lo(id.chain),     hi(id.chain),
                    lo(id.level),     hi(id.level),     lo(id.iteration), hi(id.iteration),
                    static_cast<std::uint32_t>(id.purpose)};
  return Engine(seq);
}

Vector standard_normal(Index n, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = normal(engine);
  return out;
}

double uniform01(Engine& engine) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine);
}

} // namespace hgrf
