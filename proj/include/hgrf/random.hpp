// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hgrf/types.hpp"

#include <cstdint>
#include <random>

namespace hgrf {

/// What a stream is used for. Part of the stream identity so that, e.g.,
/// the proposal and accept/reject draws of one step never overlap.
enum class StreamPurpose : std::uint32_t {
  Proposal = 1,
  Acceptance = 2,
  Initial = 3,
  Observation = 4,
  Field = 5,
  Test = 6,
};

/// Identity of one random stream derived from the run's root seed.
struct StreamId {
  std::uint64_t root_seed = 0;
  std::uint64_t chain = 0;
  std::uint64_t level = 0;
  std::uint64_t iteration = 0;
  StreamPurpose purpose = StreamPurpose::Test;
};

using Engine = std::mt19937_64;

/// Engine seeded deterministically from the full stream identity.
Engine make_engine(const StreamId& id);

/// n iid N(0, 1) draws.
Vector standard_normal(Index n, Engine& engine);

/// One U(0, 1) draw.
double uniform01(Engine& engine);

} // namespace hgrf
