#pragma once

#include <cstdint>
#include <random>

namespace shrinkeq {

// Independent substreams keyed by purpose, so adding draws of one kind never
// shifts another. Paired experiments reuse replication indices across the two
// design streams to share radial draws while keeping designs independent.
enum class Stream : std::uint64_t {
  design = 1,
  design_paired = 2,
  radial = 3,
  noise = 4,
  misc = 9,
};

// Deterministic engine for (seed, replication, stream, row). Each 64-bit key
// is split into 32-bit words because std::seed_seq folds inputs mod 2^32.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t replication, Stream stream,
                                   std::uint64_t row = 0) {
  const std::uint64_t s = static_cast<std::uint64_t>(stream);
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
      static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
      static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(row >> 32),
  };
  return std::mt19937_64(seq);
}

}  // namespace shrinkeq
