#pragma once

#include <cstdint>
#include <random>

namespace acr {

using Rng = std::mt19937_64;

// Independent, reproducible generator for one consumer of a run seed.
enum class RngStream : std::uint64_t {
  kTaskData = 1,
  kSplit = 2,
  kSourceInit = 3,
  kPretrainBatches = 4,
  kTargetHeadInit = 5,
  kFinetuneBatches = 6,
  kPerturbation = 7,
};

inline Rng make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x61637275u};
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

}  // namespace acr
