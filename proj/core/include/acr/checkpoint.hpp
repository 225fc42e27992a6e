#pragma once

#include <filesystem>
#include <iosfwd>

#include "acr/model.hpp"

namespace acr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout (little-endian):
//   "ACRCKPT\n" | u32 version | u32 extractor depth |
//   per tensor in parameter_list order: u64 rows | u64 cols | f64[rows*cols]
// Doubles are written bit-for-bit, so a save/load cycle is exact.
void write_checkpoint(std::ostream& out, const Network& net);
Network read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace acr
