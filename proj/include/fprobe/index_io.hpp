#pragma once

#include <filesystem>

#include "fprobe/fm_index.hpp"

namespace fprobe {

// On-disk shard index format, all fields little-endian:
//
//   magic "FPIX"
//   format_version       u32
//   c_table              257 x u64
//   checkpoint_interval  u32
//   terminator_pos       u64
//   checkpoint blocks    (bwt_len / interval + 1) x 256 x u32
//   BWT payload          bwt_len bytes
//   checksum             u64, FNV-1a over everything before it
//
// bwt_len is c_table[256], so the payload length is implicit.
inline constexpr uint32_t kIndexFormatVersion = 1;

void serialize_index(const FmIndex& index, const std::filesystem::path& path);
FmIndex deserialize_index(const std::filesystem::path& path);

}  // namespace fprobe
