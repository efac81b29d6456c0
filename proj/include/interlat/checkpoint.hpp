#pragma once

#include <string>
#include <utility>
#include <vector>

#include "interlat/tensor.hpp"

namespace interlat {

// Binary checkpoint container. Layout (all integers little-endian):
//   magic "IALT" | format version u32 | entry count u32
//   per entry: name length u16, UTF-8 name bytes, dtype u8 (0=f32, 1=f64),
//              rank u8, rank x dim u64, row-major IEEE-754 payload
//   trailing CRC-32 (zlib polynomial) over all preceding bytes
// Loads are all-or-nothing: any failure throws and returns no tensors.
//   bad magic / unknown version -> FormatVersionMismatch
//   truncated or unreadable file -> IoError
//   payload corruption -> ChecksumMismatch

inline constexpr uint32_t kCheckpointVersion = 1;

using CheckpointEntries = std::vector<std::pair<std::string, Tensor>>;

void save_checkpoint(const std::string& path, const CheckpointEntries& entries);
CheckpointEntries load_checkpoint(const std::string& path);

// Lookup helper: returns the entry with the given name or throws ConfigInvalid.
const Tensor& checkpoint_get(const CheckpointEntries& entries,
                             const std::string& name);

}  // namespace interlat
