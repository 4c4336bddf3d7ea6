#pragma once

#include <cstdint>
#include <string>

#include "fledge/tensor.hpp"

namespace fledge {

/// One checkpoint file per client, overwritten in place on every save.
struct Checkpoint {
    std::string path;
    ModelWeights weights;
    uint32_t round_index = 0;
};

/// Writes the checkpoint atomically (temp file + rename). The file carries a
/// self-describing manifest header, little-endian float32 payload and a
/// trailing CRC32 so a torn write is detectable.
void save_checkpoint(const Checkpoint& c);

/// Loads the single checkpoint at `path`. Throws IoError if the file is
/// missing, truncated or fails the checksum.
Checkpoint load_checkpoint(const std::string& path);

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

} // namespace fledge
