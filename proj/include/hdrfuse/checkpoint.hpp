#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hdrfuse/model.hpp"

namespace hdr {

// Little-endian layout:
//   "HDRW"                     4 bytes
//   version                    u16 (= 1)
//   width_multiplier           f64
//   batch-norm update count    u64
//   layer count                u32, then per layer: kind u8, in u32, out u32
//   tensor count               u32, then per tensor:
//     name length u16, name bytes, rank u8, dims u32 x rank, values f32 x size
inline constexpr char kCheckpointMagic[4] = {'H', 'D', 'R', 'W'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
std::vector<unsigned char> serialize_checkpoint(const ModelParams<T>& params);

template <typename T>
ModelParams<T> deserialize_checkpoint(const std::vector<unsigned char>& bytes);

/// Writes through a temporary file and renames it into place.
template <typename T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& path);

template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace hdr
