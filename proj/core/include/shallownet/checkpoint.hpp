#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "shallownet/model.hpp"

namespace shallownet {

// Checkpoint layout, little-endian throughout:
//
//   "SNET"            4 bytes magic
//   version           u16 (currently 1)
//   arch_id           u8  (1 = cnn1, 2 = cnn2, 3 = cnn3)
//   seed              u64
//   records until EOF, one per parameter tensor (weights, then bias):
//     layer index     u16
//     shape           4 x u32 (n, c, h, w)
//     values          n*c*h*w x f32
//
// The model input size is not stored; it is recovered from the first dense
// layer's in_features and every record is then checked against the
// architecture table.

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& model);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes atomically (temporary file + rename). Models without an arch id
/// cannot be saved.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace shallownet
