#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bsup/ops.hpp"

namespace bsup {

/// On-disk layout, all integers little-endian:
///
///   "BSUP" | u16 version | u16 model tag | u32 parameter count
///   per parameter: u32 id length | id bytes (UTF-8) | u32 n,c,h,w | f32 payload
///
/// The model tag's low byte is the architecture, the high byte a variant flag
/// owned by the models module.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct StoredTensor {
  std::string id;
  Shape shape;
  std::vector<float> values;
  bool operator==(const StoredTensor&) const = default;
};

struct Checkpoint {
  std::uint16_t model_tag = 0;
  std::vector<StoredTensor> tensors;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(std::uint16_t model_tag, std::span<const Parameter> params);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on truncated, corrupt, or foreign input.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes through a temporary sibling and renames it into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace bsup
