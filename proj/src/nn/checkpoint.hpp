#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nn/params.hpp"

namespace tfh::nn {

// Parameter checkpoint layout (little-endian):
//   "TFHM" | u16 version | u32 metadata length | metadata (UTF-8, usually JSON)
//   | u32 entry count | u32 CRC-32 of all preceding bytes | entries
// each entry: u32 name length | name | u8 rank | u32 extent * rank | f32 data.

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;
  ParamStore params;
};

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params, std::string_view metadata);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const ParamStore& params, std::string_view metadata);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tfh::nn
