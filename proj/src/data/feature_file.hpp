#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "data/feature_set.hpp"

namespace tfh::data {

// "FTS1" feature file (little-endian):
//   "FTS1" | u16 version | u32 n | u32 d | u32 h | u32 w | u32 num_classes
//   | n x u32 labels | n*d*h*w x f32 features, row-major.
// Loading additionally requires n >= 1 and that every class id below
// num_classes occurs at least once.

inline constexpr std::uint16_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureFileHeaderBytes = 26;

std::vector<std::uint8_t> encode_feature_set(const LabeledFeatureSet& set);
LabeledFeatureSet decode_feature_set(std::span<const std::uint8_t> bytes);

void save_feature_file(const LabeledFeatureSet& set, const std::string& path);
LabeledFeatureSet load_feature_file(const std::string& path);

}  // namespace tfh::data
