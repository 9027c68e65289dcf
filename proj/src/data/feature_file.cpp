#include "data/feature_file.hpp"

#include <cstring>

#include "common/binary_io.hpp"

namespace tfh::data {

std::vector<std::uint8_t> encode_feature_set(const LabeledFeatureSet& set) {
  const auto& s = set.feature_shape();
  if (s.size() != 3) throw ShapeError("feature files hold d x h x w features, got " + nn::shape_str(s));
  ByteWriter out;
  out.bytes("FTS1", 4);
  out.u16(kFeatureFileVersion);
  out.u32(static_cast<std::uint32_t>(set.size()));
  for (auto e : s) out.u32(static_cast<std::uint32_t>(e));
  out.u32(static_cast<std::uint32_t>(set.num_classes()));
  for (auto l : set.labels()) out.u32(static_cast<std::uint32_t>(l));
  for (std::size_t i = 0; i < set.size(); ++i) out.f32s(set.feature(i).data());
  return out.buffer();
}

LabeledFeatureSet decode_feature_set(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  char magic[4];
  in.bytes(magic, 4, "magic");
  if (std::memcmp(magic, "FTS1", 4) != 0) throw ParseError("bad feature file magic", 0);
  const auto version = in.u16("version");
  if (version != kFeatureFileVersion) {
    throw ParseError("unsupported feature file version " + std::to_string(version), 4);
  }
  const std::uint32_t n = in.u32("example count");
  const std::uint32_t d = in.u32("d");
  const std::uint32_t h = in.u32("h");
  const std::uint32_t w = in.u32("w");
  const std::uint32_t classes = in.u32("class count");
  if (n == 0) throw ParseError("feature file holds no examples", 6);
  if (d == 0 || h == 0 || w == 0) throw ParseError("zero feature extent", 10);
  if (classes == 0) throw ParseError("zero class count", 22);
  if (classes > n) {
    throw ParseError("class count " + std::to_string(classes) + " exceeds example count " + std::to_string(n) +
                         "; every class needs an example",
                     22);
  }
  const std::uint64_t numel = std::uint64_t{d} * h * w;
  const std::uint64_t expected = kFeatureFileHeaderBytes + std::uint64_t{n} * 4 + std::uint64_t{n} * numel * 4;
  if (numel > (std::uint64_t{1} << 40) || expected != bytes.size()) {
    throw ParseError("length mismatch: header implies " + std::to_string(expected) +
                         " bytes, file has " + std::to_string(bytes.size()),
                     in.offset());
  }
  std::vector<std::uint32_t> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto at = in.offset();
    labels[i] = in.u32("label");
    if (labels[i] >= classes) {
      throw ParseError("label " + std::to_string(labels[i]) + " >= class count " +
                           std::to_string(classes),
                       at);
    }
  }
  LabeledFeatureSet set({d, h, w}, classes);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<float> data(numel);
    in.bytes(data.data(), numel * 4, "feature data");
    set.add(FeatureTensor({d, h, w}, std::move(data)), labels[i]);
  }
  for (std::uint32_t c = 0; c < classes; ++c) {
    if (set.class_indices(c).empty()) {
      throw ParseError("class " + std::to_string(c) + " has no examples", 22);
    }
  }
  return set;
}

void save_feature_file(const LabeledFeatureSet& set, const std::string& path) {
  write_file_atomic(path, encode_feature_set(set));
}

LabeledFeatureSet load_feature_file(const std::string& path) {
  return decode_feature_set(read_file_bytes(path));
}

}  // namespace tfh::data
