#include "nn/checkpoint.hpp"

#include <cstring>

#include <zlib.h>

#include "common/binary_io.hpp"

namespace tfh::nn {

namespace {

std::uint32_t header_crc(std::span<const std::uint8_t> header) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), header.data(), static_cast<uInt>(header.size())));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params, std::string_view metadata) {
  ByteWriter out;
  out.bytes("TFHM", 4);
  out.u16(kCheckpointVersion);
  out.str(metadata);
  out.u32(static_cast<std::uint32_t>(params.size()));
  out.u32(header_crc(out.buffer()));
  for (const auto& [name, e] : params) {
    out.str(name);
    out.u8(static_cast<std::uint8_t>(e.value.rank()));
    for (auto ext : e.value.shape()) out.u32(static_cast<std::uint32_t>(ext));
    out.f32s(e.value.data());
  }
  return out.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  char magic[4];
  in.bytes(magic, 4, "magic");
  if (std::memcmp(magic, "TFHM", 4) != 0) throw ParseError("bad checkpoint magic", 0);
  const auto version_at = in.offset();
  const auto version = in.u16("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  Checkpoint ck;
  ck.metadata = in.str("metadata");
  const auto count = in.u32("entry count");
  const auto crc_at = in.offset();
  const auto expected_crc = header_crc(bytes.first(crc_at));
  if (in.u32("header checksum") != expected_crc) throw ParseError("header checksum mismatch", crc_at);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto entry_at = in.offset();
    std::string name = in.str("parameter name");
    if (name.empty()) throw ParseError("empty parameter name", entry_at);
    const auto rank_at = in.offset();
    const auto rank = in.u8("rank");
    if (rank < 1 || rank > 4) {
      throw ParseError("parameter '" + name + "' has invalid rank " + std::to_string(rank), rank_at);
    }
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& ext : shape) {
      const auto ext_at = in.offset();
      ext = in.u32("extent");
      if (ext == 0) throw ParseError("parameter '" + name + "' has a zero extent", ext_at);
      numel *= ext;
      if (numel * 4 > in.remaining()) {
        throw ParseError("parameter '" + name + "' extents overflow the remaining " +
                             std::to_string(in.remaining()) + " bytes",
                         ext_at);
      }
    }
    std::vector<float> data(numel);
    in.bytes(data.data(), numel * 4, "parameter data");
    if (ck.params.contains(name)) throw ParseError("duplicate parameter '" + name + "'", entry_at);
    ck.params.add(name, Tensor(std::move(shape), std::move(data)));
  }
  if (in.remaining() != 0) {
    throw ParseError("unexpected " + std::to_string(in.remaining()) + " trailing bytes", in.offset());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const ParamStore& params, std::string_view metadata) {
  const auto bytes = encode_checkpoint(params, metadata);
  write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace tfh::nn
