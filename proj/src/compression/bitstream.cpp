// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/bitstream.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <limits>

#include "inrvc/range_coder.hpp"

namespace inrvc {

namespace {

constexpr char kMagic[4] = {'D', 'I', 'V', 'B'};
constexpr std::size_t kPrefixBytes = 9;  // magic, version, total length
constexpr std::size_t kMinBytes = kPrefixBytes + 4;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void size(std::size_t v) {
    require(v <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::kOutOfRange,
            "bitstream field exceeds u32");
    u32(static_cast<std::uint32_t>(v));
  }
  void str(const std::string& s) {
    size(s.size());
    out.insert(out.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[static_cast<std::size_t>(i)];
    return v;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    auto p = take(n);
    return std::string(p.begin(), p.end());
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > b_.size() - pos_) fail(ErrorCode::kTruncated, "bitstream truncated");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void write_header(Writer& w, const BitstreamHeader& h) {
  w.u32(h.frames);
  w.u32(h.height);
  w.u32(h.width);
  w.u8(static_cast<std::uint8_t>(h.latent.temporal));
  w.u8(static_cast<std::uint8_t>(h.latent.height));
  w.u8(static_cast<std::uint8_t>(h.latent.width));
  w.u8(h.inr_arch);
  for (std::size_t v : {h.inr.grid_t, h.inr.grid_c, h.inr.grid_h, h.inr.grid_w, h.inr.stages,
                        h.inr.latent_channels, h.inr.mask_channels}) {
    w.size(v);
  }
  for (std::size_t v : {h.dit.latent_channels, h.dit.mask_channels, h.dit.dim, h.dit.heads,
                        h.dit.blocks, h.dit.ffn}) {
    w.size(v);
  }
  w.u32(h.backbone_fingerprint);
  w.u64(h.nola_seed);
  w.u32(h.nola_basis_count);
  w.u32(h.nola_rank);
  w.f32(h.nola_scale);
  w.size(h.nola_targets.size());
  for (const AdapterTarget& t : h.nola_targets) {
    w.str(t.id);
    w.u32(t.m);
    w.u32(t.n);
  }
  w.u32(h.sampler_steps);
  w.u64(h.noise_seed);
  w.f32(h.lambda_max);
  w.f32(h.lambda_min);
  for (std::uint32_t e : h.epochs) w.u32(e);
  w.f32(h.prune_ratio);
  w.f32(h.quant_noise_rho);
  w.u8(h.quant_bits);
  w.u8(h.flags);
}

BitstreamHeader read_header(Reader& r) {
  BitstreamHeader h;
  h.frames = r.u32();
  h.height = r.u32();
  h.width = r.u32();
  h.latent.temporal = r.u8();
  h.latent.height = r.u8();
  h.latent.width = r.u8();
  h.inr_arch = r.u8();
  h.inr.grid_t = r.u32();
  h.inr.grid_c = r.u32();
  h.inr.grid_h = r.u32();
  h.inr.grid_w = r.u32();
  h.inr.stages = r.u32();
  h.inr.latent_channels = r.u32();
  h.inr.mask_channels = r.u32();
  h.dit.latent_channels = r.u32();
  h.dit.mask_channels = r.u32();
  h.dit.dim = r.u32();
  h.dit.heads = r.u32();
  h.dit.blocks = r.u32();
  h.dit.ffn = r.u32();
  h.backbone_fingerprint = r.u32();
  h.nola_seed = r.u64();
  h.nola_basis_count = r.u32();
  h.nola_rank = r.u32();
  h.nola_scale = r.f32();
  const std::uint32_t targets = r.u32();
  for (std::uint32_t i = 0; i < targets; ++i) {
    AdapterTarget t;
    t.id = r.str();
    t.m = r.u32();
    t.n = r.u32();
    h.nola_targets.push_back(std::move(t));
  }
  h.sampler_steps = r.u32();
  h.noise_seed = r.u64();
  h.lambda_max = r.f32();
  h.lambda_min = r.f32();
  for (std::uint32_t& e : h.epochs) e = r.u32();
  h.prune_ratio = r.f32();
  h.quant_noise_rho = r.f32();
  h.quant_bits = r.u8();
  h.flags = r.u8();
  return h;
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d != 0 && n > std::numeric_limits<std::uint32_t>::max() / d) {
      fail(ErrorCode::kOutOfRange, "tensor record too large");
    }
    n *= d;
  }
  return n;
}

void write_record(Writer& w, const QuantizedTensor& t) {
  require(t.levels.size() == element_count(t.shape), ErrorCode::kShapeMismatch,
          "quantized tensor level count does not match its shape");
  w.str(t.id);
  w.size(t.shape.size());
  for (std::size_t d : t.shape) w.size(d);
  w.f32(t.params.scale);
  w.u8(t.params.zero_point);
  const std::vector<std::uint8_t> payload = range_encode(t.levels);
  w.size(payload.size());
  w.bytes(payload);
}

}  // namespace

std::vector<std::uint8_t> write_bitstream(const ModelState& state) {
  Writer w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.u8(kBitstreamVersion);
  w.u32(0);  // total length, patched below
  write_header(w, state.header);
  w.size(state.tensors.size());
  for (const QuantizedTensor& t : state.tensors) write_record(w, t);
  const std::size_t total = w.out.size() + 4;
  require(total <= std::numeric_limits<std::uint32_t>::max(), ErrorCode::kOutOfRange,
          "bitstream exceeds 4 GiB");
  for (std::size_t i = 0; i < 4; ++i) {
    w.out[5 + i] = static_cast<std::uint8_t>(total >> (8 * i));
  }
  w.u32(crc32_of(w.out));
  return std::move(w.out);
}

ModelState read_bitstream(std::span<const std::uint8_t> bytes) {
  const std::size_t head = std::min<std::size_t>(bytes.size(), 4);
  if (head > 0 && std::memcmp(bytes.data(), kMagic, head) != 0) {
    fail(ErrorCode::kBadMagic, "not a DIVB stream");
  }
  if (bytes.size() < kMinBytes) fail(ErrorCode::kTruncated, "DIVB stream truncated");

  Reader prefix(bytes.subspan(5, 4));
  const std::uint32_t declared = prefix.u32();
  Reader trailer(bytes.subspan(bytes.size() - 4));
  const std::uint32_t stored_crc = trailer.u32();
  if (crc32_of(bytes.first(bytes.size() - 4)) != stored_crc) {
    if (declared > bytes.size()) {
      fail(ErrorCode::kTruncated, "DIVB stream truncated: " + std::to_string(bytes.size()) +
                                      " of " + std::to_string(declared) + " bytes");
    }
    fail(ErrorCode::kChecksumMismatch, "DIVB checksum mismatch");
  }
  if (bytes[4] != kBitstreamVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         "DIVB version " + std::to_string(bytes[4]) + " is not supported");
  }
  if (declared != bytes.size()) fail(ErrorCode::kTruncated, "DIVB length field mismatch");

  Reader r(bytes.subspan(kPrefixBytes, bytes.size() - kMinBytes));
  ModelState state;
  state.header = read_header(r);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    QuantizedTensor t;
    t.id = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > r.remaining() / 4) fail(ErrorCode::kTruncated, "DIVB record truncated");
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.u32());
    t.params.scale = r.f32();
    t.params.zero_point = r.u8();
    const std::uint32_t payload = r.u32();
    t.levels = range_decode(r.take(payload), element_count(t.shape));
    state.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) fail(ErrorCode::kTruncated, "DIVB trailing bytes before checksum");
  return state;
}

std::vector<std::size_t> record_sizes(const ModelState& state) {
  std::vector<std::size_t> out;
  for (const QuantizedTensor& t : state.tensors) {
    Writer w;
    write_record(w, t);
    out.push_back(w.out.size());
  }
  return out;
}

double measure_bpp(std::size_t stream_bytes, std::size_t frames, std::size_t height,
                   std::size_t width) {
  require(frames > 0 && height > 0 && width > 0, ErrorCode::kOutOfRange,
          "measure_bpp: dimensions must be positive");
  return 8.0 * static_cast<double>(stream_bytes) /
         (static_cast<double>(frames) * static_cast<double>(height) * static_cast<double>(width));
}

std::vector<std::uint8_t> pack_segments(const std::vector<std::vector<std::uint8_t>>& segments) {
  Writer w;
  w.size(segments.size());
  for (const auto& s : segments) {
    w.size(s.size());
    w.bytes(s);
  }
  return std::move(w.out);
}

std::vector<std::vector<std::uint8_t>> unpack_segments(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t count = r.u32();
  std::vector<std::vector<std::uint8_t>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t n = r.u32();
    auto s = r.take(n);
    out.emplace_back(s.begin(), s.end());
  }
  if (r.remaining() != 0) fail(ErrorCode::kTruncated, "segment container has trailing bytes");
  return out;
}

}  // namespace inrvc
