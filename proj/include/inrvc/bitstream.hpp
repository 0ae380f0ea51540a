// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inrvc/compression.hpp"
#include "inrvc/dit.hpp"
#include "inrvc/inr.hpp"
#include "inrvc/latent.hpp"

namespace inrvc {

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::uint8_t kInrArchVersion = 1;
/// Header flag: the segment was trained and must be decoded with M = 1.
inline constexpr std::uint8_t kFlagUnitMask = 1;

struct QuantizedTensor {
  std::string id;
  Shape shape;  // dims may be 0; rank 0 holds one element
  QuantParams params;
  std::vector<std::uint8_t> levels;

  bool operator==(const QuantizedTensor& o) const {
    return id == o.id && shape == o.shape && params.scale == o.params.scale &&
           params.zero_point == o.params.zero_point && levels == o.levels;
  }
};

struct AdapterTarget {
  std::string id;
  std::uint32_t m = 0, n = 0;
  bool operator==(const AdapterTarget&) const = default;
};

struct BitstreamHeader {
  std::uint32_t frames = 0, height = 0, width = 0;
  LatentConfig latent;
  std::uint8_t inr_arch = kInrArchVersion;
  InrConfig inr;
  DitConfig dit;
  std::uint32_t backbone_fingerprint = 0;
  std::uint64_t nola_seed = 0;
  std::uint32_t nola_basis_count = 0;
  std::uint32_t nola_rank = 0;
  float nola_scale = 0.25f;
  std::vector<AdapterTarget> nola_targets;
  std::uint32_t sampler_steps = 20;
  std::uint64_t noise_seed = 0;
  // Curriculum metadata; informational for the decoder.
  float lambda_max = 0.99f, lambda_min = 0.05f;
  std::uint32_t epochs[3] = {0, 0, 0};
  float prune_ratio = 0.15f;
  float quant_noise_rho = 0.9f;
  std::uint8_t quant_bits = 6;
  std::uint8_t flags = 0;

  bool operator==(const BitstreamHeader&) const = default;
};

struct ModelState {
  BitstreamHeader header;
  std::vector<QuantizedTensor> tensors;
};

// Layout, little-endian: "DIVB", u8 version, u32 total byte length, header
// fields, u32 tensor count, then records of
//   u32 id length, id, u32 rank, u32 dims[rank], f32 scale, u8 zero point,
//   u32 payload length, range-coded levels
// and a trailing CRC-32 over every preceding byte.
std::vector<std::uint8_t> write_bitstream(const ModelState& state);
ModelState read_bitstream(std::span<const std::uint8_t> bytes);

/// Encoded size of every record, in order (id bytes through payload).
std::vector<std::size_t> record_sizes(const ModelState& state);

double measure_bpp(std::size_t stream_bytes, std::size_t frames, std::size_t height,
                   std::size_t width);

// Multi-segment container: u32 segment count, then u32-length-prefixed
// DIVB segments.
std::vector<std::uint8_t> pack_segments(const std::vector<std::vector<std::uint8_t>>& segments);
std::vector<std::vector<std::uint8_t>> unpack_segments(std::span<const std::uint8_t> bytes);

}  // namespace inrvc
