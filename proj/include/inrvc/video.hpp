// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace inrvc {

/// uint8 RGB frames, layout (T, H, W, 3) interleaved.
struct VideoTensor {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  VideoTensor() = default;
  VideoTensor(std::size_t t, std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : frames(t), height(h), width(w), pixels(t * h * w * 3, fill) {}

  std::size_t index(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
    return ((t * height + y) * width + x) * 3 + c;
  }
  std::uint8_t& at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) {
    return pixels[index(t, y, x, c)];
  }
  std::uint8_t at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[index(t, y, x, c)];
  }
  bool same_shape(const VideoTensor& o) const {
    return frames == o.frames && height == o.height && width == o.width;
  }
  /// Frames [begin, end) as a new clip.
  VideoTensor frames_range(std::size_t begin, std::size_t end) const;
  /// Appends the frames of `o` (same H, W).
  void append(const VideoTensor& o);

  bool operator==(const VideoTensor&) const = default;
};

enum class SynthKind { kMovingGradient, kBouncingRect, kNoiseTexture };

SynthKind parse_synth_kind(std::string_view name);

/// Deterministic procedural clip.
VideoTensor synth_video(SynthKind kind, std::size_t frames, std::size_t height, std::size_t width,
                        std::uint64_t seed);

// RVID container: "RVID", u16 T, u16 H, u16 W, u8 channels (=3), then
// T*H*W*3 interleaved bytes. Little-endian.
std::vector<std::uint8_t> encode_rvid(const VideoTensor& video);
VideoTensor decode_rvid(std::span<const std::uint8_t> bytes);

VideoTensor load_video(const std::filesystem::path& path);
void store_video(const VideoTensor& video, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace inrvc
