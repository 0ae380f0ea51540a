// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/video.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "inrvc/error.hpp"
#include "inrvc/rng.hpp"

namespace inrvc {

VideoTensor VideoTensor::frames_range(std::size_t begin, std::size_t end) const {
  require(begin <= end && end <= frames, ErrorCode::kOutOfRange, "frames_range out of bounds");
  VideoTensor out(end - begin, height, width);
  const std::size_t frame_bytes = height * width * 3;
  std::copy(pixels.begin() + static_cast<std::ptrdiff_t>(begin * frame_bytes),
            pixels.begin() + static_cast<std::ptrdiff_t>(end * frame_bytes), out.pixels.begin());
  return out;
}

void VideoTensor::append(const VideoTensor& o) {
  if (frames == 0 && pixels.empty()) {
    *this = o;
    return;
  }
  require(o.height == height && o.width == width, ErrorCode::kShapeMismatch,
          "append: frame size differs");
  pixels.insert(pixels.end(), o.pixels.begin(), o.pixels.end());
  frames += o.frames;
}

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "moving-gradient") return SynthKind::kMovingGradient;
  if (name == "bouncing-rect") return SynthKind::kBouncingRect;
  if (name == "noise-texture") return SynthKind::kNoiseTexture;
  fail(ErrorCode::kInvalidConfig, "unknown synth kind '" + std::string(name) + "'");
}

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bounce position in [0, span] for a point moving with constant speed.
long bounce(long start, long speed, std::size_t t, long span) {
  if (span <= 0) return 0;
  long p = (start + speed * static_cast<long>(t)) % (2 * span);
  if (p < 0) p += 2 * span;
  return p <= span ? p : 2 * span - p;
}

}  // namespace

VideoTensor synth_video(SynthKind kind, std::size_t frames, std::size_t height, std::size_t width,
                        std::uint64_t seed) {
  require(frames > 0 && height > 0 && width > 0, ErrorCode::kOutOfRange,
          "synth_video: dimensions must be positive");
  VideoTensor v(frames, height, width);
  Rng rng(seed);
  switch (kind) {
    case SynthKind::kMovingGradient: {
      // Smooth colour waves translating diagonally by a fixed step per frame.
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const double dx = std::cos(angle), dy = std::sin(angle);
      const double phase[3] = {2.0 * std::numbers::pi * rng.uniform(),
                               2.0 * std::numbers::pi * rng.uniform(),
                               2.0 * std::numbers::pi * rng.uniform()};
      const double period = static_cast<double>(std::max(height, width));
      const double speed = 1.5;  // pixels per frame
      for (std::size_t t = 0; t < frames; ++t) {
        const double shift = speed * static_cast<double>(t);
        for (std::size_t y = 0; y < height; ++y) {
          for (std::size_t x = 0; x < width; ++x) {
            const double u = (dx * static_cast<double>(x) + dy * static_cast<double>(y) - shift);
            for (std::size_t c = 0; c < 3; ++c) {
              const double k = 2.0 * std::numbers::pi * (1.0 + 0.5 * static_cast<double>(c)) / period;
              v.at(t, y, x, c) = to_u8(127.5 + 100.0 * std::sin(k * u + phase[c]));
            }
          }
        }
      }
      break;
    }
    case SynthKind::kBouncingRect: {
      const long rh = static_cast<long>(std::max<std::size_t>(1, height / 4));
      const long rw = static_cast<long>(std::max<std::size_t>(1, width / 4));
      const long sy = static_cast<long>(rng.next_u64() % height);
      const long sx = static_cast<long>(rng.next_u64() % width);
      const long vy = 1 + static_cast<long>(rng.next_u64() % 2);
      const long vx = 1 + static_cast<long>(rng.next_u64() % 3);
      std::uint8_t bg[3], fg[3];
      for (int c = 0; c < 3; ++c) {
        bg[c] = static_cast<std::uint8_t>(32 + rng.next_u64() % 64);
        fg[c] = static_cast<std::uint8_t>(160 + rng.next_u64() % 96);
      }
      for (std::size_t t = 0; t < frames; ++t) {
        const long top = bounce(sy, vy, t, static_cast<long>(height) - rh);
        const long left = bounce(sx, vx, t, static_cast<long>(width) - rw);
        for (std::size_t y = 0; y < height; ++y) {
          for (std::size_t x = 0; x < width; ++x) {
            const long iy = static_cast<long>(y), ix = static_cast<long>(x);
            const bool inside = iy >= top && iy < top + rh && ix >= left && ix < left + rw;
            for (std::size_t c = 0; c < 3; ++c) v.at(t, y, x, c) = inside ? fg[c] : bg[c];
          }
        }
      }
      break;
    }
    case SynthKind::kNoiseTexture: {
      for (auto& p : v.pixels) p = static_cast<std::uint8_t>(rng.next_u64() >> 56);
      break;
    }
  }
  return v;
}

namespace {

constexpr char kRvidMagic[4] = {'R', 'V', 'I', 'D'};
constexpr std::size_t kRvidHeader = 4 + 2 + 2 + 2 + 1;

void put_u16(std::vector<std::uint8_t>& out, std::size_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

std::size_t get_u16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::size_t>(b[off]) | (static_cast<std::size_t>(b[off + 1]) << 8);
}

}  // namespace

std::vector<std::uint8_t> encode_rvid(const VideoTensor& video) {
  require(video.frames <= 0xffff && video.height <= 0xffff && video.width <= 0xffff,
          ErrorCode::kOutOfRange, "RVID dimensions exceed 16 bits");
  std::vector<std::uint8_t> out(kRvidMagic, kRvidMagic + 4);
  put_u16(out, video.frames);
  put_u16(out, video.height);
  put_u16(out, video.width);
  out.push_back(3);
  out.insert(out.end(), video.pixels.begin(), video.pixels.end());
  return out;
}

VideoTensor decode_rvid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(kRvidMagic, kRvidMagic + 4, bytes.begin())) {
    fail(ErrorCode::kBadMagic, "not an RVID file");
  }
  if (bytes.size() < kRvidHeader) fail(ErrorCode::kTruncated, "RVID header truncated");
  const std::size_t t = get_u16(bytes, 4), h = get_u16(bytes, 6), w = get_u16(bytes, 8);
  if (bytes[10] != 3) {
    fail(ErrorCode::kUnsupportedFormat,
         "RVID channels = " + std::to_string(bytes[10]) + ", only 3 supported");
  }
  const std::size_t payload = t * h * w * 3;
  if (bytes.size() - kRvidHeader < payload) {
    fail(ErrorCode::kTruncated, "RVID payload truncated: expected " + std::to_string(payload) +
                                    " bytes, found " + std::to_string(bytes.size() - kRvidHeader));
  }
  VideoTensor v(t, h, w);
  std::copy_n(bytes.begin() + kRvidHeader, payload, v.pixels.begin());
  return v;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

VideoTensor load_video(const std::filesystem::path& path) { return decode_rvid(read_file(path)); }

void store_video(const VideoTensor& video, const std::filesystem::path& path) {
  write_file(path, encode_rvid(video));
}

}  // namespace inrvc
