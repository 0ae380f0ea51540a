// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/latent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace inrvc {

namespace {

void check_factors(const LatentConfig& cfg) {
  require(cfg.temporal > 0 && cfg.height > 0 && cfg.width > 0, ErrorCode::kInvalidConfig,
          "latent factors must be positive");
}

}  // namespace

Tensor latent_encode(const VideoTensor& video, const LatentConfig& cfg) {
  check_factors(cfg);
  if (video.frames == 0 || video.frames % cfg.temporal || video.height % cfg.height ||
      video.width % cfg.width) {
    fail(ErrorCode::kShapeMismatch,
         "latent_encode: video " + std::to_string(video.frames) + "x" +
             std::to_string(video.height) + "x" + std::to_string(video.width) +
             " not divisible by factors");
  }
  const std::size_t lt = video.frames / cfg.temporal, lh = video.height / cfg.height,
                    lw = video.width / cfg.width, c = cfg.channels();
  std::vector<double> z(lt * c * lh * lw);
  for (std::size_t t = 0; t < lt; ++t) {
    for (std::size_t dt = 0; dt < cfg.temporal; ++dt) {
      for (std::size_t y = 0; y < video.height; ++y) {
        for (std::size_t x = 0; x < video.width; ++x) {
          const std::size_t dy = y % cfg.height, dx = x % cfg.width;
          for (std::size_t rgb = 0; rgb < 3; ++rgb) {
            const std::size_t ch = ((dt * cfg.height + dy) * cfg.width + dx) * 3 + rgb;
            const double p = video.at(t * cfg.temporal + dt, y, x, rgb);
            z[((t * c + ch) * lh + y / cfg.height) * lw + x / cfg.width] = p / 127.5 - 1.0;
          }
        }
      }
    }
  }
  return Tensor::from({lt, c, lh, lw}, std::move(z));
}

VideoTensor latent_decode(const Tensor& z, const LatentConfig& cfg) {
  check_factors(cfg);
  if (z.rank() != 4 || z.dim(1) != cfg.channels()) {
    fail(ErrorCode::kShapeMismatch, "latent_decode: latent " + shape_str(z.shape()) +
                                        " does not have " + std::to_string(cfg.channels()) +
                                        " channels");
  }
  const std::size_t lt = z.dim(0), c = z.dim(1), lh = z.dim(2), lw = z.dim(3);
  VideoTensor video(lt * cfg.temporal, lh * cfg.height, lw * cfg.width);
  const auto zd = z.data();
  for (std::size_t t = 0; t < video.frames; ++t) {
    for (std::size_t y = 0; y < video.height; ++y) {
      for (std::size_t x = 0; x < video.width; ++x) {
        const std::size_t dt = t % cfg.temporal, dy = y % cfg.height, dx = x % cfg.width;
        for (std::size_t rgb = 0; rgb < 3; ++rgb) {
          const std::size_t ch = ((dt * cfg.height + dy) * cfg.width + dx) * 3 + rgb;
          double v = zd[((t / cfg.temporal * c + ch) * lh + y / cfg.height) * lw + x / cfg.width];
          v = std::isnan(v) ? 0.0 : std::clamp(v, -1.0, 1.0);
          // std::round is half-away-from-zero.
          video.at(t, y, x, rgb) = static_cast<std::uint8_t>(std::round((v + 1.0) * 127.5));
        }
      }
    }
  }
  return video;
}

}  // namespace inrvc
