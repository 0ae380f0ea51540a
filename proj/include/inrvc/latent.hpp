// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "inrvc/tensor.hpp"
#include "inrvc/video.hpp"

namespace inrvc {

/// Invertible patchify stand-in for a video VAE. Each latent position packs
/// an f_t x f_h x f_w block of RGB pixels into C = 3 f_t f_h f_w channels.
/// Full-scale systems use a learned 3D causal VAE with (4, 8, 8)
/// downsampling and 16 channels; the toy default is (1, 4, 4), C = 48.
struct LatentConfig {
  std::size_t temporal = 1;
  std::size_t height = 4;
  std::size_t width = 4;

  std::size_t channels() const { return 3 * temporal * height * width; }
  bool operator==(const LatentConfig&) const = default;
};

/// Pixels to [-1, 1], then space/time-to-channel: (T/f_t, C, H/f_h, W/f_w).
/// Channel index is ((dt * f_h + dy) * f_w + dx) * 3 + rgb.
Tensor latent_encode(const VideoTensor& video, const LatentConfig& cfg);

/// Exact inverse rearrangement, clamp to [-1, 1], requantize with
/// round-half-away-from-zero.
VideoTensor latent_decode(const Tensor& z, const LatentConfig& cfg);

}  // namespace inrvc
