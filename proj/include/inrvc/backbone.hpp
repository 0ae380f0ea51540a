// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "inrvc/dit.hpp"
#include "inrvc/latent.hpp"

namespace inrvc {

/// Recipe for the toy conditional backbone. It is trained once on short
/// synthetic clips to denoise latents given a corrupted hint y and a
/// per-group confidence M, then kept frozen by every codec run.
struct BackboneConfig {
  DitConfig dit;
  LatentConfig latent;
  std::uint64_t seed = 0x5eed;
  std::size_t steps = 3000;
  std::size_t batch = 4;
  double lr = 3e-3;
  double lr_min = 5e-5;
  std::size_t clip_frames = 2;
  std::size_t clip_size = 16;
  /// Hint noise std at confidence 0; y = z0 + hint_noise (1 - m) n.
  double hint_noise = 1.0;
  /// Fraction of samples trained with y = 0, M = 0.
  double unconditional_fraction = 0.1;

  /// Stable digest of every field, stored with cached weights.
  std::uint64_t digest() const;
};

DitModel pretrain_backbone(const BackboneConfig& config);

std::vector<std::uint8_t> serialize_backbone(const DitModel& model, std::uint64_t digest);
/// Throws on bad magic, checksum mismatch or a digest other than `expect_digest`
/// (when given).
DitModel deserialize_backbone(std::span<const std::uint8_t> bytes,
                              std::optional<std::uint64_t> expect_digest = std::nullopt);

/// Loads `cache` if it holds weights for `config`, otherwise trains and
/// writes it (when a path is given).
DitModel load_or_pretrain_backbone(const BackboneConfig& config,
                                   const std::optional<std::filesystem::path>& cache);

}  // namespace inrvc
