// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "inrvc/tensor.hpp"

namespace inrvc {

/// Feature grid (T_g, C_g, H0, W0) decoded by K stages of
/// (nearest 2x upsample, 3x3 conv, GELU) into latent-resolution maps.
struct InrConfig {
  std::size_t grid_t = 4;
  std::size_t grid_c = 32;
  std::size_t grid_h = 2;
  std::size_t grid_w = 2;
  std::size_t stages = 2;
  std::size_t latent_channels = 48;
  std::size_t mask_channels = 4;

  std::size_t out_height() const { return grid_h << stages; }
  std::size_t out_width() const { return grid_w << stages; }
  bool operator==(const InrConfig&) const = default;
};

struct ConvLayer {
  Tensor weight;  // [Co, Ci, k, k]
  Tensor bias;    // [Co]
};

struct InrModel {
  InrConfig config;
  Tensor grid;
  std::vector<ConvLayer> stages;
  ConvLayer head_y;
  ConvLayer head_m;
  /// Binary prune masks aligned with named_parameters(); empty until pruned.
  std::vector<Tensor> prune_masks;

  /// grid, stage.{k}.weight, stage.{k}.bias, head_y.*, head_m.*
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
  /// Re-zero every masked weight in place.
  void enforce_masks();
  /// Copy with fresh storage (masks shared, they are never mutated).
  InrModel clone() const;
  /// Same structure, parameters replaced in named_parameters() order.
  InrModel with_parameters(const std::vector<Tensor>& params) const;
};

/// `mask_bias` initializes the mask head bias, so the starting confidence
/// is sigmoid(mask_bias).
InrModel make_inr(const InrConfig& config, std::uint64_t seed, double mask_bias = 0.0);

struct ConditioningPair {
  Tensor y;  // (C, H', W')
  Tensor m;  // (C_m, H', W')
};

ConditioningPair inr_forward(const InrModel& model, double f);

/// y (C, T', H', W') and M (C_m, T', H', W') at f_k = k / (T' - 1).
struct GopConditioning {
  Tensor y;
  Tensor m;
};
GopConditioning sample_gop_conditioning(const InrModel& model, std::size_t frames);

/// Channel concat, y first: (C + C_m, T', H', W').
Tensor conditioning_concat(const Tensor& y, const Tensor& m);

/// Mean squared error; y and z0 must have the same shape.
Tensor cond_loss(const Tensor& y, const Tensor& z0);

}  // namespace inrvc
