// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inrvc/tensor.hpp"

namespace inrvc {

/// Toy diffusion transformer shape. The full-scale reference backbone has
/// 30 blocks; the toy default is 2 blocks, width 64, 4 heads.
struct DitConfig {
  std::size_t latent_channels = 48;
  std::size_t mask_channels = 4;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t blocks = 2;
  std::size_t ffn = 256;

  std::size_t input_channels() const { return 2 * latent_channels + mask_channels; }
  bool operator==(const DitConfig&) const = default;
};

/// y = x W + b with W stored [in, out]. An adapter may attach a weight
/// delta that is added to W on every forward.
struct Linear {
  Tensor weight;
  Tensor bias;
  std::function<Tensor()> delta;

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  /// Effective weight, including any attached delta.
  Tensor effective_weight() const;
  Tensor forward(const Tensor& x) const;
};

struct LayerNormAffine {
  Tensor gain;
  Tensor shift;
  Tensor forward(const Tensor& x) const;
};

struct DitBlock {
  LayerNormAffine norm1;
  Linear qkv;
  Linear attn_out;
  LayerNormAffine norm2;
  Linear fc1;
  Linear fc2;
};

/// Noisy latent and conditioning are channel-concatenated per latent
/// position and processed as tokens. There is no cross-attention path.
struct DitModel {
  DitConfig config;
  Linear in_proj;
  Linear time_proj;
  std::vector<DitBlock> blocks;
  LayerNormAffine final_norm;
  Linear head;

  /// Stable names; order fixes the fingerprint and serialization.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;

  /// Adapter-targetable mappings: blocks.{i}.attn_out, blocks.{i}.fc1,
  /// blocks.{i}.fc2 and head.
  std::vector<std::string> adapter_targets() const;
  Linear* find_mapping(std::string_view target_id);
  const Linear* find_mapping(std::string_view target_id) const;

  /// CRC-32 over every base weight as little-endian binary32.
  std::uint32_t fingerprint() const;

  /// Copy with fresh storage for every parameter.
  DitModel clone() const;
  /// Copy whose tensors carry no gradient path.
  DitModel frozen() const;
};

/// Random init; the output head is zero so the initial prediction is 0.
DitModel make_dit(const DitConfig& config, std::uint64_t seed);

/// Sinusoidal embedding of a scalar timestep, shape [1, dim].
Tensor timestep_embedding(double t, std::size_t dim);

/// z_t (T', C, H', W'), cond (C + C_m, T', H', W') -> velocity like z_t.
Tensor dit_forward(const DitModel& model, const Tensor& z_t, double t, const Tensor& cond);

}  // namespace inrvc
