// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "inrvc/inr.hpp"
#include "inrvc/rng.hpp"
#include "inrvc/tensor.hpp"

namespace inrvc {

// Pruning.

/// |theta| / sqrt(P) per weight, P the layer's element count.
std::vector<std::vector<double>> prune_scores(const std::vector<Tensor>& layers);

/// Binary masks that zero the floor(ratio * N) globally lowest scores.
/// Ties break by (layer index, flat index) ascending.
std::vector<Tensor> prune_masks(const std::vector<Tensor>& layers, double ratio);

/// Prunes every INR tensor (grid and heads included), stores the masks on
/// the model and zeroes the pruned weights. Returns the pruned count.
std::size_t apply_prune(InrModel& model, double ratio);

// Quantization.

inline constexpr int kDefaultQuantBits = 6;

struct QuantParams {
  float scale = 1.0f;
  std::uint8_t zero_point = 0;
};

/// Affine params over [min(min, 0), max(max, 0)] with 2^bits - 1 steps.
/// The zero point is derived from the unrounded scale; the scale is then
/// stored as binary32.
QuantParams quant_params(std::span<const double> values, int bits = kDefaultQuantBits);
QuantParams quant_params(const Tensor& t, int bits = kDefaultQuantBits);

/// q = clamp(round(x / scale) + zero_point, 0, 2^bits - 1), half away from zero.
std::vector<std::uint8_t> quantize(std::span<const double> values, QuantParams p,
                                   int bits = kDefaultQuantBits);
double dequantize_value(std::uint8_t q, QuantParams p);
Tensor dequantize(std::span<const std::uint8_t> symbols, QuantParams p, const Shape& shape);

/// dequantize(quantize(t)) with params taken from t itself.
Tensor fake_quantize(const Tensor& t, int bits = kDefaultQuantBits);

/// Each element is replaced by its fake-quantized value with probability
/// rho; the gradient passes straight through. `replaced` receives the
/// number of replaced elements when non-null.
Tensor quant_noise_forward(const Tensor& t, Rng& rng, double rho, std::size_t* replaced = nullptr,
                           int bits = kDefaultQuantBits);

}  // namespace inrvc
