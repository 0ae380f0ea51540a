// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "inrvc/compression.hpp"

namespace inrvc {

std::vector<std::vector<double>> prune_scores(const std::vector<Tensor>& layers) {
  std::vector<std::vector<double>> scores;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].defined() || layers[l].numel() == 0) {
      fail(ErrorCode::kOutOfRange, "prune_scores: layer " + std::to_string(l) + " is empty");
    }
    const double denom = std::sqrt(static_cast<double>(layers[l].numel()));
    std::vector<double> s;
    s.reserve(layers[l].numel());
    for (double v : layers[l].data()) s.push_back(std::abs(v) / denom);
    scores.push_back(std::move(s));
  }
  return scores;
}

std::vector<Tensor> prune_masks(const std::vector<Tensor>& layers, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    fail(ErrorCode::kOutOfRange, "prune ratio " + std::to_string(ratio) + " outside [0, 1)");
  }
  const auto scores = prune_scores(layers);
  std::vector<std::tuple<double, std::size_t, std::size_t>> order;
  for (std::size_t l = 0; l < scores.size(); ++l) {
    for (std::size_t i = 0; i < scores[l].size(); ++i) order.emplace_back(scores[l][i], l, i);
  }
  const auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(order.size())));
  std::vector<std::vector<double>> mask(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) mask[l].assign(layers[l].numel(), 1.0);
  if (k > 0) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    for (std::size_t j = 0; j < k; ++j) mask[std::get<1>(order[j])][std::get<2>(order[j])] = 0.0;
  }
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.push_back(Tensor::from(layers[l].shape(), std::move(mask[l])));
  }
  return out;
}

std::size_t apply_prune(InrModel& model, double ratio) {
  model.prune_masks = prune_masks(model.parameters(), ratio);
  model.enforce_masks();
  std::size_t pruned = 0;
  for (const Tensor& m : model.prune_masks) {
    for (double v : m.data()) pruned += v == 0.0;
  }
  return pruned;
}

namespace {

int max_level(int bits) {
  require(bits >= 1 && bits <= 6, ErrorCode::kInvalidConfig, "quant bits must be in [1, 6]");
  return (1 << bits) - 1;
}

}  // namespace

QuantParams quant_params(std::span<const double> values, int bits) {
  const int levels = max_level(bits);
  if (values.empty()) return {1e-8f, 0};
  // The range always covers 0 so zero (and every pruned weight) is exact.
  double lo = 0.0, hi = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "quant_params: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = std::max((hi - lo) / levels, 1e-8);
  const double zp = std::clamp(std::round(-lo / scale), 0.0, static_cast<double>(levels));
  return {static_cast<float>(scale), static_cast<std::uint8_t>(zp)};
}

QuantParams quant_params(const Tensor& t, int bits) { return quant_params(t.data(), bits); }

std::vector<std::uint8_t> quantize(std::span<const double> values, QuantParams p, int bits) {
  const double levels = max_level(bits);
  require(p.scale > 0.0f, ErrorCode::kOutOfRange, "quantize: scale must be > 0");
  const double scale = p.scale;
  std::vector<std::uint8_t> q;
  q.reserve(values.size());
  for (double v : values) {
    const double level = std::clamp(std::round(v / scale) + p.zero_point, 0.0, levels);
    q.push_back(static_cast<std::uint8_t>(level));
  }
  return q;
}

double dequantize_value(std::uint8_t q, QuantParams p) {
  return static_cast<double>(p.scale) * (static_cast<int>(q) - static_cast<int>(p.zero_point));
}

Tensor dequantize(std::span<const std::uint8_t> symbols, QuantParams p, const Shape& shape) {
  if (symbols.size() != shape_numel(shape)) {
    fail(ErrorCode::kShapeMismatch, "dequantize: " + std::to_string(symbols.size()) +
                                        " symbols for shape " + shape_str(shape));
  }
  std::vector<double> v;
  v.reserve(symbols.size());
  for (std::uint8_t q : symbols) v.push_back(dequantize_value(q, p));
  return Tensor::from(shape, std::move(v));
}

Tensor fake_quantize(const Tensor& t, int bits) {
  const QuantParams p = quant_params(t, bits);
  return dequantize(quantize(t.data(), p, bits), p, t.shape());
}

Tensor quant_noise_forward(const Tensor& t, Rng& rng, double rho, std::size_t* replaced, int bits) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    fail(ErrorCode::kOutOfRange, "quant_noise_forward: rho " + std::to_string(rho) +
                                     " outside [0, 1]");
  }
  if (replaced) *replaced = 0;
  if (rho == 0.0) return t;
  const Tensor fq = fake_quantize(t, bits);
  std::vector<double> mixed = t.to_vector();
  const auto q = fq.data();
  std::size_t count = 0;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    if (rng.bernoulli(rho)) {
      mixed[i] = q[i];
      ++count;
    }
  }
  if (replaced) *replaced = count;
  return straight_through(t, Tensor::from(t.shape(), std::move(mixed)));
}

}  // namespace inrvc
