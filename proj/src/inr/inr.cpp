// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/inr.hpp"

#include <algorithm>
#include <cmath>

#include "inrvc/rng.hpp"

namespace inrvc {

std::vector<std::pair<std::string, Tensor>> InrModel::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("grid", grid);
  for (std::size_t k = 0; k < stages.size(); ++k) {
    out.emplace_back("stage." + std::to_string(k) + ".weight", stages[k].weight);
    out.emplace_back("stage." + std::to_string(k) + ".bias", stages[k].bias);
  }
  out.emplace_back("head_y.weight", head_y.weight);
  out.emplace_back("head_y.bias", head_y.bias);
  out.emplace_back("head_m.weight", head_m.weight);
  out.emplace_back("head_m.bias", head_m.bias);
  return out;
}

std::vector<Tensor> InrModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t InrModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : parameters()) n += t.numel();
  return n;
}

void InrModel::enforce_masks() {
  if (prune_masks.empty()) return;
  std::vector<Tensor> params = parameters();
  require(params.size() == prune_masks.size(), ErrorCode::kContractViolation,
          "prune mask count does not match INR parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].mutable_data();
    const auto mask = prune_masks[i].data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (mask[j] == 0.0) data[j] = 0.0;
    }
  }
}

InrModel InrModel::clone() const {
  std::vector<Tensor> copies;
  for (const Tensor& t : parameters()) copies.push_back(t.clone(t.requires_grad()));
  return with_parameters(copies);
}

InrModel InrModel::with_parameters(const std::vector<Tensor>& params) const {
  require(params.size() == 5 + 2 * stages.size(), ErrorCode::kContractViolation,
          "with_parameters: wrong tensor count");
  InrModel out;
  out.config = config;
  out.prune_masks = prune_masks;
  std::size_t i = 0;
  out.grid = params[i++];
  for (std::size_t k = 0; k < stages.size(); ++k) {
    ConvLayer layer;
    layer.weight = params[i++];
    layer.bias = params[i++];
    out.stages.push_back(layer);
  }
  out.head_y = {params[i], params[i + 1]};
  out.head_m = {params[i + 2], params[i + 3]};
  return out;
}

namespace {

ConvLayer init_conv(std::size_t co, std::size_t ci, std::size_t k, double gain, Rng& rng) {
  std::vector<double> w(co * ci * k * k);
  const double std_dev = gain / std::sqrt(static_cast<double>(ci * k * k));
  for (double& v : w) v = std_dev * rng.normal();
  return {Tensor::from({co, ci, k, k}, std::move(w), true), Tensor::zeros({co}, true)};
}

// Grid sampled at each coordinate, stacked on axis 0: (N, C_g, H0, W0).
Tensor sample_grid(const InrModel& model, const std::vector<double>& coords) {
  const std::size_t tg = model.config.grid_t;
  std::vector<Tensor> frames;
  for (double f : coords) {
    if (!(f >= 0.0 && f <= 1.0)) {
      fail(ErrorCode::kOutOfRange, "inr_forward: coordinate " + std::to_string(f) + " outside [0, 1]");
    }
    if (tg == 1) {
      frames.push_back(slice(model.grid, 0, 0, 1));
      continue;
    }
    const double pos = f * static_cast<double>(tg - 1);
    const std::size_t i0 = std::min(static_cast<std::size_t>(std::floor(pos)), tg - 2);
    const double w1 = pos - static_cast<double>(i0);
    Tensor lo = slice(model.grid, 0, i0, i0 + 1);
    if (w1 == 0.0) {
      frames.push_back(lo);
      continue;
    }
    Tensor hi = slice(model.grid, 0, i0 + 1, i0 + 2);
    frames.push_back(add(scale(lo, 1.0 - w1), scale(hi, w1)));
  }
  return frames.size() == 1 ? frames[0] : concat(frames, 0);
}

// Decodes (N, C_g, H0, W0) features into y (N, C, H', W') and M (N, C_m, H', W').
std::pair<Tensor, Tensor> decode(const InrModel& model, Tensor x) {
  for (const ConvLayer& stage : model.stages) {
    x = gelu(conv2d(upsample_nearest2x(x), stage.weight, stage.bias, 1));
  }
  Tensor y = conv2d(x, model.head_y.weight, model.head_y.bias, 0);
  Tensor m = sigmoid(conv2d(x, model.head_m.weight, model.head_m.bias, 0));
  return {y, m};
}

}  // namespace

InrModel make_inr(const InrConfig& config, std::uint64_t seed, double mask_bias) {
  require(config.grid_t >= 1 && config.grid_c >= 1 && config.grid_h >= 1 && config.grid_w >= 1,
          ErrorCode::kInvalidConfig, "INR grid dimensions must be >= 1");
  require(config.latent_channels >= 1 && config.mask_channels >= 1, ErrorCode::kInvalidConfig,
          "INR output channels must be >= 1");
  Rng rng(seed);
  InrModel m;
  m.config = config;
  std::vector<double> g(config.grid_t * config.grid_c * config.grid_h * config.grid_w);
  for (double& v : g) v = rng.normal();
  m.grid = Tensor::from({config.grid_t, config.grid_c, config.grid_h, config.grid_w}, std::move(g),
                        true);
  for (std::size_t k = 0; k < config.stages; ++k) {
    m.stages.push_back(init_conv(config.grid_c, config.grid_c, 3, std::sqrt(2.0), rng));
  }
  m.head_y = init_conv(config.latent_channels, config.grid_c, 1, 1.0, rng);
  m.head_m = init_conv(config.mask_channels, config.grid_c, 1, 1.0, rng);
  m.head_m.bias = Tensor::full({config.mask_channels}, mask_bias, true);
  return m;
}

ConditioningPair inr_forward(const InrModel& model, double f) {
  auto [y, m] = decode(model, sample_grid(model, {f}));
  const InrConfig& c = model.config;
  return {reshape(y, {c.latent_channels, c.out_height(), c.out_width()}),
          reshape(m, {c.mask_channels, c.out_height(), c.out_width()})};
}

GopConditioning sample_gop_conditioning(const InrModel& model, std::size_t frames) {
  require(frames >= 1, ErrorCode::kOutOfRange, "sample_gop_conditioning: T' must be >= 1");
  std::vector<double> coords(frames, 0.0);
  for (std::size_t k = 1; k < frames; ++k) {
    coords[k] = static_cast<double>(k) / static_cast<double>(frames - 1);
  }
  auto [y, m] = decode(model, sample_grid(model, coords));
  return {permute(y, {1, 0, 2, 3}), permute(m, {1, 0, 2, 3})};
}

Tensor conditioning_concat(const Tensor& y, const Tensor& m) {
  if (y.rank() != 4 || m.rank() != 4 || y.dim(1) != m.dim(1) || y.dim(2) != m.dim(2) ||
      y.dim(3) != m.dim(3)) {
    fail(ErrorCode::kShapeMismatch, "conditioning_concat: y " + shape_str(y.shape()) + " vs M " +
                                        shape_str(m.shape()));
  }
  return concat({y, m}, 0);
}

Tensor cond_loss(const Tensor& y, const Tensor& z0) { return mse(y, z0); }

}  // namespace inrvc
