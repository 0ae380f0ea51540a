// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/dit.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>

#include "inrvc/rng.hpp"

namespace inrvc {

Tensor Linear::effective_weight() const {
  return delta ? add(weight, delta()) : weight;
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = matmul(x, effective_weight());
  return bias.defined() ? add(y, bias) : y;
}

Tensor LayerNormAffine::forward(const Tensor& x) const {
  return add(mul(layer_norm(x), gain), shift);
}

std::vector<std::pair<std::string, Tensor>> DitModel::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto linear = [&out](const std::string& name, const Linear& l) {
    out.emplace_back(name + ".weight", l.weight);
    out.emplace_back(name + ".bias", l.bias);
  };
  auto norm = [&out](const std::string& name, const LayerNormAffine& n) {
    out.emplace_back(name + ".gain", n.gain);
    out.emplace_back(name + ".shift", n.shift);
  };
  linear("in_proj", in_proj);
  linear("time_proj", time_proj);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    norm(p + "norm1", blocks[i].norm1);
    linear(p + "qkv", blocks[i].qkv);
    linear(p + "attn_out", blocks[i].attn_out);
    norm(p + "norm2", blocks[i].norm2);
    linear(p + "fc1", blocks[i].fc1);
    linear(p + "fc2", blocks[i].fc2);
  }
  norm("final_norm", final_norm);
  linear("head", head);
  return out;
}

std::vector<Tensor> DitModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::string> DitModel::adapter_targets() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    out.push_back(p + "attn_out");
    out.push_back(p + "fc1");
    out.push_back(p + "fc2");
  }
  out.push_back("head");
  return out;
}

Linear* DitModel::find_mapping(std::string_view target_id) {
  return const_cast<Linear*>(std::as_const(*this).find_mapping(target_id));
}

const Linear* DitModel::find_mapping(std::string_view target_id) const {
  if (target_id == "head") return &head;
  constexpr std::string_view prefix = "blocks.";
  if (target_id.substr(0, prefix.size()) != prefix) return nullptr;
  std::string_view rest = target_id.substr(prefix.size());
  const std::size_t dot = rest.find('.');
  if (dot == std::string_view::npos || dot == 0) return nullptr;
  std::size_t index = 0;
  for (char c : rest.substr(0, dot)) {
    if (c < '0' || c > '9') return nullptr;
    index = index * 10 + static_cast<std::size_t>(c - '0');
  }
  if (index >= blocks.size()) return nullptr;
  const std::string_view leaf = rest.substr(dot + 1);
  const DitBlock& b = blocks[index];
  if (leaf == "attn_out") return &b.attn_out;
  if (leaf == "fc1") return &b.fc1;
  if (leaf == "fc2") return &b.fc2;
  return nullptr;
}

std::uint32_t DitModel::fingerprint() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& [name, t] : named_parameters()) {
    for (double v : t.data()) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const unsigned char le[4] = {static_cast<unsigned char>(bits),
                                   static_cast<unsigned char>(bits >> 8),
                                   static_cast<unsigned char>(bits >> 16),
                                   static_cast<unsigned char>(bits >> 24)};
      crc = crc32(crc, le, 4);
    }
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

Tensor copy_tensor(const Tensor& t, bool keep_grad) {
  return t.clone(keep_grad && t.requires_grad());
}

Linear clone_linear(const Linear& l, bool keep_grad) {
  Linear out;
  out.weight = copy_tensor(l.weight, keep_grad);
  out.bias = copy_tensor(l.bias, keep_grad);
  return out;
}

LayerNormAffine clone_norm(const LayerNormAffine& n, bool keep_grad) {
  return {copy_tensor(n.gain, keep_grad), copy_tensor(n.shift, keep_grad)};
}

DitModel copy_model(const DitModel& m, bool keep_grad) {
  DitModel out;
  out.config = m.config;
  out.in_proj = clone_linear(m.in_proj, keep_grad);
  out.time_proj = clone_linear(m.time_proj, keep_grad);
  for (const DitBlock& b : m.blocks) {
    out.blocks.push_back({clone_norm(b.norm1, keep_grad), clone_linear(b.qkv, keep_grad),
                          clone_linear(b.attn_out, keep_grad), clone_norm(b.norm2, keep_grad),
                          clone_linear(b.fc1, keep_grad), clone_linear(b.fc2, keep_grad)});
  }
  out.final_norm = clone_norm(m.final_norm, keep_grad);
  out.head = clone_linear(m.head, keep_grad);
  return out;
}

}  // namespace

DitModel DitModel::clone() const { return copy_model(*this, true); }
DitModel DitModel::frozen() const { return copy_model(*this, false); }

namespace {

Linear init_linear(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0) {
  std::vector<double> w(in * out);
  const double std_dev = gain / std::sqrt(static_cast<double>(in));
  for (double& v : w) v = std_dev * rng.normal();
  Linear l;
  l.weight = Tensor::from({in, out}, std::move(w), true);
  l.bias = Tensor::zeros({out}, true);
  return l;
}

LayerNormAffine init_norm(std::size_t dim) {
  return {Tensor::full({dim}, 1.0, true), Tensor::zeros({dim}, true)};
}

}  // namespace

DitModel make_dit(const DitConfig& config, std::uint64_t seed) {
  require(config.dim % config.heads == 0, ErrorCode::kInvalidConfig,
          "DiT width must be divisible by the head count");
  require(config.latent_channels > 0 && config.blocks > 0, ErrorCode::kInvalidConfig,
          "DiT needs at least one block and one channel");
  Rng rng(seed);
  DitModel m;
  m.config = config;
  m.in_proj = init_linear(config.input_channels(), config.dim, rng);
  m.time_proj = init_linear(config.dim, config.dim, rng);
  for (std::size_t i = 0; i < config.blocks; ++i) {
    DitBlock b;
    b.norm1 = init_norm(config.dim);
    b.qkv = init_linear(config.dim, 3 * config.dim, rng);
    b.attn_out = init_linear(config.dim, config.dim, rng, 0.5);
    b.norm2 = init_norm(config.dim);
    b.fc1 = init_linear(config.dim, config.ffn, rng);
    b.fc2 = init_linear(config.ffn, config.dim, rng, 0.5);
    m.blocks.push_back(std::move(b));
  }
  m.final_norm = init_norm(config.dim);
  m.head.weight = Tensor::zeros({config.dim, config.latent_channels}, true);
  m.head.bias = Tensor::zeros({config.latent_channels}, true);
  return m;
}

Tensor timestep_embedding(double t, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> e(dim, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                 static_cast<double>(half));
    e[i] = std::sin(1000.0 * t * freq);
    e[half + i] = std::cos(1000.0 * t * freq);
  }
  return Tensor::from({1, dim}, std::move(e));
}

Tensor dit_forward(const DitModel& model, const Tensor& z_t, double t, const Tensor& cond) {
  const DitConfig& cfg = model.config;
  if (z_t.rank() != 4 || z_t.dim(1) != cfg.latent_channels) {
    fail(ErrorCode::kShapeMismatch, "dit_forward: noisy latent " + shape_str(z_t.shape()) +
                                        " does not have " + std::to_string(cfg.latent_channels) +
                                        " channels");
  }
  const std::size_t frames = z_t.dim(0), h = z_t.dim(2), w = z_t.dim(3);
  const Shape expect_cond{cfg.latent_channels + cfg.mask_channels, frames, h, w};
  if (cond.shape() != expect_cond) {
    fail(ErrorCode::kShapeMismatch, "dit_forward: conditioning " + shape_str(cond.shape()) +
                                        ", expected " + shape_str(expect_cond));
  }
  const std::size_t tokens = frames * h * w;

  Tensor x = concat({permute(z_t, {0, 2, 3, 1}), permute(cond, {1, 2, 3, 0})}, 3);
  x = reshape(x, {tokens, cfg.input_channels()});
  Tensor hidden = model.in_proj.forward(x);
  hidden = add(hidden, model.time_proj.forward(timestep_embedding(t, cfg.dim)));

  const std::size_t head_dim = cfg.dim / cfg.heads;
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  for (const DitBlock& block : model.blocks) {
    Tensor qkv = block.qkv.forward(block.norm1.forward(hidden));
    std::vector<Tensor> heads;
    for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
      const std::size_t off = hd * head_dim;
      Tensor q = slice(qkv, 1, off, off + head_dim);
      Tensor k = slice(qkv, 1, cfg.dim + off, cfg.dim + off + head_dim);
      Tensor v = slice(qkv, 1, 2 * cfg.dim + off, 2 * cfg.dim + off + head_dim);
      Tensor attn = softmax_lastdim(scale(matmul(q, transpose(k)), attn_scale));
      heads.push_back(matmul(attn, v));
    }
    hidden = add(hidden, block.attn_out.forward(concat(heads, 1)));
    Tensor ff = block.fc2.forward(gelu(block.fc1.forward(block.norm2.forward(hidden))));
    hidden = add(hidden, ff);
  }
  Tensor out = model.head.forward(model.final_norm.forward(hidden));
  out = reshape(out, {frames, h, w, cfg.latent_channels});
  return permute(out, {0, 3, 1, 2});
}

}  // namespace inrvc
