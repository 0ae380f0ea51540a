// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/backbone.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <sstream>

#include "inrvc/flow.hpp"
#include "inrvc/optim.hpp"
#include "inrvc/rng.hpp"
#include "inrvc/video.hpp"

namespace inrvc {

std::uint64_t BackboneConfig::digest() const {
  std::ostringstream s;
  s.precision(17);
  s << "dit" << dit.latent_channels << ',' << dit.mask_channels << ',' << dit.dim << ','
    << dit.heads << ',' << dit.blocks << ',' << dit.ffn << ";lat" << latent.temporal << ','
    << latent.height << ',' << latent.width << ";seed" << seed << ";steps" << steps << ";batch"
    << batch << ";lr" << lr << ',' << lr_min << ";clip" << clip_frames << ',' << clip_size
    << ";hint" << hint_noise << ";uncond" << unconditional_fraction << ";v1";
  return hash64(s.str());
}

namespace {

struct TrainingSample {
  Tensor z_t;
  Tensor velocity;
  double t = 0.0;
  Tensor cond;
};

TrainingSample draw_sample(const BackboneConfig& cfg, Rng& rng) {
  const double pick = rng.uniform();
  const SynthKind kind = pick < 0.5   ? SynthKind::kMovingGradient
                         : pick < 0.9 ? SynthKind::kBouncingRect
                                      : SynthKind::kNoiseTexture;
  const VideoTensor clip =
      synth_video(kind, cfg.clip_frames, cfg.clip_size, cfg.clip_size, rng.next_u64());
  const Tensor z0 = latent_encode(clip, cfg.latent);
  const std::size_t frames = z0.dim(0), c = z0.dim(1), h = z0.dim(2), w = z0.dim(3);
  const std::size_t cm = cfg.dit.mask_channels;

  TrainingSample s;
  s.t = sample_timestep(rng);
  const Tensor eps = gaussian_noise(z0.shape(), rng);
  FlowSample fp = forward_process(z0, eps, s.t);
  s.z_t = fp.z_t;
  s.velocity = fp.velocity;

  std::vector<double> y(c * frames * h * w, 0.0), m(cm * frames * h * w, 0.0);
  if (rng.uniform() >= cfg.unconditional_fraction) {
    const auto zd = z0.data();
    const std::size_t per_group = (c + cm - 1) / cm;
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t pos = 0; pos < h * w; ++pos) {
        for (std::size_t g = 0; g < cm; ++g) {
          const double conf = rng.uniform() < 0.3 ? 1.0 : rng.uniform();
          m[(g * frames + f) * h * w + pos] = conf;
          for (std::size_t ch = g * per_group; ch < std::min(c, (g + 1) * per_group); ++ch) {
            const double clean = zd[(f * c + ch) * h * w + pos];
            y[(ch * frames + f) * h * w + pos] = clean + cfg.hint_noise * (1.0 - conf) * rng.normal();
          }
        }
      }
    }
  }
  s.cond = concat({Tensor::from({c, frames, h, w}, std::move(y)),
                   Tensor::from({cm, frames, h, w}, std::move(m))},
                  0);
  return s;
}

constexpr char kMagic[4] = {'D', 'I', 'T', 'W'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t& pos) {
  if (b.size() - pos < 4) fail(ErrorCode::kTruncated, "backbone weights truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[pos + static_cast<std::size_t>(i)];
  pos += 4;
  return v;
}

}  // namespace

DitModel pretrain_backbone(const BackboneConfig& cfg) {
  require(cfg.steps >= 1 && cfg.batch >= 1, ErrorCode::kInvalidConfig,
          "backbone pretraining needs steps and batch >= 1");
  DitModel model = make_dit(cfg.dit, splitmix64(cfg.seed ^ 0x646974ULL));
  Rng rng(splitmix64(cfg.seed));
  std::vector<Tensor> params = model.parameters();
  OptimizerState opt;
  opt.hyper.lr = cfg.lr;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    opt.hyper.lr = cosine_value(static_cast<long>(step), static_cast<long>(cfg.steps), cfg.lr,
                                cfg.lr_min);
    Tensor loss;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const TrainingSample s = draw_sample(cfg, rng);
      Tensor l = flow_loss(dit_forward(model, s.z_t, s.t, s.cond), s.velocity);
      loss = loss.defined() ? add(loss, l) : l;
    }
    loss = scale(loss, 1.0 / static_cast<double>(cfg.batch));
    adamw_step(params, backward(loss), opt);
  }
  return model;
}

std::vector<std::uint8_t> serialize_backbone(const DitModel& model, std::uint64_t digest) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u32(out, static_cast<std::uint32_t>(digest));
  put_u32(out, static_cast<std::uint32_t>(digest >> 32));
  const DitConfig& c = model.config;
  for (std::size_t v : {c.latent_channels, c.mask_channels, c.dim, c.heads, c.blocks, c.ffn}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  const auto params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Tensor& t : params) {
    put_u32(out, static_cast<std::uint32_t>(t.numel()));
    for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data(), static_cast<uInt>(out.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
  return out;
}

DitModel deserialize_backbone(std::span<const std::uint8_t> bytes,
                              std::optional<std::uint64_t> expect_digest) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, "not a backbone weight file");
  }
  if (bytes.size() < 9) fail(ErrorCode::kTruncated, "backbone weights truncated");
  std::size_t tail = bytes.size() - 4;
  const std::uint32_t stored = get_u32(bytes, tail);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size() - 4));
  if (static_cast<std::uint32_t>(crc) != stored) {
    fail(ErrorCode::kChecksumMismatch, "backbone weight checksum mismatch");
  }
  if (bytes[4] != kVersion) fail(ErrorCode::kUnsupportedVersion, "backbone weight version");
  const auto body = bytes.first(bytes.size() - 4);
  std::size_t pos = 5;
  const std::uint64_t lo = get_u32(body, pos);
  const std::uint64_t digest = lo | (static_cast<std::uint64_t>(get_u32(body, pos)) << 32);
  if (expect_digest && *expect_digest != digest) {
    fail(ErrorCode::kArchitectureMismatch, "backbone weights were trained with another recipe");
  }
  DitConfig c;
  c.latent_channels = get_u32(body, pos);
  c.mask_channels = get_u32(body, pos);
  c.dim = get_u32(body, pos);
  c.heads = get_u32(body, pos);
  c.blocks = get_u32(body, pos);
  c.ffn = get_u32(body, pos);
  DitModel model = make_dit(c, 0);
  auto params = model.parameters();
  if (get_u32(body, pos) != params.size()) {
    fail(ErrorCode::kArchitectureMismatch, "backbone tensor count mismatch");
  }
  for (Tensor& t : params) {
    if (get_u32(body, pos) != t.numel()) {
      fail(ErrorCode::kArchitectureMismatch, "backbone tensor size mismatch");
    }
    for (double& v : t.mutable_data()) v = std::bit_cast<float>(get_u32(body, pos));
  }
  if (pos != body.size()) fail(ErrorCode::kUnsupportedFormat, "trailing bytes in backbone weights");
  return model;
}

DitModel load_or_pretrain_backbone(const BackboneConfig& config,
                                   const std::optional<std::filesystem::path>& cache) {
  if (cache && std::filesystem::exists(*cache)) {
    try {
      return deserialize_backbone(read_file(*cache), config.digest());
    } catch (const Error&) {
      // Stale or damaged cache: retrain below and overwrite it.
    }
  }
  DitModel model = pretrain_backbone(config);
  if (cache) {
    if (cache->has_parent_path()) std::filesystem::create_directories(cache->parent_path());
    write_file(*cache, serialize_backbone(model, config.digest()));
  }
  return model;
}

}  // namespace inrvc
