// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "inrvc/compression.hpp"
#include "inrvc/flow.hpp"
#include "inrvc/optim.hpp"
#include "inrvc/rng.hpp"

namespace inrvc {

namespace {

// Independent streams derived from the master seed.
enum class Stream : std::uint64_t {
  kInrInit = 1,
  kNolaBases = 2,
  kTraining = 3,
  kQuantNoise = 4,
  kSamplerNoise = 5,
  kEvaluation = 6,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s)));
}

Tensor condition(const InrModel& inr, std::size_t frames, bool unit_mask) {
  GopConditioning g = sample_gop_conditioning(inr, frames);
  return conditioning_concat(g.y, unit_mask ? Tensor::full(g.m.shape(), 1.0) : g.m);
}

struct Draw {
  double t;
  Tensor eps;
};

Tensor step_loss(const InrModel& inr, const DitModel& adapted, const Tensor& z0, const Draw& d,
                 std::size_t step, std::size_t total_dense, const CurriculumConfig& cfg) {
  GopConditioning g = sample_gop_conditioning(inr, z0.dim(0));
  const Tensor m = cfg.force_unit_mask ? Tensor::full(g.m.shape(), 1.0) : g.m;
  const FlowSample fp = forward_process(z0, d.eps, d.t);
  const Tensor v = dit_forward(adapted, fp.z_t, d.t, conditioning_concat(g.y, m));
  return total_loss(flow_loss(v, fp.velocity), cond_loss(g.y, permute(z0, {1, 0, 2, 3})), step,
                    total_dense, cfg.lambda_max, cfg.lambda_min);
}

std::vector<Draw> evaluation_draws(const CurriculumConfig& cfg, const Shape& shape) {
  Rng rng(stream_seed(cfg.seed, Stream::kEvaluation));
  std::vector<Draw> draws;
  for (std::size_t i = 0; i < cfg.eval_samples; ++i) {
    const double t = sample_timestep(rng);
    draws.push_back({t, gaussian_noise(shape, rng)});
  }
  return draws;
}

void check_compatible(const VideoTensor& gop, const CurriculumConfig& cfg,
                      const DitModel& backbone) {
  const LatentConfig& l = cfg.latent;
  if (gop.frames % l.temporal || gop.height % l.height || gop.width % l.width) {
    fail(ErrorCode::kShapeMismatch, "GoP " + std::to_string(gop.frames) + "x" +
                                        std::to_string(gop.height) + "x" +
                                        std::to_string(gop.width) +
                                        " is not divisible by the latent factors");
  }
  if (cfg.inr.out_height() != gop.height / l.height || cfg.inr.out_width() != gop.width / l.width) {
    fail(ErrorCode::kInvalidConfig, "INR output " + std::to_string(cfg.inr.out_height()) + "x" +
                                        std::to_string(cfg.inr.out_width()) +
                                        " does not match the latent grid");
  }
  if (backbone.config.latent_channels != l.channels() ||
      backbone.config.mask_channels != cfg.inr.mask_channels) {
    fail(ErrorCode::kArchitectureMismatch, "backbone channels do not match the codec config");
  }
}

NolaAdapterSet with_coefficients(const NolaAdapterSet& base, const std::vector<Tensor>& coeffs) {
  NolaAdapterSet out = base;
  for (std::size_t i = 0; i < out.mappings.size(); ++i) {
    out.mappings[i].alpha = coeffs[2 * i];
    out.mappings[i].beta = coeffs[2 * i + 1];
  }
  return out;
}

std::vector<Tensor> detached(const std::vector<Tensor>& ts) {
  std::vector<Tensor> out;
  for (const Tensor& t : ts) out.push_back(t.detach());
  return out;
}

}  // namespace

void CurriculumConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kInvalidConfig, std::string("curriculum config: ") + what);
  };
  check(gop_size >= 1, "gop_size must be >= 1");
  check(epochs[0] > 0 && epochs[1] > 0 && epochs[2] > 0, "stage epochs must be > 0");
  check(steps_per_epoch >= 1, "steps_per_epoch must be >= 1");
  check(lr_inr > 0 && lr_nola > 0, "learning rates must be > 0");
  check(lr_floor >= 0 && lr_floor <= 1, "lr_floor must be in [0, 1]");
  check(weight_decay >= 0, "weight_decay must be >= 0");
  check(prune_ratio >= 0 && prune_ratio < 1, "prune_ratio must be in [0, 1)");
  check(quant_noise_rho >= 0 && quant_noise_rho <= 1, "quant_noise_rho must be in [0, 1]");
  check(quant_bits >= 1 && quant_bits <= 6, "quant_bits must be in [1, 6]");
  check(lambda_min >= 0 && lambda_min <= lambda_max && lambda_max <= 1,
        "lambda endpoints must satisfy 0 <= lambda_min <= lambda_max <= 1");
  check(latent.temporal >= 1 && latent.height >= 1 && latent.width >= 1 && latent.temporal <= 255 &&
            latent.height <= 255 && latent.width <= 255,
        "latent factors must be in [1, 255]");
  check(inr.latent_channels == latent.channels(), "inr.latent_channels must be 3 f_t f_h f_w");
  check(nola_basis_count >= 1 && nola_rank >= 1 && nola_scale > 0, "NOLA b, r, s must be > 0");
  check(sampler_steps >= 1, "sampler_steps must be >= 1");
  check(eval_samples >= 1, "eval_samples must be >= 1");
}

double lambda_at(std::size_t step, std::size_t total_dense_steps, double lambda_max,
                 double lambda_min) {
  if (total_dense_steps == 0) return lambda_min;
  const std::size_t s = std::min(step, total_dense_steps);
  return cosine_value(static_cast<long>(s), static_cast<long>(total_dense_steps), lambda_max,
                      lambda_min);
}

Tensor total_loss(const Tensor& l_flow, const Tensor& l_cond, std::size_t step,
                  std::size_t total_dense_steps, double lambda_max, double lambda_min) {
  const double lambda = lambda_at(step, total_dense_steps, lambda_max, lambda_min);
  return add(scale(l_flow, 1.0 - lambda), scale(l_cond, lambda));
}

double evaluate_total_loss(const InrModel& inr, const NolaAdapterSet& adapters, const Tensor& z0,
                           const CurriculumConfig& cfg, const DitModel& backbone) {
  const InrModel frozen_inr = inr.with_parameters(detached(inr.parameters()));
  const DitModel merged = apply_adapters(backbone, adapters, AdapterMode::kMerged);
  double total = 0.0;
  const auto draws = evaluation_draws(cfg, z0.shape());
  for (const Draw& d : draws) total += step_loss(frozen_inr, merged, z0, d, 1, 1, cfg).item();
  return total / static_cast<double>(draws.size());
}

CurriculumResult run_curriculum(const VideoTensor& gop, const CurriculumConfig& cfg,
                                const DitModel& backbone) {
  cfg.validate();
  check_compatible(gop, cfg, backbone);
  const Tensor z0 = latent_encode(gop, cfg.latent);
  const std::uint32_t fingerprint = backbone.fingerprint();

  CurriculumResult res;
  res.inr = make_inr(cfg.inr, stream_seed(cfg.seed, Stream::kInrInit), cfg.mask_bias);
  res.adapters = make_adapters(backbone, stream_seed(cfg.seed, Stream::kNolaBases),
                               cfg.nola_basis_count, cfg.nola_rank,
                               static_cast<float>(cfg.nola_scale));
  res.initial_total = evaluate_total_loss(res.inr, res.adapters, z0, cfg, backbone);

  Rng train_rng(stream_seed(cfg.seed, Stream::kTraining));
  Rng noise_rng(stream_seed(cfg.seed, Stream::kQuantNoise));
  OptimizerState inr_opt, nola_opt;
  inr_opt.hyper.weight_decay = nola_opt.hyper.weight_decay = cfg.weight_decay;
  const std::size_t dense_steps = cfg.epochs[0] * cfg.steps_per_epoch;
  std::size_t global_step = 0;

  for (int stage = 0; stage < 3; ++stage) {
    if (stage == 1) res.pruned = apply_prune(res.inr, cfg.prune_ratio);
    const double inr_lr = stage == 2 ? cfg.lr_inr / 10.0 : cfg.lr_inr;
    const std::size_t steps = cfg.epochs[stage] * cfg.steps_per_epoch;
    for (std::size_t i = 0; i < steps; ++i, ++global_step) {
      const long li = static_cast<long>(i), ln = static_cast<long>(steps);
      inr_opt.hyper.lr = cosine_value(li, ln, inr_lr, inr_lr * cfg.lr_floor);
      nola_opt.hyper.lr = cosine_value(li, ln, cfg.lr_nola, cfg.lr_nola * cfg.lr_floor);

      std::vector<Tensor> inr_params = res.inr.parameters();
      std::vector<Tensor> nola_params = res.adapters.parameters();
      InrModel inr_view = res.inr;
      NolaAdapterSet nola_view = res.adapters;
      if (stage == 2) {
        std::vector<Tensor> noisy;
        for (const Tensor& p : inr_params) {
          noisy.push_back(quant_noise_forward(p, noise_rng, cfg.quant_noise_rho, nullptr,
                                              cfg.quant_bits));
        }
        inr_view = res.inr.with_parameters(noisy);
        noisy.clear();
        for (const Tensor& p : nola_params) {
          noisy.push_back(quant_noise_forward(p, noise_rng, cfg.quant_noise_rho, nullptr,
                                              cfg.quant_bits));
        }
        nola_view = with_coefficients(res.adapters, noisy);
      }

      const Draw d{sample_timestep(train_rng), gaussian_noise(z0.shape(), train_rng)};
      const DitModel adapted = apply_adapters(backbone, nola_view, AdapterMode::kDynamic);
      const Tensor loss = step_loss(inr_view, adapted, z0, d, global_step, dense_steps, cfg);
      res.step_losses.push_back(loss.item());
      const GradMap grads = backward(loss);
      adamw_step(inr_params, grads, inr_opt);
      adamw_step(nola_params, grads, nola_opt);
      res.inr.enforce_masks();
    }
  }
  require(backbone.fingerprint() == fingerprint, ErrorCode::kContractViolation,
          "backbone weights changed during training");

  const DecodedModels q = restore_models(quantize_state(res, cfg, gop, backbone), backbone);
  res.final_total = evaluate_total_loss(q.inr, q.adapters, z0, cfg, backbone);
  return res;
}

ModelState quantize_state(const CurriculumResult& trained, const CurriculumConfig& cfg,
                          const VideoTensor& gop, const DitModel& backbone) {
  ModelState state;
  BitstreamHeader& h = state.header;
  h.frames = static_cast<std::uint32_t>(gop.frames);
  h.height = static_cast<std::uint32_t>(gop.height);
  h.width = static_cast<std::uint32_t>(gop.width);
  h.latent = cfg.latent;
  h.inr_arch = kInrArchVersion;
  h.inr = trained.inr.config;
  h.dit = backbone.config;
  h.backbone_fingerprint = backbone.fingerprint();
  h.nola_seed = trained.adapters.seed;
  h.nola_basis_count = static_cast<std::uint32_t>(trained.adapters.basis_count);
  h.nola_rank = static_cast<std::uint32_t>(trained.adapters.rank);
  h.nola_scale = static_cast<float>(trained.adapters.basis_scale);
  for (const NolaMapping& mp : trained.adapters.mappings) {
    h.nola_targets.push_back(
        {mp.target, static_cast<std::uint32_t>(mp.m), static_cast<std::uint32_t>(mp.n)});
  }
  h.sampler_steps = static_cast<std::uint32_t>(cfg.sampler_steps);
  h.noise_seed = stream_seed(cfg.seed, Stream::kSamplerNoise);
  h.lambda_max = static_cast<float>(cfg.lambda_max);
  h.lambda_min = static_cast<float>(cfg.lambda_min);
  for (int i = 0; i < 3; ++i) h.epochs[i] = static_cast<std::uint32_t>(cfg.epochs[i]);
  h.prune_ratio = static_cast<float>(cfg.prune_ratio);
  h.quant_noise_rho = static_cast<float>(cfg.quant_noise_rho);
  h.quant_bits = static_cast<std::uint8_t>(cfg.quant_bits);
  h.flags = cfg.force_unit_mask ? kFlagUnitMask : 0;

  auto add = [&](const std::string& id, const Tensor& t) {
    QuantizedTensor q;
    q.id = id;
    q.shape = t.shape();
    q.params = quant_params(t, cfg.quant_bits);
    q.levels = quantize(t.data(), q.params, cfg.quant_bits);
    state.tensors.push_back(std::move(q));
  };
  for (const auto& [name, t] : trained.inr.named_parameters()) add("inr." + name, t);
  for (const NolaMapping& mp : trained.adapters.mappings) {
    add("nola." + mp.target + ".alpha", mp.alpha);
    add("nola." + mp.target + ".beta", mp.beta);
  }
  return state;
}

DecodedModels restore_models(const ModelState& state, const DitModel& backbone) {
  const BitstreamHeader& h = state.header;
  if (h.inr_arch != kInrArchVersion) {
    fail(ErrorCode::kArchitectureMismatch,
         "INR architecture version " + std::to_string(h.inr_arch) + " is not supported");
  }
  if (!(h.dit == backbone.config) || h.backbone_fingerprint != backbone.fingerprint()) {
    fail(ErrorCode::kArchitectureMismatch, "segment was encoded against a different backbone");
  }
  std::map<std::string, const QuantizedTensor*> by_id;
  for (const QuantizedTensor& q : state.tensors) by_id[q.id] = &q;
  auto take = [&by_id](const std::string& id, const Shape& shape) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorCode::kArchitectureMismatch, "segment lacks tensor '" + id + "'");
    if (it->second->shape != shape) {
      fail(ErrorCode::kArchitectureMismatch, "tensor '" + id + "' has shape " +
                                                 shape_str(it->second->shape) + ", expected " +
                                                 shape_str(shape));
    }
    return dequantize(it->second->levels, it->second->params, shape);
  };

  DecodedModels out;
  const InrModel skeleton = make_inr(h.inr, 0);
  std::vector<Tensor> params;
  for (const auto& [name, t] : skeleton.named_parameters()) params.push_back(take("inr." + name, t.shape()));
  out.inr = skeleton.with_parameters(params);

  out.adapters.seed = h.nola_seed;
  out.adapters.basis_count = h.nola_basis_count;
  out.adapters.rank = h.nola_rank;
  out.adapters.basis_scale = h.nola_scale;
  for (const AdapterTarget& t : h.nola_targets) {
    const Linear* linear = backbone.find_mapping(t.id);
    if (!linear || linear->in_features() != t.m || linear->out_features() != t.n) {
      fail(ErrorCode::kArchitectureMismatch, "adapter target '" + t.id + "' does not fit backbone");
    }
    NolaMapping mp;
    mp.target = t.id;
    mp.m = t.m;
    mp.n = t.n;
    mp.alpha = take("nola." + t.id + ".alpha", {h.nola_basis_count});
    mp.beta = take("nola." + t.id + ".beta", {h.nola_basis_count});
    out.adapters.mappings.push_back(std::move(mp));
  }
  return out;
}

VideoTensor decode_segment(const ModelState& state, const DitModel& backbone,
                           const DecodeOptions& opts) {
  const BitstreamHeader& h = state.header;
  const DecodedModels models = restore_models(state, backbone);
  require(h.latent.temporal >= 1 && h.frames % h.latent.temporal == 0, ErrorCode::kUnsupportedFormat,
          "segment frame count is not divisible by its temporal factor");
  const std::size_t frames = h.frames / h.latent.temporal;
  const DitModel merged = apply_adapters(backbone, models.adapters, AdapterMode::kMerged);
  Tensor cond = condition(models.inr, frames, (h.flags & kFlagUnitMask) != 0);
  if (opts.zero_conditioning) cond = Tensor::zeros(cond.shape());
  const Tensor z = euler_sample(merged, cond, static_cast<int>(h.sampler_steps), h.noise_seed);
  VideoTensor out = latent_decode(z, h.latent);
  if (out.height != h.height || out.width != h.width) {
    fail(ErrorCode::kUnsupportedFormat, "decoded frame size disagrees with the header");
  }
  return out;
}

EncodeResult encode(const VideoTensor& video, const CurriculumConfig& cfg, const DitModel& backbone) {
  cfg.validate();
  require(video.frames >= 1, ErrorCode::kOutOfRange, "encode: empty video");
  EncodeResult res;
  std::vector<std::vector<std::uint8_t>> segments;
  for (std::size_t begin = 0, g = 0; begin < video.frames; begin += cfg.gop_size, ++g) {
    const std::size_t end = std::min(video.frames, begin + cfg.gop_size);
    const VideoTensor gop = video.frames_range(begin, end);
    CurriculumConfig gop_cfg = cfg;
    gop_cfg.seed = splitmix64(cfg.seed + g);
    CurriculumResult trained = run_curriculum(gop, gop_cfg, backbone);
    ModelState state = quantize_state(trained, gop_cfg, gop, backbone);
    segments.push_back(write_bitstream(state));
    res.reconstruction.append(decode_segment(state, backbone));
    res.segments.push_back(std::move(state));
    res.trained.push_back(std::move(trained));
  }
  res.stream = pack_segments(segments);
  return res;
}

VideoTensor decode(std::span<const std::uint8_t> stream, const DitModel& backbone,
                   const DecodeOptions& opts) {
  VideoTensor out;
  for (const auto& segment : unpack_segments(stream)) {
    out.append(decode_segment(read_bitstream(segment), backbone, opts));
  }
  return out;
}

}  // namespace inrvc
