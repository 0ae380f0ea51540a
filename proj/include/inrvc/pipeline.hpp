// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inrvc/bitstream.hpp"
#include "inrvc/dit.hpp"
#include "inrvc/inr.hpp"
#include "inrvc/latent.hpp"
#include "inrvc/nola.hpp"
#include "inrvc/video.hpp"

namespace inrvc {

struct CurriculumConfig {
  std::size_t gop_size = 8;
  std::size_t epochs[3] = {60, 24, 12};  // dense, prune finetune, QAT
  /// Optimizer steps per epoch; each step draws one (t, eps) pair.
  std::size_t steps_per_epoch = 1;
  double lr_inr = 2e-3;
  double lr_nola = 2e-4;
  /// Cosine decay within each stage ends at lr * lr_floor.
  double lr_floor = 0.1;
  double weight_decay = 0.0;
  double prune_ratio = 0.15;
  double quant_noise_rho = 0.9;
  int quant_bits = 6;
  double lambda_max = 0.99;
  double lambda_min = 0.05;
  std::uint64_t seed = 1;

  LatentConfig latent;
  InrConfig inr;
  /// Initial head_m bias; a high start keeps M near 1 until training moves it.
  double mask_bias = 4.0;
  std::size_t nola_basis_count = 8;
  std::size_t nola_rank = 16;
  double nola_scale = 0.25;
  std::size_t sampler_steps = 20;
  /// Fixed (t, eps) draws used to report the final total loss.
  std::size_t eval_samples = 8;
  /// Ablation: replace the learned mask by M = 1 everywhere.
  bool force_unit_mask = false;

  /// Throws kInvalidConfig when a field is out of range.
  void validate() const;
};

/// Reads any subset of the fields from a JSON object; unknown keys are errors.
CurriculumConfig parse_curriculum_json(std::string_view json);
std::string curriculum_to_json(const CurriculumConfig& cfg);

/// (1 - lambda) L_flow + lambda L_cond, lambda cosine-annealed from
/// lambda_max to lambda_min over the dense steps and held afterwards.
double lambda_at(std::size_t step, std::size_t total_dense_steps, double lambda_max,
                 double lambda_min);
Tensor total_loss(const Tensor& l_flow, const Tensor& l_cond, std::size_t step,
                  std::size_t total_dense_steps, double lambda_max = 0.99,
                  double lambda_min = 0.05);

struct CurriculumResult {
  InrModel inr;
  NolaAdapterSet adapters;
  std::vector<double> step_losses;  // L_total per optimizer step
  double initial_total = 0.0;       // fixed-sample L_total at init
  double final_total = 0.0;         // fixed-sample L_total of the quantized result
  std::size_t pruned = 0;
};

/// Three-stage curriculum on one GoP against a frozen backbone.
CurriculumResult run_curriculum(const VideoTensor& gop, const CurriculumConfig& cfg,
                                const DitModel& backbone);

/// L_total on the config's fixed (t, eps) set with lambda = lambda_min.
double evaluate_total_loss(const InrModel& inr, const NolaAdapterSet& adapters,
                           const Tensor& z0, const CurriculumConfig& cfg,
                           const DitModel& backbone);

/// Quantized record set for a trained GoP ("inr.*" and "nola.*" ids).
ModelState quantize_state(const CurriculumResult& trained, const CurriculumConfig& cfg,
                          const VideoTensor& gop, const DitModel& backbone);

/// Dequantized INR and adapters rebuilt from a segment.
struct DecodedModels {
  InrModel inr;
  NolaAdapterSet adapters;
};
DecodedModels restore_models(const ModelState& state, const DitModel& backbone);

struct DecodeOptions {
  /// Ablation: y = 0, M = 0 in place of the INR output.
  bool zero_conditioning = false;
};

VideoTensor decode_segment(const ModelState& state, const DitModel& backbone,
                           const DecodeOptions& opts = {});

struct EncodeResult {
  std::vector<std::uint8_t> stream;           // multi-segment container
  std::vector<ModelState> segments;
  VideoTensor reconstruction;                 // encoder-side decode
  std::vector<CurriculumResult> trained;
};

EncodeResult encode(const VideoTensor& video, const CurriculumConfig& cfg, const DitModel& backbone);
VideoTensor decode(std::span<const std::uint8_t> stream, const DitModel& backbone,
                   const DecodeOptions& opts = {});

}  // namespace inrvc
