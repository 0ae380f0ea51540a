// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <json.hpp>

#include "inrvc/pipeline.hpp"

namespace inrvc {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) fail(ErrorCode::kInvalidConfig, std::string("unknown config key '") + k + "' in " + where);
  }
}

const json& object_at(const json& obj, const char* key) {
  const json& sub = obj.at(key);
  if (!sub.is_object()) fail(ErrorCode::kInvalidConfig, std::string("config '") + key + "' must be an object");
  return sub;
}

}  // namespace

CurriculumConfig parse_curriculum_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::kInvalidConfig, "config must be a JSON object");
  reject_unknown(doc,
                 {"gop_size", "epochs", "steps_per_epoch", "lr_inr", "lr_nola", "lr_floor",
                  "weight_decay", "prune_ratio", "quant_noise_rho", "quant_bits", "lambda_max",
                  "lambda_min", "seed", "latent", "inr", "mask_bias", "nola", "sampler_steps",
                  "eval_samples", "force_unit_mask"},
                 "curriculum");
  CurriculumConfig cfg;
  read_field(doc, "gop_size", cfg.gop_size);
  if (doc.contains("epochs")) {
    std::vector<std::size_t> e;
    read_field(doc, "epochs", e);
    if (e.size() != 3) fail(ErrorCode::kInvalidConfig, "config 'epochs' must list 3 stages");
    for (int i = 0; i < 3; ++i) cfg.epochs[i] = e[static_cast<std::size_t>(i)];
  }
  read_field(doc, "steps_per_epoch", cfg.steps_per_epoch);
  read_field(doc, "lr_inr", cfg.lr_inr);
  read_field(doc, "lr_nola", cfg.lr_nola);
  read_field(doc, "lr_floor", cfg.lr_floor);
  read_field(doc, "weight_decay", cfg.weight_decay);
  read_field(doc, "prune_ratio", cfg.prune_ratio);
  read_field(doc, "quant_noise_rho", cfg.quant_noise_rho);
  read_field(doc, "quant_bits", cfg.quant_bits);
  read_field(doc, "lambda_max", cfg.lambda_max);
  read_field(doc, "lambda_min", cfg.lambda_min);
  read_field(doc, "seed", cfg.seed);
  read_field(doc, "mask_bias", cfg.mask_bias);
  read_field(doc, "sampler_steps", cfg.sampler_steps);
  read_field(doc, "eval_samples", cfg.eval_samples);
  read_field(doc, "force_unit_mask", cfg.force_unit_mask);
  if (doc.contains("latent")) {
    const json& l = object_at(doc, "latent");
    reject_unknown(l, {"temporal", "height", "width"}, "latent");
    read_field(l, "temporal", cfg.latent.temporal);
    read_field(l, "height", cfg.latent.height);
    read_field(l, "width", cfg.latent.width);
  }
  cfg.inr.latent_channels = cfg.latent.channels();
  if (doc.contains("inr")) {
    const json& n = object_at(doc, "inr");
    reject_unknown(n, {"grid_t", "grid_c", "grid_h", "grid_w", "stages", "mask_channels"}, "inr");
    read_field(n, "grid_t", cfg.inr.grid_t);
    read_field(n, "grid_c", cfg.inr.grid_c);
    read_field(n, "grid_h", cfg.inr.grid_h);
    read_field(n, "grid_w", cfg.inr.grid_w);
    read_field(n, "stages", cfg.inr.stages);
    read_field(n, "mask_channels", cfg.inr.mask_channels);
  }
  if (doc.contains("nola")) {
    const json& n = object_at(doc, "nola");
    reject_unknown(n, {"basis_count", "rank", "scale"}, "nola");
    read_field(n, "basis_count", cfg.nola_basis_count);
    read_field(n, "rank", cfg.nola_rank);
    read_field(n, "scale", cfg.nola_scale);
  }
  cfg.validate();
  return cfg;
}

std::string curriculum_to_json(const CurriculumConfig& cfg) {
  json doc = {
      {"gop_size", cfg.gop_size},
      {"epochs", {cfg.epochs[0], cfg.epochs[1], cfg.epochs[2]}},
      {"steps_per_epoch", cfg.steps_per_epoch},
      {"lr_inr", cfg.lr_inr},
      {"lr_nola", cfg.lr_nola},
      {"lr_floor", cfg.lr_floor},
      {"weight_decay", cfg.weight_decay},
      {"prune_ratio", cfg.prune_ratio},
      {"quant_noise_rho", cfg.quant_noise_rho},
      {"quant_bits", cfg.quant_bits},
      {"lambda_max", cfg.lambda_max},
      {"lambda_min", cfg.lambda_min},
      {"seed", cfg.seed},
      {"latent", {{"temporal", cfg.latent.temporal}, {"height", cfg.latent.height},
                  {"width", cfg.latent.width}}},
      {"inr", {{"grid_t", cfg.inr.grid_t}, {"grid_c", cfg.inr.grid_c}, {"grid_h", cfg.inr.grid_h},
               {"grid_w", cfg.inr.grid_w}, {"stages", cfg.inr.stages},
               {"mask_channels", cfg.inr.mask_channels}}},
      {"mask_bias", cfg.mask_bias},
      {"nola", {{"basis_count", cfg.nola_basis_count}, {"rank", cfg.nola_rank},
                {"scale", cfg.nola_scale}}},
      {"sampler_steps", cfg.sampler_steps},
      {"eval_samples", cfg.eval_samples},
      {"force_unit_mask", cfg.force_unit_mask},
  };
  return doc.dump(2);
}

}  // namespace inrvc
