// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/nola.hpp"

#include <cmath>
#include <memory>

#include "inrvc/rng.hpp"

namespace inrvc {

Tensor NolaBases::b_matrix(std::size_t i) const {
  return reshape(slice(b_stack, 0, i, i + 1), {m, r});
}

Tensor NolaBases::a_matrix(std::size_t i) const {
  return reshape(slice(a_stack, 0, i, i + 1), {r, n});
}

NolaBases generate_bases(std::uint64_t seed, const std::string& target_id, std::size_t m,
                         std::size_t n, std::size_t r, std::size_t b, double s) {
  require(m >= 1 && n >= 1 && r >= 1 && b >= 1, ErrorCode::kOutOfRange,
          "generate_bases: m, n, r and b must be >= 1");
  Rng rng(splitmix64(seed ^ hash64(target_id)));
  const double std_dev = std::sqrt(s);
  std::vector<double> bv(b * m * r), av(b * r * n);
  for (double& v : bv) v = std_dev * rng.normal();
  for (double& v : av) v = std_dev * rng.normal();
  NolaBases out;
  out.m = m;
  out.n = n;
  out.r = r;
  out.count = b;
  out.b_stack = Tensor::from({b, m * r}, std::move(bv));
  out.a_stack = Tensor::from({b, r * n}, std::move(av));
  return out;
}

std::vector<Tensor> NolaAdapterSet::parameters() const {
  std::vector<Tensor> out;
  for (const NolaMapping& mp : mappings) {
    out.push_back(mp.alpha);
    out.push_back(mp.beta);
  }
  return out;
}

NolaBases NolaAdapterSet::bases_for(const NolaMapping& mapping) const {
  return generate_bases(seed, mapping.target, mapping.m, mapping.n, rank, basis_count, basis_scale);
}

NolaAdapterSet NolaAdapterSet::clone() const {
  NolaAdapterSet out = *this;
  for (NolaMapping& mp : out.mappings) {
    mp.alpha = mp.alpha.clone(mp.alpha.requires_grad());
    mp.beta = mp.beta.clone(mp.beta.requires_grad());
  }
  return out;
}

std::size_t trainable_param_count(std::size_t basis_count, std::size_t mappings) {
  return 2 * basis_count * mappings;
}

NolaAdapterSet make_adapters(const DitModel& model, std::uint64_t seed, std::size_t basis_count,
                             std::size_t rank, double basis_scale,
                             std::vector<std::string> targets) {
  require(basis_count >= 1 && rank >= 1, ErrorCode::kInvalidConfig,
          "NOLA basis count and rank must be >= 1");
  if (targets.empty()) targets = model.adapter_targets();
  NolaAdapterSet set;
  set.seed = seed;
  set.basis_count = basis_count;
  set.rank = rank;
  set.basis_scale = basis_scale;
  for (const std::string& target : targets) {
    const Linear* linear = model.find_mapping(target);
    if (!linear) fail(ErrorCode::kArchitectureMismatch, "no adapter target '" + target + "'");
    Rng rng(splitmix64(seed ^ hash64(target) ^ 0x616c706861ULL));
    std::vector<double> alpha(basis_count);
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(basis_count));
    for (double& a : alpha) a = std_dev * rng.normal();
    NolaMapping mp;
    mp.target = target;
    mp.m = linear->in_features();
    mp.n = linear->out_features();
    mp.alpha = Tensor::from({basis_count}, std::move(alpha), true);
    mp.beta = Tensor::zeros({basis_count}, true);
    set.mappings.push_back(std::move(mp));
  }
  return set;
}

Tensor delta_weight(const NolaMapping& mapping, const NolaBases& bases) {
  if (mapping.alpha.numel() != bases.count || mapping.beta.numel() != bases.count) {
    fail(ErrorCode::kShapeMismatch, "delta_weight: coefficient length != basis count " +
                                        std::to_string(bases.count));
  }
  const std::size_t b = bases.count;
  Tensor b_sum = reshape(matmul(reshape(mapping.beta, {1, b}), bases.b_stack), {bases.m, bases.r});
  Tensor a_sum = reshape(matmul(reshape(mapping.alpha, {1, b}), bases.a_stack), {bases.r, bases.n});
  return matmul(b_sum, a_sum);
}

DitModel apply_adapters(const DitModel& model, const NolaAdapterSet& adapters, AdapterMode mode) {
  DitModel out = model.frozen();
  for (const NolaMapping& mp : adapters.mappings) {
    Linear* linear = out.find_mapping(mp.target);
    if (!linear) fail(ErrorCode::kArchitectureMismatch, "no adapter target '" + mp.target + "'");
    if (linear->in_features() != mp.m || linear->out_features() != mp.n) {
      fail(ErrorCode::kArchitectureMismatch, "adapter '" + mp.target + "' shape differs from model");
    }
    auto bases = std::make_shared<const NolaBases>(adapters.bases_for(mp));
    if (mode == AdapterMode::kMerged) {
      Tensor merged = add(linear->weight, delta_weight(mp, *bases));
      linear->weight = merged.detach();
    } else {
      NolaMapping coeffs = mp;
      linear->delta = [coeffs, bases] { return delta_weight(coeffs, *bases); };
    }
  }
  return out;
}

}  // namespace inrvc
