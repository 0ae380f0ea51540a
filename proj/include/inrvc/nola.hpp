// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "inrvc/dit.hpp"
#include "inrvc/tensor.hpp"

namespace inrvc {

/// Seeded pseudo-random bases for one mapping. Row i of `b_stack` is
/// B^(i) (m x r, row-major); row i of `a_stack` is A^(i) (r x n).
struct NolaBases {
  std::size_t m = 0, n = 0, r = 0, count = 0;
  Tensor b_stack;  // [count, m*r]
  Tensor a_stack;  // [count, r*n]

  Tensor b_matrix(std::size_t i) const;
  Tensor a_matrix(std::size_t i) const;
};

/// Entries i.i.d. N(0, s) (s is the variance). Stream key is
/// splitmix64(seed ^ hash64(target_id)) feeding xoshiro256++; Box-Muller
/// draws fill every B matrix first, then every A matrix.
NolaBases generate_bases(std::uint64_t seed, const std::string& target_id, std::size_t m,
                         std::size_t n, std::size_t r, std::size_t b, double s);

/// Trainable coefficients for one weight matrix W0 (m x n).
struct NolaMapping {
  std::string target;
  std::size_t m = 0, n = 0;
  Tensor alpha;  // [b]
  Tensor beta;   // [b]
};

struct NolaAdapterSet {
  std::uint64_t seed = 0;
  std::size_t basis_count = 0;  // b
  std::size_t rank = 0;         // r
  double basis_scale = 0.25;    // s, variance of every basis entry
  std::vector<NolaMapping> mappings;

  std::size_t trainable_param_count() const { return 2 * basis_count * mappings.size(); }
  std::vector<Tensor> parameters() const;
  NolaBases bases_for(const NolaMapping& mapping) const;
  /// Deep copy of the coefficients.
  NolaAdapterSet clone() const;
};

/// 2 b per mapping; independent of m, n and r.
std::size_t trainable_param_count(std::size_t basis_count, std::size_t mappings);

/// One mapping per target (default: every adapter target of `model`).
/// beta starts at 0 so the adapted model equals the backbone; alpha ~ N(0, 1/b).
NolaAdapterSet make_adapters(const DitModel& model, std::uint64_t seed, std::size_t basis_count,
                             std::size_t rank, double basis_scale,
                             std::vector<std::string> targets = {});

/// (sum_i beta_i B^(i)) (sum_i alpha_i A^(i)), differentiable in alpha, beta.
Tensor delta_weight(const NolaMapping& mapping, const NolaBases& bases);

enum class AdapterMode { kMerged, kDynamic };

/// Merged: W0 + dW baked into constant weights. Dynamic: every backbone
/// tensor is a frozen copy and dW is recomputed each forward, so gradients
/// reach only alpha and beta.
DitModel apply_adapters(const DitModel& model, const NolaAdapterSet& adapters, AdapterMode mode);

}  // namespace inrvc
