// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "inrvc/tensor.hpp"

namespace inrvc {

struct AdamWHyper {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments per parameter id plus the shared step counter k.
struct OptimizerState {
  AdamWHyper hyper;
  std::uint64_t step = 0;
  std::unordered_map<std::uint64_t, std::vector<double>> m;
  std::unordered_map<std::uint64_t, std::vector<double>> v;
};

/// One decoupled-weight-decay Adam step over `params` (updated in place).
/// Bias correction uses k+1; state.step is incremented once.
void adamw_step(std::span<Tensor> params, const GradMap& grads, OptimizerState& state);

/// v_min + (v_max - v_min) * (1 + cos(pi * step / total)) / 2.
double cosine_value(long step, long total, double v_max, double v_min);

}  // namespace inrvc
