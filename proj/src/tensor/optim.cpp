// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace inrvc {

void adamw_step(std::span<Tensor> params, const GradMap& grads, OptimizerState& state) {
  const AdamWHyper& hp = state.hyper;
  const double k1 = static_cast<double>(state.step + 1);
  const double bc1 = 1.0 - std::pow(hp.beta1, k1);
  const double bc2 = 1.0 - std::pow(hp.beta2, k1);
  const double decay = 1.0 - hp.lr * hp.weight_decay;
  const Precision precision = current_precision();

  for (Tensor& param : params) {
    const Tensor grad = grads[param];
    if (grad.shape() != param.shape()) {
      fail(ErrorCode::kShapeMismatch, "adamw_step: gradient shape " + shape_str(grad.shape()) +
                                          " != parameter shape " + shape_str(param.shape()));
    }
    auto& m = state.m[param.id()];
    auto& v = state.v[param.id()];
    if (m.empty()) {
      m.assign(param.numel(), 0.0);
      v.assign(param.numel(), 0.0);
    }
    if (m.size() != param.numel()) {
      fail(ErrorCode::kShapeMismatch, "adamw_step: moment size differs from parameter");
    }
    auto theta = param.mutable_data();
    const auto g = grad.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
      v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      double updated = theta[i] * decay;
      updated -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
      theta[i] = round_to_storage(updated, precision);
    }
  }
  ++state.step;
}

double cosine_value(long step, long total, double v_max, double v_min) {
  require(total > 0, ErrorCode::kOutOfRange, "cosine_value: total must be positive");
  if (step < 0 || step > total) {
    fail(ErrorCode::kOutOfRange, "cosine_value: step " + std::to_string(step) + " outside [0, " +
                                     std::to_string(total) + "]");
  }
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total);
  return v_min + 0.5 * (v_max - v_min) * (1.0 + std::cos(phase));
}

}  // namespace inrvc
