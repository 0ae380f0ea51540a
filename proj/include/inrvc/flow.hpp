// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "inrvc/dit.hpp"
#include "inrvc/rng.hpp"
#include "inrvc/tensor.hpp"

namespace inrvc {

/// Logit-normal timestep: t = sigmoid(u), u ~ N(0, 1).
double sample_timestep(Rng& rng);
double timestep_from_normal(double u);

/// Standard-normal tensor drawn from Rng(seed) in row-major order.
Tensor gaussian_noise(const Shape& shape, std::uint64_t seed);
Tensor gaussian_noise(const Shape& shape, Rng& rng);

struct FlowSample {
  Tensor z_t;
  Tensor velocity;  // eps - z0
};

/// z_t = (1 - t) z0 + t eps, target velocity eps - z0.
FlowSample forward_process(const Tensor& z0, const Tensor& eps, double t);

/// Mean squared error between predicted and target velocity.
Tensor flow_loss(const Tensor& predicted, const Tensor& target);

using VelocityField = std::function<Tensor(const Tensor& z, double t)>;

/// Euler integration from t = 1 to t = 0 on the uniform grid t_k = k/steps:
///   z <- z - (1/steps) v(z, t_k),  k = steps..1,
/// starting from z_1 = gaussian_noise(shape, seed). The integration state
/// is carried at 64-bit precision; the result is stored at the current
/// tensor precision.
Tensor euler_sample(const VelocityField& field, const Shape& shape, int steps, std::uint64_t seed);

/// Same, with the DiT conditioned on `cond`.
Tensor euler_sample(const DitModel& model, const Tensor& cond, int steps, std::uint64_t seed);

}  // namespace inrvc
