// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/flow.hpp"

#include <cmath>
#include <string>

namespace inrvc {

double timestep_from_normal(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double sample_timestep(Rng& rng) { return timestep_from_normal(rng.normal()); }

Tensor gaussian_noise(const Shape& shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(shape, std::move(v));
}

Tensor gaussian_noise(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return gaussian_noise(shape, rng);
}

FlowSample forward_process(const Tensor& z0, const Tensor& eps, double t) {
  if (z0.shape() != eps.shape()) {
    fail(ErrorCode::kShapeMismatch, "forward_process: z0 " + shape_str(z0.shape()) +
                                        " vs noise " + shape_str(eps.shape()));
  }
  require(t >= 0.0 && t <= 1.0, ErrorCode::kOutOfRange, "forward_process: t outside [0, 1]");
  return {add(scale(z0, 1.0 - t), scale(eps, t)), sub(eps, z0)};
}

Tensor flow_loss(const Tensor& predicted, const Tensor& target) { return mse(predicted, target); }

Tensor euler_sample(const VelocityField& field, const Shape& shape, int steps, std::uint64_t seed) {
  require(steps >= 1, ErrorCode::kOutOfRange, "euler_sample: steps must be >= 1");
  std::vector<double> state = gaussian_noise(shape, seed).to_vector();
  const double dt = 1.0 / static_cast<double>(steps);
  for (int k = steps; k >= 1; --k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps);
    const Tensor z = Tensor::from(shape, state);
    const Tensor v = field(z, t);
    if (v.shape() != shape) {
      fail(ErrorCode::kShapeMismatch, "euler_sample: velocity field returned " +
                                          shape_str(v.shape()) + ", expected " + shape_str(shape));
    }
    const auto vd = v.data();
    for (std::size_t i = 0; i < state.size(); ++i) state[i] -= dt * vd[i];
  }
  return Tensor::from(shape, std::move(state));
}

Tensor euler_sample(const DitModel& model, const Tensor& cond, int steps, std::uint64_t seed) {
  require(cond.rank() == 4, ErrorCode::kShapeMismatch, "euler_sample: conditioning must be 4-D");
  const Shape shape{cond.dim(1), model.config.latent_channels, cond.dim(2), cond.dim(3)};
  return euler_sample([&](const Tensor& z, double t) { return dit_forward(model, z, t, cond); },
                      shape, steps, seed);
}

}  // namespace inrvc
