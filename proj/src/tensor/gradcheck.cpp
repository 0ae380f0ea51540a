// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace inrvc {

double finite_diff_check(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                         double h) {
  require(h > 0.0, ErrorCode::kOutOfRange, "finite_diff_check: h must be positive");
  PrecisionScope exact(Precision::kFloat64);
  const GradMap grads = backward(loss());
  double worst = 0.0;
  for (Tensor& param : params) {
    const Tensor analytic = grads[param];
    auto values = param.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().item();
      values[i] = saved - h;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic.at(i) - numeric) / std::max(1e-12, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace inrvc
