// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "inrvc/tensor.hpp"

namespace inrvc {

/// Max over every parameter element of
///   |autodiff - central difference| / max(1e-12, |central difference|).
/// `loss` rebuilds the scalar from the current parameter values. Runs in
/// 64-bit precision; parameters are restored afterwards.
double finite_diff_check(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                         double h);

}  // namespace inrvc
