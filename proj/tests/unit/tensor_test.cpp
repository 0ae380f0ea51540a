// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "inrvc/gradcheck.hpp"
#include "inrvc/optim.hpp"
#include "inrvc/rng.hpp"
#include "inrvc/tensor.hpp"

namespace inrvc {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double scale = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = scale * rng.normal();
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

// Contracts a tensor against fixed random weights so every output element
// contributes a distinct gradient.
Tensor probe(const Tensor& out, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(out, random_tensor(out.shape(), rng, false)));
}

TEST(Backward, SumOfSquares) {
  PrecisionScope exact(Precision::kFloat64);
  Tensor w = Tensor::from({2}, {1.0, -2.0}, true);
  GradMap g = backward(sum(mul(w, w)));
  EXPECT_DOUBLE_EQ(g[w].at(0), 2.0);
  EXPECT_DOUBLE_EQ(g[w].at(1), -4.0);
}

TEST(Backward, ConstantLossGivesZeroGradient) {
  Tensor w = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
  Tensor c = Tensor::scalar(5.0);
  const Tensor gw = backward(c)[w];
  for (double v : gw.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, UnreachedParameterGetsZeroGradient) {
  Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor unused = Tensor::from({4}, {1.0, 2.0, 3.0, 4.0}, true);
  const Tensor gu = backward(sum(w))[unused];
  ASSERT_EQ(gu.numel(), 4u);
  for (double v : gu.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, NonScalarLossIsContractViolation) {
  Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
  try {
    backward(mul(w, w));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContractViolation);
  }
}

TEST(Precision, Float32ModeRoundsStoredValues) {
  Tensor t = Tensor::from({1}, {0.1});
  EXPECT_EQ(t.at(0), static_cast<double>(0.1f));
  PrecisionScope exact(Precision::kFloat64);
  Tensor u = Tensor::from({1}, {0.1});
  EXPECT_EQ(u.at(0), 0.1);
}

// Finite-difference agreement for every op, on random shapes.
struct OpCase {
  const char* name;
  std::function<Tensor(Rng&, std::vector<Tensor>&)> build;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  PrecisionScope exact(Precision::kFloat64);
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    Rng rng(1000 + trial);
    std::vector<Tensor> params;
    GetParam().build(rng, params);
    const std::uint64_t probe_seed = 77 + trial;
    auto loss = [&] { return probe(GetParam().build(rng, params), probe_seed); };
    const double err = finite_diff_check(loss, params, 1e-4);
    EXPECT_LT(err, 1e-4) << GetParam().name << " trial " << trial;
  }
}

// Helper: draw parameters on the first call, reuse on later calls.
Tensor param(std::vector<Tensor>& params, std::size_t index, Shape shape, Rng& rng) {
  if (params.size() <= index) params.resize(index + 1);
  if (!params[index].defined()) params[index] = random_tensor(std::move(shape), rng);
  return params[index];
}

const OpCase kOpCases[] = {
    {"add_broadcast",
     [](Rng& rng, std::vector<Tensor>& p) {
       Tensor a = param(p, 0, {4, 5, 3}, rng);
       Tensor b = param(p, 1, {5, 1}, rng);
       return add(a, b);
     }},
    {"sub", [](Rng& rng, std::vector<Tensor>& p) {
       return sub(param(p, 0, {6, 7}, rng), param(p, 1, {6, 7}, rng));
     }},
    {"mul_broadcast", [](Rng& rng, std::vector<Tensor>& p) {
       return mul(param(p, 0, {3, 4, 4}, rng), param(p, 1, {3, 1, 1}, rng));
     }},
    {"scale_add_scalar", [](Rng& rng, std::vector<Tensor>& p) {
       return add_scalar(scale(param(p, 0, {17}, rng), -1.7), 0.3);
     }},
    {"matmul", [](Rng& rng, std::vector<Tensor>& p) {
       return matmul(param(p, 0, {9, 13}, rng), param(p, 1, {13, 7}, rng));
     }},
    {"transpose_reshape", [](Rng& rng, std::vector<Tensor>& p) {
       return reshape(transpose(param(p, 0, {6, 10}, rng)), {5, 12});
     }},
    {"permute", [](Rng& rng, std::vector<Tensor>& p) {
       return permute(param(p, 0, {2, 3, 4, 5}, rng), {2, 0, 3, 1});
     }},
    {"conv2d_3x3_pad1", [](Rng& rng, std::vector<Tensor>& p) {
       return conv2d(param(p, 0, {2, 3, 6, 5}, rng), param(p, 1, {4, 3, 3, 3}, rng),
                     param(p, 2, {4}, rng), 1);
     }},
    {"conv2d_1x1", [](Rng& rng, std::vector<Tensor>& p) {
       return conv2d(param(p, 0, {1, 5, 4, 4}, rng), param(p, 1, {3, 5, 1, 1}, rng), Tensor(), 0);
     }},
    {"upsample", [](Rng& rng, std::vector<Tensor>& p) {
       return upsample_nearest2x(param(p, 0, {2, 3, 3, 4}, rng));
     }},
    {"gelu", [](Rng& rng, std::vector<Tensor>& p) { return gelu(param(p, 0, {64}, rng)); }},
    {"sigmoid", [](Rng& rng, std::vector<Tensor>& p) { return sigmoid(param(p, 0, {64}, rng)); }},
    {"sin", [](Rng& rng, std::vector<Tensor>& p) { return sin(param(p, 0, {64}, rng)); }},
    {"softmax", [](Rng& rng, std::vector<Tensor>& p) {
       return softmax_lastdim(param(p, 0, {5, 9}, rng));
     }},
    {"layer_norm", [](Rng& rng, std::vector<Tensor>& p) {
       return layer_norm(param(p, 0, {7, 16}, rng));
     }},
    {"mean", [](Rng& rng, std::vector<Tensor>& p) {
       return reshape(mean(param(p, 0, {8, 8}, rng)), {1});
     }},
    {"mse", [](Rng& rng, std::vector<Tensor>& p) {
       return reshape(mse(param(p, 0, {30}, rng), param(p, 1, {30}, rng)), {1});
     }},
    {"concat_slice", [](Rng& rng, std::vector<Tensor>& p) {
       Tensor a = param(p, 0, {3, 4, 2}, rng);
       Tensor b = param(p, 1, {3, 2, 2}, rng);
       return slice(concat({a, b}, 1), 1, 1, 5);
     }},
    {"large_matmul_4096", [](Rng& rng, std::vector<Tensor>& p) {
       return matmul(param(p, 0, {64, 64}, rng), param(p, 1, {64, 8}, rng));
     }},
};

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::ValuesIn(kOpCases),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Backward, RandomThreeLayerConvNetMatchesFiniteDifferences) {
  PrecisionScope exact(Precision::kFloat64);
  Rng rng(42);
  Tensor x = random_tensor({2, 3, 4, 4}, rng, false);
  std::vector<Tensor> params{
      random_tensor({4, 3, 3, 3}, rng, true, 0.5), random_tensor({4}, rng, true, 0.1),
      random_tensor({4, 4, 3, 3}, rng, true, 0.5), random_tensor({4}, rng, true, 0.1),
      random_tensor({2, 4, 1, 1}, rng, true, 0.5), random_tensor({2}, rng, true, 0.1)};
  Tensor target = random_tensor({2, 2, 8, 8}, rng, false);
  auto loss = [&] {
    Tensor h = gelu(conv2d(x, params[0], params[1], 1));
    h = gelu(conv2d(upsample_nearest2x(h), params[2], params[3], 1));
    h = sigmoid(conv2d(h, params[4], params[5], 0));
    return mse(h, target);
  };
  EXPECT_LT(finite_diff_check(loss, params, 1e-4), 1e-4);
}

TEST(FiniteDiff, LinearFunctionIsExact) {
  Rng rng(3);
  Tensor w = random_tensor({10}, rng);
  Tensor c = random_tensor({10}, rng, false);
  EXPECT_LE(finite_diff_check([&] { return sum(mul(w, c)); }, {w}, 1e-3), 1e-10);
}

TEST(FiniteDiff, SumOfSines) {
  Rng rng(4);
  Tensor w = random_tensor({50}, rng);
  EXPECT_LT(finite_diff_check([&] { return sum(sin(w)); }, {w}, 1e-5), 1e-6);
}

TEST(FiniteDiff, DeadBranchReportsZero) {
  Rng rng(5);
  Tensor live = random_tensor({3}, rng);
  Tensor dead = random_tensor({3}, rng);
  auto loss = [&] { return sum(mul(slice(concat({live, dead}, 0), 0, 0, 3), live)); };
  EXPECT_EQ(finite_diff_check(loss, {dead}, 1e-4), 0.0);
  EXPECT_LT(finite_diff_check(loss, {live, dead}, 1e-4), 1e-6);
}

TEST(AdamW, ZeroGradientNoDecayLeavesParameterUnchanged) {
  Tensor w = Tensor::from({3}, {0.5, -1.0, 2.0}, true);
  OptimizerState st;
  st.hyper.lr = 0.1;
  std::vector<Tensor> ps{w};
  GradMap empty;
  adamw_step(ps, empty, st);
  EXPECT_EQ(w.at(0), 0.5);
  EXPECT_EQ(w.at(1), -1.0);
  EXPECT_EQ(w.at(2), 2.0);
  EXPECT_EQ(st.step, 1u);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  PrecisionScope exact(Precision::kFloat64);
  for (double g : {3.0, -0.01}) {
    Tensor w = Tensor::from({}, {1.0}, true);
    OptimizerState st;
    st.hyper.lr = 0.05;
    st.hyper.eps = 0.0;
    GradMap grads;
    grads.set(w.id(), Tensor::from({}, {g}));
    std::vector<Tensor> ps{w};
    adamw_step(ps, grads, st);
    EXPECT_NEAR(w.at(0), 1.0 - 0.05 * (g > 0 ? 1.0 : -1.0), 1e-15);
  }
}

TEST(AdamW, ZeroGradientShrinksByDecayFactor) {
  Tensor w = Tensor::from({2}, {0.75, -3.0}, true);
  OptimizerState st;
  st.hyper.lr = 0.01;
  st.hyper.weight_decay = 0.1;
  std::vector<Tensor> ps{w};
  std::vector<double> expect{0.75, -3.0};
  for (int k = 0; k < 5; ++k) {
    adamw_step(ps, GradMap{}, st);
    for (double& e : expect) e = static_cast<double>(static_cast<float>(e * (1.0 - 0.01 * 0.1)));
    EXPECT_EQ(w.at(0), expect[0]);
    EXPECT_EQ(w.at(1), expect[1]);
  }
}

TEST(AdamW, QuadraticConvergesMonotonicallyAndMatchesScalarLoop) {
  PrecisionScope exact(Precision::kFloat64);
  Tensor w = Tensor::from({}, {0.0}, true);
  OptimizerState st;
  st.hyper.lr = 0.1;
  std::vector<Tensor> ps{w};
  // Reference scalar Adam loop.
  double rw = 0.0, rm = 0.0, rv = 0.0;
  double prev = 0.0;
  for (int k = 1; k <= 10; ++k) {
    Tensor d = add_scalar(w, -3.0);
    adamw_step(ps, backward(sum(mul(d, d))), st);
    const double g = 2.0 * (rw - 3.0);
    rm = 0.9 * rm + 0.1 * g;
    rv = 0.999 * rv + 0.001 * g * g;
    rw -= 0.1 * (rm / (1 - std::pow(0.9, k))) / (std::sqrt(rv / (1 - std::pow(0.999, k))) + 1e-8);
    EXPECT_NEAR(w.at(0), rw, 1e-12);
    EXPECT_GT(w.at(0), prev);
    EXPECT_LT(w.at(0), 3.0);
    prev = w.at(0);
  }
}

TEST(AdamW, ShapeMismatchIsAnError) {
  Tensor w = Tensor::zeros({3}, true);
  GradMap grads;
  grads.set(w.id(), Tensor::zeros({2}));
  OptimizerState st;
  std::vector<Tensor> ps{w};
  EXPECT_THROW(adamw_step(ps, grads, st), Error);
}

TEST(Cosine, EndpointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(cosine_value(0, 10, 0.9, 0.1), 0.9);
  EXPECT_NEAR(cosine_value(10, 10, 0.9, 0.1), 0.1, 1e-15);
  EXPECT_NEAR(cosine_value(5, 10, 1.0, 0.0), 0.5, 1e-15);
  EXPECT_THROW(cosine_value(11, 10, 1.0, 0.0), Error);
  EXPECT_THROW(cosine_value(-1, 10, 1.0, 0.0), Error);
}

TEST(Cosine, MonotoneNonIncreasing) {
  for (long total : {1L, 7L, 100L}) {
    double prev = cosine_value(0, total, 2.0, -1.0);
    for (long s = 1; s <= total; ++s) {
      const double v = cosine_value(s, total, 2.0, -1.0);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(Determinism, RepeatedForwardIsBitIdentical) {
  auto run = [] {
    Rng rng(9);
    Tensor a = random_tensor({16, 16}, rng);
    Tensor b = random_tensor({16, 16}, rng);
    return softmax_lastdim(layer_norm(matmul(a, b))).to_vector();
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace inrvc
