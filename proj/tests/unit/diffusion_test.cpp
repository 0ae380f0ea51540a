// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "inrvc/backbone.hpp"
#include "inrvc/dit.hpp"
#include "inrvc/flow.hpp"
#include "inrvc/gradcheck.hpp"
#include "inrvc/rng.hpp"

namespace inrvc {
namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, bool requires_grad = false) {
  return gaussian_noise(shape, seed).clone(requires_grad);
}

DitConfig tiny_dit() {
  DitConfig c;
  c.latent_channels = 6;
  c.mask_channels = 2;
  c.dim = 8;
  c.heads = 2;
  c.blocks = 1;
  c.ffn = 16;
  return c;
}

TEST(Timestep, LogitNormalInOpenInterval) {
  Rng rng(3);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t = sample_timestep(rng);
    ASSERT_GT(t, 0.0);
    ASSERT_LT(t, 1.0);
    sum += t;
  }
  // Symmetric around 0.5 in distribution.
  EXPECT_NEAR(sum / 10000, 0.5, 0.01);
  EXPECT_DOUBLE_EQ(timestep_from_normal(0.0), 0.5);
  EXPECT_DOUBLE_EQ(timestep_from_normal(1.5), 1.0 / (1.0 + std::exp(-1.5)));
}

TEST(Noise, DeterministicPerSeed) {
  const Tensor a = gaussian_noise({3, 4}, 9), b = gaussian_noise({3, 4}, 9);
  EXPECT_EQ(a.to_vector(), b.to_vector());
  Rng rng(9);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    EXPECT_EQ(a.at(i), static_cast<double>(static_cast<float>(rng.normal())));
  }
}

TEST(ForwardProcess, EndpointsExact) {
  const Tensor z0 = random_tensor({2, 3, 2, 2}, 1), eps = random_tensor({2, 3, 2, 2}, 2);
  EXPECT_EQ(forward_process(z0, eps, 0.0).z_t.to_vector(), z0.to_vector());
  EXPECT_EQ(forward_process(z0, eps, 1.0).z_t.to_vector(), eps.to_vector());
  const auto v = forward_process(z0, eps, 0.3).velocity;
  for (std::size_t i = 0; i < v.numel(); ++i) {
    EXPECT_EQ(v.at(i), static_cast<double>(static_cast<float>(eps.at(i) - z0.at(i))));
  }
}

TEST(ForwardProcess, AffineInT) {
  PrecisionScope exact(Precision::kFloat64);
  const Tensor z0 = random_tensor({4, 5}, 1), eps = random_tensor({4, 5}, 2);
  const double t1 = 0.2, t2 = 0.7;
  const Tensor a = forward_process(z0, eps, t1).z_t, b = forward_process(z0, eps, t2).z_t;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    EXPECT_NEAR((b.at(i) - a.at(i)) / (t2 - t1), eps.at(i) - z0.at(i), 1e-12);
  }
  EXPECT_THROW(forward_process(z0, eps, 1.5), Error);
  EXPECT_THROW(forward_process(z0, random_tensor({4, 4}, 3), 0.5), Error);
}

TEST(FlowLoss, MatchesMseOracle) {
  PrecisionScope exact(Precision::kFloat64);
  const Tensor p = random_tensor({3, 7}, 5), q = random_tensor({3, 7}, 6);
  double acc = 0;
  for (std::size_t i = 0; i < p.numel(); ++i) acc += (p.at(i) - q.at(i)) * (p.at(i) - q.at(i));
  acc /= static_cast<double>(p.numel());
  EXPECT_NEAR(flow_loss(p, q).item(), acc, 1e-12 * acc);
}

TEST(Euler, AnalyticVelocityRecoversData) {
  const Shape shape{2, 3, 4, 4};
  const Tensor z0 = random_tensor(shape, 42);
  // Exact straight-line velocity through the current point: (z - z0) / t.
  const VelocityField field = [&](const Tensor& z, double t) {
    return scale(sub(z, z0), 1.0 / t);
  };
  std::vector<std::vector<double>> results;
  for (int steps : {1, 5, 20}) {
    const Tensor out = euler_sample(field, shape, steps, 77);
    double err = 0;
    for (std::size_t i = 0; i < out.numel(); ++i) err = std::max(err, std::abs(out.at(i) - z0.at(i)));
    EXPECT_LE(err, 1e-6) << steps << " steps";
    results.push_back(out.to_vector());
  }
  for (std::size_t i = 0; i < results[0].size(); ++i) {
    EXPECT_NEAR(results[0][i], results[2][i], 1e-6);
  }
}

TEST(Euler, RejectsZeroStepsAndBadField) {
  const VelocityField bad = [](const Tensor&, double) { return Tensor::zeros({1}); };
  EXPECT_THROW(euler_sample(bad, {2, 2}, 3, 1), Error);
  EXPECT_THROW(euler_sample(bad, {2, 2}, 0, 1), Error);
}

TEST(Dit, ZeroHeadGivesZeroVelocity) {
  const DitConfig cfg = tiny_dit();
  const DitModel m = make_dit(cfg, 5);
  const Tensor z = random_tensor({2, 6, 2, 3}, 1), c = random_tensor({8, 2, 2, 3}, 2);
  const Tensor v = dit_forward(m, z, 0.4, c);
  EXPECT_EQ(v.shape(), z.shape());
  for (double x : v.to_vector()) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(dit_forward(m, z, 0.4, random_tensor({7, 2, 2, 3}, 2)), Error);
}

TEST(Dit, DeterministicInitAndFingerprint) {
  const DitConfig cfg = tiny_dit();
  const DitModel a = make_dit(cfg, 5), b = make_dit(cfg, 5), c = make_dit(cfg, 6);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  DitModel d = a.clone();
  d.blocks[0].fc1.weight.mutable_data()[0] += 1.0;
  EXPECT_NE(d.fingerprint(), a.fingerprint());
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
}

TEST(Dit, AdapterTargetsResolve) {
  DitConfig cfg = tiny_dit();
  cfg.blocks = 3;
  DitModel m = make_dit(cfg, 1);
  const auto targets = m.adapter_targets();
  EXPECT_EQ(targets.size(), 3u * 3 + 1);
  for (const auto& t : targets) EXPECT_NE(m.find_mapping(t), nullptr) << t;
  EXPECT_EQ(m.find_mapping("blocks.0.qkv.bogus"), nullptr);
}

TEST(Dit, TrainedHeadDependsOnConditioning) {
  const DitConfig cfg = tiny_dit();
  DitModel m = make_dit(cfg, 5);
  for (double& w : m.head.weight.mutable_data()) w = 0.1;
  const Tensor z = random_tensor({1, 6, 2, 2}, 1);
  const Tensor v1 = dit_forward(m, z, 0.5, random_tensor({8, 1, 2, 2}, 2));
  const Tensor v2 = dit_forward(m, z, 0.5, random_tensor({8, 1, 2, 2}, 3));
  EXPECT_NE(v1.to_vector(), v2.to_vector());
}

TEST(Dit, GradientMatchesFiniteDifferences) {
  PrecisionScope exact(Precision::kFloat64);
  const DitConfig cfg = tiny_dit();
  DitModel m = make_dit(cfg, 5);
  Rng rng(8);
  for (double& w : m.head.weight.mutable_data()) w = 0.3 * rng.normal();
  const Tensor z = random_tensor({1, 6, 2, 2}, 1), c = random_tensor({8, 1, 2, 2}, 2);
  const Tensor target = random_tensor({1, 6, 2, 2}, 3);
  // The key third of the qkv bias is softmax-invariant (true gradient 0), so
  // relative error there only measures difference noise.
  std::vector<Tensor> params;
  for (const auto& [name, t] : m.named_parameters()) {
    if (name.find("qkv.bias") == std::string::npos) params.push_back(t);
  }
  const double err = finite_diff_check(
      [&] { return flow_loss(dit_forward(m, z, 0.3, c), target); }, params, 1e-6);
  EXPECT_LT(err, 1e-4);
}

BackboneConfig tiny_backbone() {
  BackboneConfig b;
  b.dit = tiny_dit();
  b.dit.latent_channels = 12;
  b.latent = LatentConfig{1, 2, 2};
  b.steps = 3;
  b.batch = 1;
  b.clip_frames = 1;
  b.clip_size = 4;
  return b;
}

TEST(Backbone, DigestCoversRecipe) {
  const BackboneConfig a = tiny_backbone();
  BackboneConfig b = a;
  EXPECT_EQ(a.digest(), b.digest());
  b.lr *= 2;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(Backbone, SerializationRoundTrip) {
  const DitModel m = make_dit(tiny_dit(), 3);
  const auto bytes = serialize_backbone(m, 1234);
  const DitModel back = deserialize_backbone(bytes, 1234);
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  EXPECT_EQ(back.config, m.config);
}

TEST(Backbone, SerializationErrors) {
  const auto bytes = serialize_backbone(make_dit(tiny_dit(), 3), 1234);
  auto check = [&](std::vector<std::uint8_t> b, ErrorCode code) {
    try {
      deserialize_backbone(b, 1234);
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code);
    }
  };
  auto magic = bytes;
  magic[1] ^= 0xff;
  check(magic, ErrorCode::kBadMagic);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  check(flipped, ErrorCode::kChecksumMismatch);
  try {
    deserialize_backbone(bytes, 99);
    ADD_FAILURE() << "stale digest accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArchitectureMismatch);
  }
}

TEST(Backbone, PretrainIsDeterministicAndCached) {
  const BackboneConfig cfg = tiny_backbone();
  const DitModel a = pretrain_backbone(cfg);
  const DitModel b = pretrain_backbone(cfg);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), make_dit(cfg.dit, splitmix64(cfg.seed ^ 0x646974)).fingerprint());

  const auto path = std::filesystem::temp_directory_path() / "inrvc_backbone_test.bin";
  std::filesystem::remove(path);
  const DitModel c = load_or_pretrain_backbone(cfg, path);
  ASSERT_TRUE(std::filesystem::exists(path));
  const DitModel d = load_or_pretrain_backbone(cfg, path);
  EXPECT_EQ(c.fingerprint(), a.fingerprint());
  EXPECT_EQ(d.fingerprint(), a.fingerprint());
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace inrvc
