// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "inrvc/latent.hpp"
#include "inrvc/metrics.hpp"
#include "inrvc/rng.hpp"
#include "inrvc/video.hpp"

namespace inrvc {
namespace {

VideoTensor random_video(std::size_t t, std::size_t h, std::size_t w, std::uint64_t seed) {
  VideoTensor v(t, h, w);
  Rng rng(seed);
  for (auto& p : v.pixels) p = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
  return v;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kContractViolation;
}

TEST(Rvid, RoundTrip) {
  const VideoTensor v = random_video(3, 5, 7, 11);
  const auto bytes = encode_rvid(v);
  EXPECT_EQ(bytes.size(), 11u + 3 * 5 * 7 * 3);
  EXPECT_EQ(decode_rvid(bytes), v);
  EXPECT_EQ(encode_rvid(decode_rvid(bytes)), bytes);
}

TEST(Rvid, Errors) {
  auto bytes = encode_rvid(random_video(2, 4, 4, 3));
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { decode_rvid(truncated); }), ErrorCode::kTruncated);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { decode_rvid(bad); }), ErrorCode::kBadMagic);
  auto gray = bytes;
  gray[10] = 1;
  EXPECT_EQ(code_of([&] { decode_rvid(gray); }), ErrorCode::kUnsupportedFormat);
}

TEST(Synth, DeterministicPerSeed) {
  for (auto kind : {SynthKind::kMovingGradient, SynthKind::kBouncingRect, SynthKind::kNoiseTexture}) {
    EXPECT_EQ(synth_video(kind, 4, 16, 16, 9), synth_video(kind, 4, 16, 16, 9));
  }
  EXPECT_NE(synth_video(SynthKind::kNoiseTexture, 2, 8, 8, 1),
            synth_video(SynthKind::kNoiseTexture, 2, 8, 8, 2));
}

TEST(Synth, MovingGradientMovesBetweenFrames) {
  const VideoTensor v = synth_video(SynthKind::kMovingGradient, 2, 32, 32, 7);
  EXPECT_NE(v.frames_range(0, 1).pixels, v.frames_range(1, 2).pixels);
  const VideoTensor one = synth_video(SynthKind::kMovingGradient, 1, 32, 32, 7);
  EXPECT_EQ(one.frames, 1u);
  EXPECT_EQ(one, v.frames_range(0, 1));
}

TEST(Synth, BouncingRectChangesLocally) {
  const VideoTensor v = synth_video(SynthKind::kBouncingRect, 2, 32, 32, 5);
  std::size_t changed = 0;
  for (std::size_t y = 0; y < 32; ++y) {
    for (std::size_t x = 0; x < 32; ++x) {
      bool diff = false;
      for (std::size_t c = 0; c < 3; ++c) diff = diff || v.at(0, y, x, c) != v.at(1, y, x, c);
      changed += diff;
    }
  }
  EXPECT_GT(changed, 0u);
  EXPECT_LT(changed, 32u * 32u / 2);
}

TEST(Synth, UnknownKindAndZeroDims) {
  EXPECT_EQ(code_of([] { parse_synth_kind("plaid"); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(parse_synth_kind("moving-gradient"), SynthKind::kMovingGradient);
  EXPECT_EQ(code_of([] { synth_video(SynthKind::kNoiseTexture, 0, 4, 4, 1); }),
            ErrorCode::kOutOfRange);
}

TEST(Latent, BijectionOnPixelLattice) {
  const VideoTensor v = random_video(4, 16, 16, 21);
  for (LatentConfig cfg : {LatentConfig{}, LatentConfig{2, 2, 4}}) {
    const Tensor z = latent_encode(v, cfg);
    EXPECT_EQ(z.shape(), (Shape{4 / cfg.temporal, cfg.channels(), 16 / cfg.height, 16 / cfg.width}));
    const VideoTensor back = latent_decode(z, cfg);
    EXPECT_EQ(back, v);
    EXPECT_TRUE(std::isinf(psnr(v, back)));
  }
}

TEST(Latent, ChannelLayout) {
  const VideoTensor v = random_video(2, 8, 8, 4);
  const LatentConfig cfg{2, 4, 4};
  const Tensor z = latent_encode(v, cfg);
  const std::size_t H = 2, W = 2;
  for (std::size_t dt = 0; dt < 2; ++dt)
    for (std::size_t dy = 0; dy < 4; ++dy)
      for (std::size_t dx = 0; dx < 4; ++dx)
        for (std::size_t c = 0; c < 3; ++c) {
          const std::size_t ch = ((dt * 4 + dy) * 4 + dx) * 3 + c;
          const double expect = v.at(dt, 4 + dy, dx, c) / 127.5 - 1.0;
          EXPECT_NEAR(z.at((ch * H + 1) * W + 0), expect, 1e-6);
        }
}

TEST(Latent, IndivisibleDimsRejected) {
  const VideoTensor v(1, 6, 8);
  EXPECT_EQ(code_of([&] { latent_encode(v, LatentConfig{}); }), ErrorCode::kShapeMismatch);
}

TEST(Psnr, Examples) {
  const VideoTensor a = random_video(2, 4, 4, 1);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  EXPECT_DOUBLE_EQ(psnr(VideoTensor(1, 2, 2, 0), VideoTensor(1, 2, 2, 255)), 0.0);
  // Gray 2x2 frames, one pixel 16 levels off in every channel: MSE 256*3/12 = 64.
  VideoTensor g(1, 2, 2, 100), h = g;
  for (std::size_t c = 0; c < 3; ++c) h.at(0, 1, 1, c) = 116;
  EXPECT_NEAR(psnr(g, h), 10.0 * std::log10(65025.0 / 64.0), 1e-12);
  EXPECT_NEAR(psnr(g, h), 30.07, 0.01);
}

TEST(Psnr, SymmetricAndShapeChecked) {
  const VideoTensor a = random_video(2, 4, 4, 1), b = random_video(2, 4, 4, 2);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  EXPECT_EQ(code_of([&] { psnr(a, VideoTensor(2, 4, 5)); }), ErrorCode::kShapeMismatch);
}

TEST(MsSsim, ScaleCount) {
  EXPECT_EQ(ms_ssim_scales(176, 176), 5u);
  EXPECT_EQ(ms_ssim_scales(1080, 1920), 5u);
  EXPECT_EQ(ms_ssim_scales(32, 32), 2u);
  EXPECT_EQ(ms_ssim_scales(21, 40), 1u);
  EXPECT_EQ(ms_ssim_scales(22, 40), 2u);
  EXPECT_THROW(ms_ssim_scales(10, 64), Error);
}

TEST(MsSsim, IdentityAndSymmetry) {
  const VideoTensor a = random_video(2, 32, 32, 3), b = random_video(2, 32, 32, 4);
  EXPECT_DOUBLE_EQ(ms_ssim(a, a), 1.0);
  EXPECT_DOUBLE_EQ(ms_ssim(a, b), ms_ssim(b, a));
  const VideoTensor big = random_video(1, 176, 176, 5);
  EXPECT_NEAR(ms_ssim(big, big), 1.0, 1e-12);
}

TEST(MsSsim, OffsetDecreases) {
  const VideoTensor c(1, 32, 32, 100);
  const double s1 = ms_ssim(c, VideoTensor(1, 32, 32, 104));
  const double s2 = ms_ssim(c, VideoTensor(1, 32, 32, 120));
  EXPECT_LT(s1, 1.0);
  EXPECT_LT(s2, s1);
}

TEST(MsSsim, ZeroVsNoiseIsLow) {
  EXPECT_LT(ms_ssim(VideoTensor(1, 64, 64, 0), random_video(1, 64, 64, 8)), 0.2);
}

RdCurve curve(std::vector<double> bpp, std::vector<double> psnr) {
  RdCurve c;
  for (std::size_t i = 0; i < bpp.size(); ++i) c.points.push_back({bpp[i], {{"psnr", psnr[i]}}});
  return c;
}

// Independent fit: normal equations solved by Gaussian elimination in long
// double, then a 10^4-interval trapezoid over the fitted difference.
std::vector<long double> oracle_fit(const RdCurve& c) {
  const std::size_t n = c.points.size(), d = std::min<std::size_t>(3, n - 1) + 1;
  std::vector<std::vector<long double>> a(d, std::vector<long double>(d + 1, 0));
  for (const auto& p : c.points) {
    const long double x = std::log10(static_cast<long double>(p.bpp));
    const long double y = p.metrics.at("psnr");
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a[i][j] += std::pow(x, static_cast<long double>(i + j));
      a[i][d] += y * std::pow(x, static_cast<long double>(i));
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    std::size_t piv = i;
    for (std::size_t r = i + 1; r < d; ++r)
      if (std::fabs(a[r][i]) > std::fabs(a[piv][i])) piv = r;
    std::swap(a[i], a[piv]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == i) continue;
      const long double f = a[r][i] / a[i][i];
      for (std::size_t k = i; k <= d; ++k) a[r][k] -= f * a[i][k];
    }
  }
  std::vector<long double> coef(d);
  for (std::size_t i = 0; i < d; ++i) coef[i] = a[i][d] / a[i][i];
  return coef;
}

long double oracle_eval(const std::vector<long double>& c, long double x) {
  long double v = 0, p = 1;
  for (long double k : c) {
    v += k * p;
    p *= x;
  }
  return v;
}

double oracle_bd(const RdCurve& ref, const RdCurve& test) {
  const auto fr = oracle_fit(ref), ft = oracle_fit(test);
  const long double lo = std::max(std::log10(static_cast<long double>(ref.points.front().bpp)),
                                  std::log10(static_cast<long double>(test.points.front().bpp)));
  const long double hi = std::min(std::log10(static_cast<long double>(ref.points.back().bpp)),
                                  std::log10(static_cast<long double>(test.points.back().bpp)));
  const int n = 10000;
  const long double h = (hi - lo) / n;
  long double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const long double x = lo + h * i;
    const long double d = oracle_eval(ft, x) - oracle_eval(fr, x);
    acc += (i == 0 || i == n) ? d / 2 : d;
  }
  return static_cast<double>(acc * h / (hi - lo));
}

TEST(BdDelta, IdenticalIsZero) {
  const RdCurve c = curve({0.01, 0.02, 0.04, 0.08}, {28.1, 30.4, 32.2, 33.9});
  EXPECT_EQ(bd_delta(c, c, "psnr"), 0.0);
}

TEST(BdDelta, ConstantShift) {
  const RdCurve c = curve({0.01, 0.02, 0.04, 0.08}, {28.1, 30.4, 32.2, 33.9});
  const RdCurve up = curve({0.01, 0.02, 0.04, 0.08}, {29.1, 31.4, 33.2, 34.9});
  EXPECT_NEAR(bd_delta(c, up, "psnr"), 1.0, 1e-9);
  EXPECT_NEAR(bd_delta(up, c, "psnr"), -1.0, 1e-9);
  // Shifting both curves by the same constant leaves the delta unchanged.
  const RdCurve other = curve({0.015, 0.03, 0.05, 0.1}, {27.0, 29.9, 31.0, 33.0});
  const RdCurve other_up = curve({0.015, 0.03, 0.05, 0.1}, {32.0, 34.9, 36.0, 38.0});
  const RdCurve c_up = curve({0.01, 0.02, 0.04, 0.08}, {33.1, 35.4, 37.2, 38.9});
  EXPECT_NEAR(bd_delta(c, other, "psnr"), bd_delta(c_up, other_up, "psnr"), 1e-9);
}

TEST(BdDelta, MatchesQuadratureOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto make = [&] {
      std::vector<double> bpp, q;
      double b = 0.005 + 0.01 * rng.uniform(), v = 25 + 5 * rng.uniform();
      for (int i = 0; i < 4; ++i) {
        bpp.push_back(b);
        q.push_back(v);
        b *= 1.4 + rng.uniform();
        v += 0.5 + 2 * rng.uniform();
      }
      return curve(bpp, q);
    };
    const RdCurve a = make(), b = make();
    EXPECT_NEAR(bd_delta(a, b, "psnr"), oracle_bd(a, b), 1e-6) << "trial " << trial;
  }
}

TEST(BdDelta, FewerPointsUseLowerDegree) {
  const RdCurve a = curve({0.01, 0.04}, {30.0, 34.0});
  const RdCurve b = curve({0.02, 0.08}, {31.0, 35.0});
  EXPECT_NEAR(bd_delta(a, b, "psnr"), oracle_bd(a, b), 1e-9);
}

TEST(BdDelta, NoOverlapIsAnError) {
  const RdCurve a = curve({0.01, 0.02}, {30.0, 31.0});
  const RdCurve b = curve({0.04, 0.08}, {31.0, 32.0});
  EXPECT_EQ(code_of([&] { bd_delta(a, b, "psnr"); }), ErrorCode::kOutOfRange);
}

TEST(RdCsv, RoundTripAndValidation) {
  const RdCurve c = parse_rd_csv("bpp,psnr,msssim\n0.01,30.5,0.91\n0.02,32.25,0.94\n");
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_DOUBLE_EQ(c.points[1].metrics.at("msssim"), 0.94);
  const RdCurve again = parse_rd_csv(format_rd_csv(c));
  ASSERT_EQ(again.points.size(), 2u);
  EXPECT_EQ(again.points[0].bpp, c.points[0].bpp);
  EXPECT_EQ(again.points[1].metrics, c.points[1].metrics);
  EXPECT_THROW(parse_rd_csv("bpp,psnr\n0.02,30\n0.01,31\n"), Error);
  EXPECT_THROW(parse_rd_csv("bpp,psnr\n0,30\n0.01,31\n"), Error);
}

TEST(Polyfit, ExactCubic) {
  const std::vector<double> x = {-1, 0, 1, 2, 3};
  std::vector<double> y;
  for (double v : x) y.push_back(1 - 2 * v + 0.5 * v * v * v);
  const auto c = polyfit(x, y, 3);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_NEAR(c[0], 1, 1e-10);
  EXPECT_NEAR(c[1], -2, 1e-10);
  EXPECT_NEAR(c[2], 0, 1e-10);
  EXPECT_NEAR(c[3], 0.5, 1e-10);
  EXPECT_NEAR(polyval(c, 2.5), 1 - 5 + 0.5 * 15.625, 1e-10);
}

}  // namespace
}  // namespace inrvc
