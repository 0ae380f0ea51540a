// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "inrvc/video.hpp"

namespace inrvc {

/// RGB PSNR over every sample; +inf for identical clips.
double psnr(const VideoTensor& a, const VideoTensor& b);

/// Scales used for a frame of the given size: min(5, floor(log2(min(h, w) / 11)) + 1),
/// i.e. as many as keep the coarsest level at least one 11x11 window.
std::size_t ms_ssim_scales(std::size_t height, std::size_t width);

/// Per-frame, per-channel MS-SSIM (Gaussian 11x11, sigma 1.5, K1 0.01,
/// K2 0.03), averaged. Fewer than 5 scales renormalize the standard weights.
double ms_ssim(const VideoTensor& a, const VideoTensor& b);

struct RdPoint {
  double bpp = 0.0;
  std::map<std::string, double> metrics;
};

struct RdCurve {
  std::vector<RdPoint> points;

  /// Throws unless bpp is positive and strictly increasing.
  void validate() const;
};

/// CSV with header `bpp,<metric>,...`, one row per point.
RdCurve parse_rd_csv(std::string_view text);
std::string format_rd_csv(const RdCurve& curve);

/// Average (test - reference) of the metric over the overlapping
/// log10(bpp) interval, each curve fitted by a polynomial of degree
/// min(3, points - 1).
double bd_delta(const RdCurve& reference, const RdCurve& test, const std::string& metric);

/// Least-squares polynomial, coefficients in increasing degree.
std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y,
                            std::size_t degree);
double polyval(const std::vector<double>& coeffs, double x);

}  // namespace inrvc
