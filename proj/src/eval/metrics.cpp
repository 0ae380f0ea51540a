// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "inrvc/error.hpp"

namespace inrvc {

namespace {

void check_same(const VideoTensor& a, const VideoTensor& b, const char* what) {
  if (!a.same_shape(b) || a.pixels.size() != b.pixels.size()) {
    fail(ErrorCode::kShapeMismatch,
         std::string(what) + ": shapes differ (" + std::to_string(a.frames) + "x" +
             std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
             std::to_string(b.frames) + "x" + std::to_string(b.height) + "x" +
             std::to_string(b.width) + ")");
  }
}

constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  double at(std::size_t y, std::size_t x) const { return v[y * w + x]; }
};

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& x : g) x /= total;
  return g;
}

// Separable 'valid' Gaussian filter.
Plane filter(const Plane& p) {
  static const auto g = gaussian_window();
  Plane rows{p.h, p.w - kWindow + 1, {}};
  rows.v.assign(rows.h * rows.w, 0.0);
  for (std::size_t y = 0; y < rows.h; ++y) {
    for (std::size_t x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<std::size_t>(k)] * p.at(y, x + static_cast<std::size_t>(k));
      rows.v[y * rows.w + x] = s;
    }
  }
  Plane out{p.h - kWindow + 1, rows.w, {}};
  out.v.assign(out.h * out.w, 0.0);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[static_cast<std::size_t>(k)] * rows.at(y + static_cast<std::size_t>(k), x);
      out.v[y * out.w + x] = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.h, a.w, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Plane downsample(const Plane& p) {
  Plane out{p.h / 2, p.w / 2, {}};
  out.v.resize(out.h * out.w);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      out.v[y * out.w + x] = 0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) +
                                     p.at(2 * y + 1, 2 * x) + p.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

// Mean luminance term and mean contrast-structure term at one scale.
std::pair<double, double> ssim_terms(const Plane& a, const Plane& b) {
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const Plane mu_a = filter(a), mu_b = filter(b);
  const Plane aa = filter(product(a, a)), bb = filter(product(b, b)), ab = filter(product(a, b));
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = aa.v[i] - ma * ma, vb = bb.v[i] - mb * mb, cov = ab.v[i] - ma * mb;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    const double l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    ssim_sum += l * cs;
    cs_sum += cs;
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {ssim_sum / n, cs_sum / n};
}

double ms_ssim_plane(Plane a, Plane b, std::size_t scales) {
  double weight_total = 0.0;
  for (std::size_t j = 0; j < scales; ++j) weight_total += kScaleWeights[j];
  double value = 1.0;
  for (std::size_t j = 0; j < scales; ++j) {
    const auto [ssim, cs] = ssim_terms(a, b);
    const double term = j + 1 == scales ? ssim : cs;
    value *= std::pow(std::max(term, 0.0), kScaleWeights[j] / weight_total);
    if (j + 1 < scales) {
      a = downsample(a);
      b = downsample(b);
    }
  }
  return value;
}

}  // namespace

double psnr(const VideoTensor& a, const VideoTensor& b) {
  check_same(a, b, "psnr");
  require(!a.pixels.empty(), ErrorCode::kOutOfRange, "psnr: empty clip");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::size_t ms_ssim_scales(std::size_t height, std::size_t width) {
  const std::size_t m = std::min(height, width);
  if (m < static_cast<std::size_t>(kWindow)) {
    fail(ErrorCode::kOutOfRange, "ms_ssim: frames must be at least 11x11");
  }
  std::size_t scales = 1;
  while (scales < 5 && (m >> scales) >= static_cast<std::size_t>(kWindow)) ++scales;
  return scales;
}

double ms_ssim(const VideoTensor& a, const VideoTensor& b) {
  check_same(a, b, "ms_ssim");
  require(a.frames > 0, ErrorCode::kOutOfRange, "ms_ssim: empty clip");
  const std::size_t scales = ms_ssim_scales(a.height, a.width);
  double total = 0.0;
  for (std::size_t t = 0; t < a.frames; ++t) {
    for (std::size_t c = 0; c < 3; ++c) {
      Plane pa{a.height, a.width, std::vector<double>(a.height * a.width)};
      Plane pb = pa;
      for (std::size_t y = 0; y < a.height; ++y) {
        for (std::size_t x = 0; x < a.width; ++x) {
          pa.v[y * a.width + x] = a.at(t, y, x, c);
          pb.v[y * a.width + x] = b.at(t, y, x, c);
        }
      }
      total += ms_ssim_plane(std::move(pa), std::move(pb), scales);
    }
  }
  return total / static_cast<double>(3 * a.frames);
}

void RdCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].bpp > 0.0)) fail(ErrorCode::kOutOfRange, "RD curve: bpp must be > 0");
    if (i > 0 && !(points[i].bpp > points[i - 1].bpp)) {
      fail(ErrorCode::kOutOfRange, "RD curve: bpp must be strictly increasing");
    }
  }
}

RdCurve parse_rd_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };
  if (!std::getline(in, line)) fail(ErrorCode::kUnsupportedFormat, "RD CSV: missing header");
  const auto header = split(line);
  if (header.empty() || header[0] != "bpp") {
    fail(ErrorCode::kUnsupportedFormat, "RD CSV: first column must be 'bpp'");
  }
  RdCurve curve;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      fail(ErrorCode::kUnsupportedFormat, "RD CSV: row " + std::to_string(row) + " has " +
                                              std::to_string(cells.size()) + " cells");
    }
    RdPoint p;
    try {
      p.bpp = std::stod(cells[0]);
      for (std::size_t i = 1; i < cells.size(); ++i) p.metrics[header[i]] = std::stod(cells[i]);
    } catch (const std::logic_error&) {
      fail(ErrorCode::kUnsupportedFormat, "RD CSV: bad number on row " + std::to_string(row));
    }
    curve.points.push_back(std::move(p));
  }
  curve.validate();
  return curve;
}

std::string format_rd_csv(const RdCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "bpp";
  std::vector<std::string> keys;
  if (!curve.points.empty()) {
    for (const auto& [k, v] : curve.points[0].metrics) keys.push_back(k);
  }
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  for (const RdPoint& p : curve.points) {
    out << p.bpp;
    for (const auto& k : keys) out << ',' << p.metrics.at(k);
    out << '\n';
  }
  return out.str();
}

std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y,
                            std::size_t degree) {
  require(x.size() == y.size() && x.size() > degree, ErrorCode::kOutOfRange,
          "polyfit: need more points than the degree");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(degree + 1));
  Eigen::VectorXd b(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    double p = 1.0;
    for (std::size_t d = 0; d <= degree; ++d) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = p;
      p *= x[i];
    }
    b(static_cast<Eigen::Index>(i)) = y[i];
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return {c.data(), c.data() + c.size()};
}

double polyval(const std::vector<double>& coeffs, double x) {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * x + coeffs[i];
  return v;
}

double bd_delta(const RdCurve& reference, const RdCurve& test, const std::string& metric) {
  reference.validate();
  test.validate();
  require(reference.points.size() >= 2 && test.points.size() >= 2, ErrorCode::kOutOfRange,
          "bd_delta: each curve needs at least 2 points");
  auto fit = [&metric](const RdCurve& c) {
    std::vector<double> x, y;
    for (const RdPoint& p : c.points) {
      const auto it = p.metrics.find(metric);
      if (it == p.metrics.end()) fail(ErrorCode::kInvalidConfig, "bd_delta: no metric '" + metric + "'");
      x.push_back(std::log10(p.bpp));
      y.push_back(it->second);
    }
    return polyfit(x, y, std::min<std::size_t>(3, c.points.size() - 1));
  };
  const double lo = std::max(std::log10(reference.points.front().bpp),
                             std::log10(test.points.front().bpp));
  const double hi = std::min(std::log10(reference.points.back().bpp),
                             std::log10(test.points.back().bpp));
  if (!(hi > lo)) fail(ErrorCode::kOutOfRange, "bd_delta: curves have no rate overlap");
  const std::vector<double> pr = fit(reference), pt = fit(test);
  std::vector<double> diff(std::max(pr.size(), pt.size()), 0.0);
  for (std::size_t i = 0; i < pt.size(); ++i) diff[i] += pt[i];
  for (std::size_t i = 0; i < pr.size(); ++i) diff[i] -= pr[i];
  std::vector<double> integral(diff.size() + 1, 0.0);
  for (std::size_t i = 0; i < diff.size(); ++i) integral[i + 1] = diff[i] / static_cast<double>(i + 1);
  return (polyval(integral, hi) - polyval(integral, lo)) / (hi - lo);
}

}  // namespace inrvc
