// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>

#include "inrvc/tensor.hpp"

namespace inrvc {

namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

Tensor make_op(Shape shape, std::vector<double> data, std::initializer_list<const Tensor*> inputs,
               Backward backward) {
  auto node = std::make_shared<Node>();
  const Precision p = current_precision();
  for (double& v : data) v = round_to_storage(v, p);
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs_grad = false;
  for (const Tensor* in : inputs) needs_grad = needs_grad || in->requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Tensor* in : inputs) node->parents.push_back(in->node());
    node->backward = std::move(backward);
  }
  return Tensor::wrap(std::move(node));
}

Tensor make_op_n(Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
                 Backward backward) {
  auto node = std::make_shared<Node>();
  const Precision p = current_precision();
  for (double& v : data) v = round_to_storage(v, p);
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs_grad = false;
  for (const Tensor& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    node->is_leaf = false;
    for (const Tensor& in : inputs) node->parents.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Tensor::wrap(std::move(node));
}

void check_defined(const Tensor& t, const char* op) {
  if (!t.defined()) fail(ErrorCode::kContractViolation, std::string(op) + ": undefined tensor");
}

// ---- broadcasting ----------------------------------------------------------

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      fail(ErrorCode::kShapeMismatch,
           std::string(op) + ": cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// For each flat index of `out`, the flat index into a tensor of shape `in`.
std::vector<std::size_t> broadcast_map(const Shape& in, const Shape& out) {
  const std::size_t rank = out.size();
  const std::size_t offset = rank - in.size();
  std::vector<std::size_t> in_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = rank; i-- > offset;) {
    const std::size_t d = in[i - offset];
    in_stride[i] = d == 1 ? 0 : stride;
    stride *= d;
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t idx = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    map[flat] = idx;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++counter[ax];
      idx += in_stride[ax];
      if (counter[ax] < out[ax]) break;
      idx -= in_stride[ax] * counter[ax];
      counter[ax] = 0;
    }
  }
  return map;
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* name) {
  check_defined(a, name);
  check_defined(b, name);
  const Shape out_shape = broadcast_shape(a.shape(), b.shape(), name);
  const std::size_t n = shape_numel(out_shape);
  const bool same_a = a.shape() == out_shape;
  const bool same_b = b.shape() == out_shape;
  auto ia = std::make_shared<std::vector<std::size_t>>();
  auto ib = std::make_shared<std::vector<std::size_t>>();
  if (!same_a) *ia = broadcast_map(a.shape(), out_shape);
  if (!same_b) *ib = broadcast_map(b.shape(), out_shape);
  auto index_a = [ia, same_a](std::size_t i) { return same_a ? i : (*ia)[i]; };
  auto index_b = [ib, same_b](std::size_t i) { return same_b ? i : (*ib)[i]; };

  const auto& ad = a.data();
  const auto& bd = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ad[index_a(i)];
    const double y = bd[index_b(i)];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = x + y; break;
      case BinaryKind::kSub: out[i] = x - y; break;
      case BinaryKind::kMul: out[i] = x * y; break;
    }
  }
  return make_op(out_shape, std::move(out), {&a, &b}, [=](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& g = self.grad;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double d = kind == BinaryKind::kMul ? pb.data[index_b(i)] : 1.0;
        ga[index_a(i)] += g[i] * d;
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        double d = 1.0;
        if (kind == BinaryKind::kSub) d = -1.0;
        if (kind == BinaryKind::kMul) d = pa.data[index_a(i)];
        gb[index_b(i)] += g[i] * d;
      }
    }
  });
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, const char* name, Fwd fwd, Deriv deriv) {
  check_defined(x, name);
  const auto& xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = fwd(xd[i]);
  return make_op(x.shape(), std::move(out), {&x}, [deriv](Node& self) {
    Node& px = *self.parents[0];
    auto& gx = px.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += self.grad[i] * deriv(px.data[i], self.data[i]);
    }
  });
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(
      a, "add_scalar", [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_defined(a, "matmul");
  check_defined(b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    fail(ErrorCode::kShapeMismatch,
         "matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const auto& ad = a.data();
  const auto& bd = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      const double* brow = bd.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return make_op({m, n}, std::move(out), {&a, &b}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double* g = self.grad.data();
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* brow = pb.data.data() + p * n;
          const double* grow = g + i * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa.data[i * k + p];
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_defined(a, "transpose");
  require(a.rank() == 2, ErrorCode::kShapeMismatch, "transpose: expects a 2-D tensor");
  return permute(a, {1, 0});
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_defined(a, "reshape");
  if (shape_numel(shape) != a.numel()) {
    fail(ErrorCode::kShapeMismatch,
         "reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape) + " changes element count");
  }
  return make_op(std::move(shape), a.to_vector(), {&a}, [](Node& self) {
    Node& px = *self.parents[0];
    auto& gx = px.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
  check_defined(a, "permute");
  const std::size_t rank = a.rank();
  require(axes.size() == rank, ErrorCode::kShapeMismatch, "permute: axis count != rank");
  std::vector<bool> seen(rank, false);
  for (std::size_t ax : axes) {
    require(ax < rank && !seen[ax], ErrorCode::kContractViolation, "permute: invalid axes");
    seen[ax] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = a.dim(axes[i]);
  const auto in_strides = strides_of(a.shape());
  const std::size_t n = a.numel();
  // source flat index for each destination flat index
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t idx = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    (*src)[flat] = idx;
    for (std::size_t ax = rank; ax-- > 0;) {
      ++counter[ax];
      idx += in_strides[axes[ax]];
      if (counter[ax] < out_shape[ax]) break;
      idx -= in_strides[axes[ax]] * counter[ax];
      counter[ax] = 0;
    }
  }
  const auto& ad = a.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ad[(*src)[i]];
  return make_op(out_shape, std::move(out), {&a}, [src](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < src->size(); ++i) gx[(*src)[i]] += self.grad[i];
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t padding) {
  check_defined(x, "conv2d");
  check_defined(weight, "conv2d");
  if (x.rank() != 4 || weight.rank() != 4 || weight.dim(1) != x.dim(1) ||
      weight.dim(2) != weight.dim(3)) {
    fail(ErrorCode::kShapeMismatch, "conv2d: input " + shape_str(x.shape()) + " vs weight " +
                                        shape_str(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    fail(ErrorCode::kShapeMismatch, "conv2d: bias shape " + shape_str(bias.shape()));
  }
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = weight.dim(0), k = weight.dim(2);
  require(h + 2 * padding >= k && w + 2 * padding >= k, ErrorCode::kShapeMismatch,
          "conv2d: kernel larger than padded input");
  const std::size_t oh = h + 2 * padding - k + 1, ow = w + 2 * padding - k + 1;
  const long pad = static_cast<long>(padding);

  // Output-row range [lo, hi) whose tap (ky) lands inside the input.
  auto valid_range = [pad](std::size_t tap, std::size_t in_size, std::size_t out_size) {
    const long off = static_cast<long>(tap) - pad;
    const long lo = std::max<long>(0, -off);
    const long hi = std::min<long>(static_cast<long>(out_size), static_cast<long>(in_size) - off);
    return std::pair<long, long>{lo, std::max(lo, hi)};
  };

  const auto& xd = x.data();
  const auto& wd = weight.data();
  std::vector<double> out(batch * cout * oh * ow, 0.0);
  for (std::size_t nb = 0; nb < batch; ++nb) {
    for (std::size_t co = 0; co < cout; ++co) {
      double* plane = out.data() + (nb * cout + co) * oh * ow;
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* in = xd.data() + (nb * cin + ci) * h * w;
        for (std::size_t ky = 0; ky < k; ++ky) {
          const auto [y0, y1] = valid_range(ky, h, oh);
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto [x0, x1] = valid_range(kx, w, ow);
            const double wv = wd[((co * cin + ci) * k + ky) * k + kx];
            const long dy = static_cast<long>(ky) - pad, dx = static_cast<long>(kx) - pad;
            for (long oy = y0; oy < y1; ++oy) {
              const double* src = in + (oy + dy) * static_cast<long>(w) + dx;
              double* dst = plane + oy * static_cast<long>(ow);
              for (long ox = x0; ox < x1; ++ox) dst[ox] += wv * src[ox];
            }
          }
        }
      }
      if (has_bias) {
        const double bv = bias.data()[co];
        for (std::size_t i = 0; i < oh * ow; ++i) plane[i] += bv;
      }
    }
  }

  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_op_n({batch, cout, oh, ow}, std::move(out), inputs, [=](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    const double* g = self.grad.data();
    double* gx = px.requires_grad ? px.grad_buffer().data() : nullptr;
    double* gw = pw.requires_grad ? pw.grad_buffer().data() : nullptr;
    for (std::size_t nb = 0; nb < batch; ++nb) {
      for (std::size_t co = 0; co < cout; ++co) {
        const double* gplane = g + (nb * cout + co) * oh * ow;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const std::size_t in_off = (nb * cin + ci) * h * w;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const auto [y0, y1] = valid_range(ky, h, oh);
            for (std::size_t kx = 0; kx < k; ++kx) {
              const auto [x0, x1] = valid_range(kx, w, ow);
              const std::size_t widx = ((co * cin + ci) * k + ky) * k + kx;
              const double wv = pw.data[widx];
              const long dy = static_cast<long>(ky) - pad, dx = static_cast<long>(kx) - pad;
              double acc = 0.0;
              for (long oy = y0; oy < y1; ++oy) {
                const long row = (oy + dy) * static_cast<long>(w) + dx;
                const double* grow = gplane + oy * static_cast<long>(ow);
                const double* xrow = px.data.data() + in_off + row;
                if (gx) {
                  double* gxrow = gx + in_off + row;
                  for (long ox = x0; ox < x1; ++ox) gxrow[ox] += wv * grow[ox];
                }
                if (gw) {
                  for (long ox = x0; ox < x1; ++ox) acc += grow[ox] * xrow[ox];
                }
              }
              if (gw) gw[widx] += acc;
            }
          }
        }
      }
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      auto& gb = self.parents[2]->grad_buffer();
      for (std::size_t nb = 0; nb < batch; ++nb) {
        for (std::size_t co = 0; co < cout; ++co) {
          const double* gplane = g + (nb * cout + co) * oh * ow;
          double acc = 0.0;
          for (std::size_t i = 0; i < oh * ow; ++i) acc += gplane[i];
          gb[co] += acc;
        }
      }
    }
  });
}

Tensor upsample_nearest2x(const Tensor& x) {
  check_defined(x, "upsample_nearest2x");
  require(x.rank() >= 2, ErrorCode::kShapeMismatch, "upsample_nearest2x: rank < 2");
  Shape out_shape = x.shape();
  const std::size_t h = out_shape[x.rank() - 2], w = out_shape[x.rank() - 1];
  out_shape[x.rank() - 2] = 2 * h;
  out_shape[x.rank() - 1] = 2 * w;
  const std::size_t planes = x.numel() / (h * w);
  const auto& xd = x.data();
  std::vector<double> out(planes * 4 * h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < 2 * h; ++y) {
      for (std::size_t c = 0; c < 2 * w; ++c) {
        out[(p * 2 * h + y) * 2 * w + c] = xd[(p * h + y / 2) * w + c / 2];
      }
    }
  }
  return make_op(std::move(out_shape), std::move(out), {&x}, [planes, h, w](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t y = 0; y < 2 * h; ++y) {
        for (std::size_t c = 0; c < 2 * w; ++c) {
          gx[(p * h + y / 2) * w + c / 2] += self.grad[(p * 2 * h + y) * 2 * w + c];
        }
      }
    }
  });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      x, "gelu", [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        return cdf + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double v, double) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 - s);
      });
}

Tensor sin(const Tensor& x) {
  return unary(
      x, "sin", [](double v) { return std::sin(v); }, [](double v, double) { return std::cos(v); });
}

Tensor softmax_lastdim(const Tensor& x) {
  check_defined(x, "softmax_lastdim");
  require(x.rank() >= 1, ErrorCode::kShapeMismatch, "softmax_lastdim: rank 0");
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const auto& xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * d;
    double* o = out.data() + r * d;
    double mx = in[0];
    for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, in[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < d; ++j) o[j] /= total;
  }
  return make_op(x.shape(), std::move(out), {&x}, [rows, d](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * d;
      const double* g = self.grad.data() + r * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, double eps) {
  check_defined(x, "layer_norm");
  require(x.rank() >= 1, ErrorCode::kShapeMismatch, "layer_norm: rank 0");
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const auto& xd = x.data();
  std::vector<double> out(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  auto normed = std::make_shared<std::vector<double>>(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      (*normed)[r * d + j] = (in[j] - mu) * is;
      out[r * d + j] = (*normed)[r * d + j];
    }
  }
  return make_op(x.shape(), std::move(out), {&x}, [rows, d, inv_std, normed](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* g = self.grad.data() + r * d;
      const double* xh = normed->data() + r * d;
      double gmean = 0.0, gxmean = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        gmean += g[j];
        gxmean += g[j] * xh[j];
      }
      gmean *= inv_d;
      gxmean *= inv_d;
      for (std::size_t j = 0; j < d; ++j) {
        gx[r * d + j] += (*inv_std)[r] * (g[j] - gmean - xh[j] * gxmean);
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  check_defined(x, "sum");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return make_op({}, {acc}, {&x}, [](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (double& v : gx) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  check_defined(x, "mean");
  require(x.numel() > 0, ErrorCode::kContractViolation, "mean of an empty tensor");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const double n = static_cast<double>(x.numel());
  return make_op({}, {acc / n}, {&x}, [n](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (double& v : gx) v += self.grad[0] / n;
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_defined(a, "mse");
  check_defined(b, "mse");
  if (a.shape() != b.shape()) {
    fail(ErrorCode::kShapeMismatch,
         "mse: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) + " differ");
  }
  require(a.numel() > 0, ErrorCode::kContractViolation, "mse of empty tensors");
  const auto& ad = a.data();
  const auto& bd = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < ad.size(); ++i) acc += (ad[i] - bd[i]) * (ad[i] - bd[i]);
  const double n = static_cast<double>(ad.size());
  return make_op({}, {acc / n}, {&a, &b}, [n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double s = 2.0 * self.grad[0] / n;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * (pa.data[i] - pb.data[i]);
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= s * (pa.data[i] - pb.data[i]);
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), ErrorCode::kContractViolation, "concat: no inputs");
  for (const Tensor& p : parts) check_defined(p, "concat");
  const Shape& first = parts[0].shape();
  require(axis < first.size(), ErrorCode::kOutOfRange, "concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    bool ok = p.rank() == first.size();
    for (std::size_t i = 0; ok && i < first.size(); ++i) ok = i == axis || p.dim(i) == first[i];
    if (!ok) {
      fail(ErrorCode::kShapeMismatch, "concat: " + shape_str(p.shape()) + " incompatible with " +
                                          shape_str(first) + " on axis " + std::to_string(axis));
    }
    out_shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  const std::size_t out_row = out_shape[axis] * inner;
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t row = p.dim(axis) * inner;
    const auto& pd = p.data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pd.data() + o * row, row, out.data() + o * out_row + offset);
    }
    offset += row;
  }
  return make_op_n(out_shape, std::move(out), parts, [=](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& gp = p.grad_buffer();
      const std::size_t row = gp.size() / outer;
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = self.grad.data() + o * out_row + offsets[k];
        for (std::size_t j = 0; j < row; ++j) gp[o * row + j] += src[j];
      }
    }
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  check_defined(x, "slice");
  require(axis < x.rank(), ErrorCode::kOutOfRange, "slice: axis out of range");
  if (begin > end || end > x.dim(axis)) {
    fail(ErrorCode::kOutOfRange, "slice: [" + std::to_string(begin) + ", " + std::to_string(end) +
                                     ") outside axis of size " + std::to_string(x.dim(axis)));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t in_row = x.dim(axis) * inner;
  const std::size_t out_row = (end - begin) * inner;
  const std::size_t start = begin * inner;
  const auto& xd = x.data();
  std::vector<double> out(outer * out_row);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(xd.data() + o * in_row + start, out_row, out.data() + o * out_row);
  }
  return make_op(std::move(out_shape), std::move(out), {&x}, [=](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < out_row; ++j) {
        gx[o * in_row + start + j] += self.grad[o * out_row + j];
      }
    }
  });
}

Tensor straight_through(const Tensor& x, const Tensor& replacement) {
  check_defined(x, "straight_through");
  check_defined(replacement, "straight_through");
  if (x.shape() != replacement.shape()) {
    fail(ErrorCode::kShapeMismatch, "straight_through: replacement shape differs");
  }
  return make_op(x.shape(), replacement.to_vector(), {&x}, [](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

}  // namespace inrvc
