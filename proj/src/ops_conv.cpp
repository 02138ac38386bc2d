// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Convolutions lowered to GEMM through im2col / col2im. Column buffers are
// rebuilt in the backward pass instead of being kept alive with the graph.

#include <algorithm>

#include "eigen_util.hpp"
#include "ttsa/autograd.hpp"
#include "ttsa/error.hpp"

namespace ttsa::ag {

using detail::ConstMatMap;
using detail::MatMap;
using detail::RowMat;

namespace {

struct Conv1dGeom {
  int cin, t, cout, k, t_out, cin_g, cout_g;
  Conv1dOptions opt;
};

void im2col_1d(const double* x, const Conv1dGeom& g, int group, double* cols) {
  for (int ci = 0; ci < g.cin_g; ++ci) {
    const double* xr = x + static_cast<std::size_t>(group * g.cin_g + ci) * g.t;
    for (int kk = 0; kk < g.k; ++kk) {
      double* cr = cols + (static_cast<std::size_t>(ci) * g.k + kk) * g.t_out;
      const int off = kk * g.opt.dilation - g.opt.pad_left;
      for (int to = 0; to < g.t_out; ++to) {
        const int ti = to * g.opt.stride + off;
        cr[to] = (ti >= 0 && ti < g.t) ? xr[ti] : 0.0;
      }
    }
  }
}

void col2im_1d(const double* cols, const Conv1dGeom& g, int group, double* gx) {
  for (int ci = 0; ci < g.cin_g; ++ci) {
    double* xr = gx + static_cast<std::size_t>(group * g.cin_g + ci) * g.t;
    for (int kk = 0; kk < g.k; ++kk) {
      const double* cr = cols + (static_cast<std::size_t>(ci) * g.k + kk) * g.t_out;
      const int off = kk * g.opt.dilation - g.opt.pad_left;
      for (int to = 0; to < g.t_out; ++to) {
        const int ti = to * g.opt.stride + off;
        if (ti >= 0 && ti < g.t) xr[ti] += cr[to];
      }
    }
  }
}

bool is_pointwise(const Conv1dGeom& g) {
  return g.k == 1 && g.opt.stride == 1 && g.opt.pad_left == 0 && g.opt.pad_right == 0 && g.opt.groups == 1;
}

bool is_depthwise(const Conv1dGeom& g) { return g.opt.groups == g.cin && g.cin_g == 1 && g.cout_g == 1; }

void add_bias_rows(Tensor& out, const Var& bias) {
  if (!bias.defined()) return;
  const int c = out.dim(0);
  const std::size_t inner = out.numel() / static_cast<std::size_t>(c);
  for (int ch = 0; ch < c; ++ch) {
    const double b = bias.value()[ch];
    double* r = out.data() + ch * inner;
    for (std::size_t j = 0; j < inner; ++j) r[j] += b;
  }
}

void bias_grad(const Tensor& g, Node& bias) {
  Tensor& gb = bias.grad_buffer();
  const int c = g.dim(0);
  const std::size_t inner = g.numel() / static_cast<std::size_t>(c);
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t j = 0; j < inner; ++j) s += g[ch * inner + j];
    gb[ch] += s;
  }
}

}  // namespace

Var conv1d(const Var& x, const Var& weight, const Var& bias, const Conv1dOptions& opt) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require(xv.rank() == 2 && wv.rank() == 3, "shape-mismatch",
          "conv1d input " + shape_str(xv.shape()) + " weight " + shape_str(wv.shape()));
  Conv1dGeom g{xv.dim(0), xv.dim(1), wv.dim(0), wv.dim(2), 0, 0, 0, opt};
  require(opt.groups >= 1 && g.cin % opt.groups == 0 && g.cout % opt.groups == 0, "shape-mismatch",
          "conv1d groups do not divide channels");
  g.cin_g = g.cin / opt.groups;
  g.cout_g = g.cout / opt.groups;
  require(wv.dim(1) == g.cin_g, "shape-mismatch",
          "conv1d weight " + shape_str(wv.shape()) + " expects " + std::to_string(wv.dim(1) * opt.groups) +
              " input channels, got " + std::to_string(g.cin));
  require(!bias.defined() || bias.value().numel() == static_cast<std::size_t>(g.cout), "shape-mismatch",
          "conv1d bias size");
  const int span = opt.dilation * (g.k - 1) + 1;
  const int padded = g.t + opt.pad_left + opt.pad_right;
  require(padded >= span, "shape-mismatch",
          "conv1d input of length " + std::to_string(g.t) + " shorter than receptive span " + std::to_string(span));
  g.t_out = (padded - span) / opt.stride + 1;

  Tensor out({g.cout, g.t_out});
  if (is_depthwise(g)) {
    for (int c = 0; c < g.cin; ++c) {
      const double* xr = xv.data() + static_cast<std::size_t>(c) * g.t;
      const double* w = wv.data() + static_cast<std::size_t>(c) * g.k;
      double* o = out.data() + static_cast<std::size_t>(c) * g.t_out;
      for (int to = 0; to < g.t_out; ++to) {
        double s = 0.0;
        const int base = to * opt.stride - opt.pad_left;
        for (int kk = 0; kk < g.k; ++kk) {
          const int ti = base + kk * opt.dilation;
          if (ti >= 0 && ti < g.t) s += w[kk] * xr[ti];
        }
        o[to] = s;
      }
    }
  } else if (is_pointwise(g)) {
    MatMap(out.data(), g.cout, g.t_out).noalias() =
        ConstMatMap(wv.data(), g.cout, g.cin) * ConstMatMap(xv.data(), g.cin, g.t);
  } else {
    RowMat cols(g.cin_g * g.k, g.t_out);
    for (int gi = 0; gi < opt.groups; ++gi) {
      im2col_1d(xv.data(), g, gi, cols.data());
      MatMap(out.data() + static_cast<std::size_t>(gi) * g.cout_g * g.t_out, g.cout_g, g.t_out).noalias() =
          ConstMatMap(wv.data() + static_cast<std::size_t>(gi) * g.cout_g * g.cin_g * g.k, g.cout_g, g.cin_g * g.k) *
          cols;
    }
  }
  add_bias_rows(out, bias);

  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_op(std::move(out), std::move(inputs), [g](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    const Tensor& gout = self.grad;
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) bias_grad(gout, *self.inputs[2]);
    const Tensor& xv = xn.value;
    const Tensor& wv = wn.value;
    if (is_depthwise(g)) {
      Tensor* gx = xn.requires_grad ? &xn.grad_buffer() : nullptr;
      Tensor* gw = wn.requires_grad ? &wn.grad_buffer() : nullptr;
      for (int c = 0; c < g.cin; ++c) {
        const double* xr = xv.data() + static_cast<std::size_t>(c) * g.t;
        const double* w = wv.data() + static_cast<std::size_t>(c) * g.k;
        const double* go = gout.data() + static_cast<std::size_t>(c) * g.t_out;
        for (int to = 0; to < g.t_out; ++to) {
          const int base = to * g.opt.stride - g.opt.pad_left;
          for (int kk = 0; kk < g.k; ++kk) {
            const int ti = base + kk * g.opt.dilation;
            if (ti < 0 || ti >= g.t) continue;
            if (gx) (*gx)[static_cast<std::size_t>(c) * g.t + ti] += w[kk] * go[to];
            if (gw) (*gw)[static_cast<std::size_t>(c) * g.k + kk] += xr[ti] * go[to];
          }
        }
      }
      return;
    }
    if (is_pointwise(g)) {
      ConstMatMap go(gout.data(), g.cout, g.t_out);
      if (wn.requires_grad)
        MatMap(wn.grad_buffer().data(), g.cout, g.cin).noalias() += go * ConstMatMap(xv.data(), g.cin, g.t).transpose();
      if (xn.requires_grad)
        MatMap(xn.grad_buffer().data(), g.cin, g.t).noalias() += ConstMatMap(wv.data(), g.cout, g.cin).transpose() * go;
      return;
    }
    RowMat cols(g.cin_g * g.k, g.t_out);
    RowMat gcols(g.cin_g * g.k, g.t_out);
    for (int gi = 0; gi < g.opt.groups; ++gi) {
      ConstMatMap go(gout.data() + static_cast<std::size_t>(gi) * g.cout_g * g.t_out, g.cout_g, g.t_out);
      const std::size_t woff = static_cast<std::size_t>(gi) * g.cout_g * g.cin_g * g.k;
      if (wn.requires_grad) {
        im2col_1d(xv.data(), g, gi, cols.data());
        MatMap(wn.grad_buffer().data() + woff, g.cout_g, g.cin_g * g.k).noalias() += go * cols.transpose();
      }
      if (xn.requires_grad) {
        gcols.noalias() = ConstMatMap(wv.data() + woff, g.cout_g, g.cin_g * g.k).transpose() * go;
        col2im_1d(gcols.data(), g, gi, xn.grad_buffer().data());
      }
    }
  });
}

Var conv_transpose1d(const Var& x, const Var& weight, const Var& bias, int stride, int padding) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require(xv.rank() == 2 && wv.rank() == 3 && wv.dim(0) == xv.dim(0), "shape-mismatch",
          "conv_transpose1d input " + shape_str(xv.shape()) + " weight " + shape_str(wv.shape()));
  const int cin = xv.dim(0), t = xv.dim(1), cout = wv.dim(1), k = wv.dim(2);
  const int len = (t - 1) * stride - 2 * padding + k;
  require(len > 0, "shape-mismatch", "conv_transpose1d produces empty output");
  require(!bias.defined() || bias.value().numel() == static_cast<std::size_t>(cout), "shape-mismatch",
          "conv_transpose1d bias size");
  RowMat cols = ConstMatMap(wv.data(), cin, cout * k).transpose() * ConstMatMap(xv.data(), cin, t);
  Tensor out({cout, len});
  for (int co = 0; co < cout; ++co)
    for (int kk = 0; kk < k; ++kk) {
      const double* cr = cols.data() + (static_cast<std::size_t>(co) * k + kk) * t;
      double* o = out.data() + static_cast<std::size_t>(co) * len;
      for (int ti = 0; ti < t; ++ti) {
        const int p = ti * stride + kk - padding;
        if (p >= 0 && p < len) o[p] += cr[ti];
      }
    }
  add_bias_rows(out, bias);
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_op(std::move(out), std::move(inputs), [cin, t, cout, k, len, stride, padding](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) bias_grad(self.grad, *self.inputs[2]);
    RowMat gcols(cout * k, t);
    for (int co = 0; co < cout; ++co)
      for (int kk = 0; kk < k; ++kk) {
        double* gr = gcols.data() + (static_cast<std::size_t>(co) * k + kk) * t;
        const double* go = self.grad.data() + static_cast<std::size_t>(co) * len;
        for (int ti = 0; ti < t; ++ti) {
          const int p = ti * stride + kk - padding;
          gr[ti] = (p >= 0 && p < len) ? go[p] : 0.0;
        }
      }
    if (xn.requires_grad)
      MatMap(xn.grad_buffer().data(), cin, t).noalias() += ConstMatMap(wn.value.data(), cin, cout * k) * gcols;
    if (wn.requires_grad)
      MatMap(wn.grad_buffer().data(), cin, cout * k).noalias() +=
          ConstMatMap(xn.value.data(), cin, t) * gcols.transpose();
  });
}

namespace {

struct Conv2dGeom {
  int cin, h, w, cout, kh, kw, oh, ow;
  Conv2dOptions opt;
};

void im2col_2d(const double* x, const Conv2dGeom& g, double* cols) {
  const std::size_t n = static_cast<std::size_t>(g.oh) * g.ow;
  for (int ci = 0; ci < g.cin; ++ci)
    for (int a = 0; a < g.kh; ++a)
      for (int b = 0; b < g.kw; ++b) {
        double* cr = cols + ((static_cast<std::size_t>(ci) * g.kh + a) * g.kw + b) * n;
        for (int i = 0; i < g.oh; ++i) {
          const int hi = i * g.opt.stride_h + a - g.opt.pad_h;
          for (int j = 0; j < g.ow; ++j) {
            const int wi = j * g.opt.stride_w + b - g.opt.pad_w;
            cr[static_cast<std::size_t>(i) * g.ow + j] =
                (hi >= 0 && hi < g.h && wi >= 0 && wi < g.w) ? x[(static_cast<std::size_t>(ci) * g.h + hi) * g.w + wi]
                                                             : 0.0;
          }
        }
      }
}

void col2im_2d(const double* cols, const Conv2dGeom& g, double* gx) {
  const std::size_t n = static_cast<std::size_t>(g.oh) * g.ow;
  for (int ci = 0; ci < g.cin; ++ci)
    for (int a = 0; a < g.kh; ++a)
      for (int b = 0; b < g.kw; ++b) {
        const double* cr = cols + ((static_cast<std::size_t>(ci) * g.kh + a) * g.kw + b) * n;
        for (int i = 0; i < g.oh; ++i) {
          const int hi = i * g.opt.stride_h + a - g.opt.pad_h;
          if (hi < 0 || hi >= g.h) continue;
          for (int j = 0; j < g.ow; ++j) {
            const int wi = j * g.opt.stride_w + b - g.opt.pad_w;
            if (wi >= 0 && wi < g.w) gx[(static_cast<std::size_t>(ci) * g.h + hi) * g.w + wi] += cr[static_cast<std::size_t>(i) * g.ow + j];
          }
        }
      }
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dOptions& opt) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require(xv.rank() == 3 && wv.rank() == 4 && wv.dim(1) == xv.dim(0), "shape-mismatch",
          "conv2d input " + shape_str(xv.shape()) + " weight " + shape_str(wv.shape()));
  Conv2dGeom g{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0), wv.dim(2), wv.dim(3), 0, 0, opt};
  require(g.h + 2 * opt.pad_h >= g.kh && g.w + 2 * opt.pad_w >= g.kw, "shape-mismatch",
          "conv2d input " + shape_str(xv.shape()) + " smaller than kernel");
  g.oh = (g.h + 2 * opt.pad_h - g.kh) / opt.stride_h + 1;
  g.ow = (g.w + 2 * opt.pad_w - g.kw) / opt.stride_w + 1;
  require(!bias.defined() || bias.value().numel() == static_cast<std::size_t>(g.cout), "shape-mismatch",
          "conv2d bias size");
  const int rows = g.cin * g.kh * g.kw;
  const int n = g.oh * g.ow;
  RowMat cols(rows, n);
  im2col_2d(xv.data(), g, cols.data());
  Tensor out({g.cout, g.oh, g.ow});
  MatMap(out.data(), g.cout, n).noalias() = ConstMatMap(wv.data(), g.cout, rows) * cols;
  add_bias_rows(out, bias);
  std::vector<Var> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_op(std::move(out), std::move(inputs), [g, rows, n](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) bias_grad(self.grad, *self.inputs[2]);
    ConstMatMap go(self.grad.data(), g.cout, n);
    if (wn.requires_grad) {
      RowMat cols(rows, n);
      im2col_2d(xn.value.data(), g, cols.data());
      MatMap(wn.grad_buffer().data(), g.cout, rows).noalias() += go * cols.transpose();
    }
    if (xn.requires_grad) {
      RowMat gcols = ConstMatMap(wn.value.data(), g.cout, rows).transpose() * go;
      col2im_2d(gcols.data(), g, xn.grad_buffer().data());
    }
  });
}

}  // namespace ttsa::ag
