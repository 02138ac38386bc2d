// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "eigen_util.hpp"
#include "ttsa/error.hpp"

namespace ttsa::ag {

using detail::ConstMatMap;
using detail::MatMap;

Tensor& Node::grad_buffer() {
  if (grad.numel() != value.numel() || grad.shape() != value.shape()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

double Var::item() const {
  require(node_ && node_->value.numel() == 1, "shape-mismatch",
          "item() on tensor of shape " + (node_ ? shape_str(node_->value.shape()) : std::string("<null>")));
  return node_->value[0];
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

Var leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Var(std::move(n));
}

Var detach(const Var& v) { return constant(v.value()); }

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (any) {
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (const auto& in : inputs) n->inputs.push_back(in.node());
    n->backward_fn = std::move(backward);
  }
  return Var(std::move(n));
}

void backward(const Var& root) {
  require(root.defined() && root.value().numel() == 1, "shape-mismatch", "backward() needs a scalar root");
  if (!root.requires_grad()) return;
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node* n = stack.back().first;
    std::size_t i = stack.back().second;
    if (i < n->inputs.size()) {
      stack.back().second = i + 1;
      Node* c = n->inputs[i].get();
      if (c && c->requires_grad && seen.insert(c).second) stack.emplace_back(c, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.numel() == n->value.numel()) n->backward_fn(*n);
  }
}

namespace {

void check_same(const Var& a, const Var& b, const char* op) {
  require(a.value().numel() == b.value().numel(), "shape-mismatch",
          std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

// y = f(x) elementwise; dfdx(x, y) gives the local derivative.
template <class F, class D>
Var unary(const Var& x, F f, D dfdx) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = f(xv[i]);
  return make_op(std::move(out), {x}, [dfdx](Node& self) {
    Node& in = input(self, 0);
    Tensor& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      Node& in = input(self, k);
      if (!in.requires_grad) continue;
      Tensor& g = in.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    if (input(self, 0).requires_grad) {
      Tensor& g = input(self, 0).grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }
    if (input(self, 1).requires_grad) {
      Tensor& g = input(self, 1).grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& x = input(self, 0);
    Node& y = input(self, 1);
    if (x.requires_grad) {
      Tensor& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (y.requires_grad) {
      Tensor& g = y.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

Var div(const Var& a, const Var& b) {
  check_same(a, b, "div");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& x = input(self, 0);
    Node& y = input(self, 1);
    if (x.requires_grad) {
      Tensor& g = x.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] / y.value[i];
    }
    if (y.requires_grad) {
      Tensor& g = y.grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i] * self.value[i] / y.value[i];
    }
  });
}

Var scale(const Var& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(const Var& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var relu(const Var& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var tanh(const Var& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double y) { return y * (1.0 - y); });
}

Var exp(const Var& x) {
  return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(const Var& x) {
  return unary(x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var abs(const Var& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& x) {
  return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var clamp_min(const Var& x, double lo) {
  return unary(
      x, [lo](double v) { return v < lo ? lo : v; }, [lo](double v, double) { return v < lo ? 0.0 : 1.0; });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_op(Tensor::scalar(s), {x}, [](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    const double gs = self.grad[0];
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += gs;
  });
}

Var mean(const Var& x) {
  const std::size_t n = x.value().numel();
  require(n > 0, "shape-mismatch", "mean of empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Var mean_over_time(const Var& x) {
  const Tensor& xv = x.value();
  require(xv.rank() >= 2, "shape-mismatch", "mean_over_time needs [C, ...], got " + shape_str(xv.shape()));
  const int c = xv.dim(0);
  const std::size_t inner = xv.numel() / static_cast<std::size_t>(c);
  require(inner > 0, "shape-mismatch", "mean_over_time over zero frames");
  Tensor out({c, 1});
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t j = 0; j < inner; ++j) s += xv[ch * inner + j];
    out[ch] = s / static_cast<double>(inner);
  }
  return make_op(std::move(out), {x}, [c, inner](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (int ch = 0; ch < c; ++ch) {
      const double gc = self.grad[ch] / static_cast<double>(inner);
      for (std::size_t j = 0; j < inner; ++j) g[ch * inner + j] += gc;
    }
  });
}

namespace {

std::size_t channel_inner(const Var& x, const Var& v, const char* op) {
  const Tensor& xv = x.value();
  require(xv.rank() >= 1 && v.value().numel() == static_cast<std::size_t>(xv.dim(0)), "shape-mismatch",
          std::string(op) + ": per-channel vector " + shape_str(v.shape()) + " does not match " +
              shape_str(xv.shape()));
  return xv.numel() / static_cast<std::size_t>(xv.dim(0));
}

}  // namespace

Var add_channel(const Var& x, const Var& v) {
  const std::size_t inner = channel_inner(x, v, "add_channel");
  const int c = x.dim(0);
  Tensor out = x.value();
  for (int ch = 0; ch < c; ++ch) {
    const double b = v.value()[ch];
    double* row = out.data() + ch * inner;
    for (std::size_t j = 0; j < inner; ++j) row[j] += b;
  }
  return make_op(std::move(out), {x, v}, [c, inner](Node& self) {
    if (input(self, 0).requires_grad) {
      Tensor& g = input(self, 0).grad_buffer();
      for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }
    if (input(self, 1).requires_grad) {
      Tensor& g = input(self, 1).grad_buffer();
      for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t j = 0; j < inner; ++j) s += self.grad[ch * inner + j];
        g[ch] += s;
      }
    }
  });
}

Var mul_channel(const Var& x, const Var& v) {
  const std::size_t inner = channel_inner(x, v, "mul_channel");
  const int c = x.dim(0);
  Tensor out = x.value();
  for (int ch = 0; ch < c; ++ch) {
    const double s = v.value()[ch];
    double* row = out.data() + ch * inner;
    for (std::size_t j = 0; j < inner; ++j) row[j] *= s;
  }
  return make_op(std::move(out), {x, v}, [c, inner](Node& self) {
    Node& xn = input(self, 0);
    Node& vn = input(self, 1);
    if (xn.requires_grad) {
      Tensor& g = xn.grad_buffer();
      for (int ch = 0; ch < c; ++ch) {
        const double s = vn.value[ch];
        for (std::size_t j = 0; j < inner; ++j) g[ch * inner + j] += self.grad[ch * inner + j] * s;
      }
    }
    if (vn.requires_grad) {
      Tensor& g = vn.grad_buffer();
      for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t j = 0; j < inner; ++j) s += self.grad[ch * inner + j] * xn.value[ch * inner + j];
        g[ch] += s;
      }
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value();
  out.reshape(std::move(shape));
  return make_op(std::move(out), {x}, [](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
  });
}

Var gather(const Var& x, std::vector<int> index, Shape out_shape) {
  require(shape_numel(out_shape) == index.size(), "shape-mismatch",
          "gather: index size " + std::to_string(index.size()) + " vs shape " + shape_str(out_shape));
  const Tensor& xv = x.value();
  const int n = static_cast<int>(xv.numel());
  Tensor out(std::move(out_shape));
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int k = index[i];
    require(k < n, "shape-mismatch", "gather: index " + std::to_string(k) + " out of range");
    out[i] = k < 0 ? 0.0 : xv[static_cast<std::size_t>(k)];
  }
  return make_op(std::move(out), {x}, [index = std::move(index)](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (std::size_t i = 0; i < index.size(); ++i)
      if (index[i] >= 0) g[static_cast<std::size_t>(index[i])] += self.grad[i];
  });
}

Var slice_time(const Var& x, int begin, int end) {
  const Tensor& xv = x.value();
  require(xv.rank() == 2 && 0 <= begin && begin <= end && end <= xv.dim(1), "shape-mismatch",
          "slice_time [" + std::to_string(begin) + "," + std::to_string(end) + ") of " + shape_str(xv.shape()));
  const int c = xv.dim(0), t = xv.dim(1), w = end - begin;
  Tensor out({c, w});
  for (int ch = 0; ch < c; ++ch)
    std::copy_n(xv.data() + static_cast<std::size_t>(ch) * t + begin, w, out.data() + static_cast<std::size_t>(ch) * w);
  return make_op(std::move(out), {x}, [c, t, w, begin](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (int ch = 0; ch < c; ++ch)
      for (int j = 0; j < w; ++j) g[static_cast<std::size_t>(ch) * t + begin + j] += self.grad[static_cast<std::size_t>(ch) * w + j];
  });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0), "shape-mismatch",
          "matmul " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out({m, n});
  MatMap(out.data(), m, n).noalias() = ConstMatMap(av.data(), m, k) * ConstMatMap(bv.data(), k, n);
  return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& an = input(self, 0);
    Node& bn = input(self, 1);
    ConstMatMap g(self.grad.data(), m, n);
    if (an.requires_grad)
      MatMap(an.grad_buffer().data(), m, k).noalias() += g * ConstMatMap(bn.value.data(), k, n).transpose();
    if (bn.requires_grad)
      MatMap(bn.grad_buffer().data(), k, n).noalias() += ConstMatMap(an.value.data(), m, k).transpose() * g;
  });
}

Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Tensor& xv = x.value();
  require(xv.rank() == 2, "shape-mismatch", "layer_norm_channels needs [C, T], got " + shape_str(xv.shape()));
  const int c = xv.dim(0), t = xv.dim(1);
  require(gamma.value().numel() == static_cast<std::size_t>(c) && beta.value().numel() == static_cast<std::size_t>(c),
          "shape-mismatch", "layer_norm_channels: affine size does not match " + std::to_string(c) + " channels");
  Tensor xhat({c, t});
  std::vector<double> inv_std(static_cast<std::size_t>(t));
  for (int j = 0; j < t; ++j) {
    double mu = 0.0;
    for (int ch = 0; ch < c; ++ch) mu += xv[static_cast<std::size_t>(ch) * t + j];
    mu /= c;
    double var = 0.0;
    for (int ch = 0; ch < c; ++ch) {
      const double d = xv[static_cast<std::size_t>(ch) * t + j] - mu;
      var += d * d;
    }
    var /= c;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(j)] = is;
    for (int ch = 0; ch < c; ++ch) xhat[static_cast<std::size_t>(ch) * t + j] = (xv[static_cast<std::size_t>(ch) * t + j] - mu) * is;
  }
  Tensor out({c, t});
  for (int ch = 0; ch < c; ++ch) {
    const double gm = gamma.value()[ch], bt = beta.value()[ch];
    for (int j = 0; j < t; ++j) {
      const std::size_t i = static_cast<std::size_t>(ch) * t + j;
      out[i] = gm * xhat[i] + bt;
    }
  }
  return make_op(std::move(out), {x, gamma, beta},
                 [c, t, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                   Node& xn = input(self, 0);
                   Node& gn = input(self, 1);
                   Node& bn = input(self, 2);
                   const Tensor& g = self.grad;
                   if (gn.requires_grad) {
                     Tensor& gg = gn.grad_buffer();
                     for (int ch = 0; ch < c; ++ch) {
                       double s = 0.0;
                       for (int j = 0; j < t; ++j) s += g[static_cast<std::size_t>(ch) * t + j] * xhat[static_cast<std::size_t>(ch) * t + j];
                       gg[ch] += s;
                     }
                   }
                   if (bn.requires_grad) {
                     Tensor& gb = bn.grad_buffer();
                     for (int ch = 0; ch < c; ++ch) {
                       double s = 0.0;
                       for (int j = 0; j < t; ++j) s += g[static_cast<std::size_t>(ch) * t + j];
                       gb[ch] += s;
                     }
                   }
                   if (xn.requires_grad) {
                     Tensor& gx = xn.grad_buffer();
                     for (int j = 0; j < t; ++j) {
                       double m1 = 0.0, m2 = 0.0;
                       for (int ch = 0; ch < c; ++ch) {
                         const std::size_t i = static_cast<std::size_t>(ch) * t + j;
                         const double d = g[i] * gn.value[ch];
                         m1 += d;
                         m2 += d * xhat[i];
                       }
                       m1 /= c;
                       m2 /= c;
                       const double is = inv_std[static_cast<std::size_t>(j)];
                       for (int ch = 0; ch < c; ++ch) {
                         const std::size_t i = static_cast<std::size_t>(ch) * t + j;
                         gx[i] += is * (g[i] * gn.value[ch] - m1 - xhat[i] * m2);
                       }
                     }
                   }
                 });
}

Var embedding(const Var& table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  require(tv.rank() == 2, "shape-mismatch", "embedding table must be [V, D], got " + shape_str(tv.shape()));
  const int vocab = tv.dim(0), d = tv.dim(1), n = static_cast<int>(ids.size());
  Tensor out({d, n});
  for (int j = 0; j < n; ++j) {
    const int id = ids[static_cast<std::size_t>(j)];
    require(0 <= id && id < vocab, "invalid-id",
            "embedding id " + std::to_string(id) + " outside [0, " + std::to_string(vocab) + ")");
    for (int k = 0; k < d; ++k) out[static_cast<std::size_t>(k) * n + j] = tv.at(id, k);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return make_op(std::move(out), {table}, [vocab, d, n, idv = std::move(idv)](Node& self) {
    Node& tn = input(self, 0);
    Tensor& g = tn.grad_buffer();
    if (tn.touched_rows.size() != static_cast<std::size_t>(vocab)) tn.touched_rows.assign(static_cast<std::size_t>(vocab), 0);
    for (int j = 0; j < n; ++j) {
      const int id = idv[static_cast<std::size_t>(j)];
      tn.touched_rows[static_cast<std::size_t>(id)] = 1;
      for (int k = 0; k < d; ++k) g.at(id, k) += self.grad[static_cast<std::size_t>(k) * n + j];
    }
  });
}

namespace {

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

Var log_softmax_channels(const Var& x) {
  const Tensor& xv = x.value();
  require(xv.rank() == 2, "shape-mismatch", "log_softmax_channels needs [K, T], got " + shape_str(xv.shape()));
  const int k = xv.dim(0), t = xv.dim(1);
  Tensor out({k, t});
  for (int j = 0; j < t; ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) m = std::max(m, xv.at(c, j));
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(xv.at(c, j) - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < k; ++c) out.at(c, j) = xv.at(c, j) - lse;
  }
  return make_op(std::move(out), {x}, [k, t](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    for (int j = 0; j < t; ++j) {
      double gs = 0.0;
      for (int c = 0; c < k; ++c) gs += self.grad.at(c, j);
      for (int c = 0; c < k; ++c) g.at(c, j) += self.grad.at(c, j) - std::exp(self.value.at(c, j)) * gs;
    }
  });
}

Var cross_entropy_channels(const Var& logits, std::span<const int> targets) {
  const Tensor& xv = logits.value();
  require(xv.rank() == 2 && static_cast<std::size_t>(xv.dim(1)) == targets.size(), "shape-mismatch",
          "cross_entropy: logits " + shape_str(xv.shape()) + " vs " + std::to_string(targets.size()) + " targets");
  const int k = xv.dim(0), t = xv.dim(1);
  require(t > 0, "shape-mismatch", "cross_entropy over zero frames");
  Tensor probs({k, t});
  double loss = 0.0;
  for (int j = 0; j < t; ++j) {
    const int y = targets[static_cast<std::size_t>(j)];
    require(0 <= y && y < k, "invalid-argument",
            "cross_entropy target " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) m = std::max(m, xv.at(c, j));
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(xv.at(c, j) - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < k; ++c) probs.at(c, j) = std::exp(xv.at(c, j) - lse);
    loss += lse - xv.at(y, j);
  }
  std::vector<int> tv(targets.begin(), targets.end());
  return make_op(Tensor::scalar(loss / t), {logits}, [k, t, probs = std::move(probs), tv = std::move(tv)](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    const double s = self.grad[0] / t;
    for (int j = 0; j < t; ++j)
      for (int c = 0; c < k; ++c)
        g.at(c, j) += s * (probs.at(c, j) - (c == tv[static_cast<std::size_t>(j)] ? 1.0 : 0.0));
  });
}

Var ctc_loss(const Var& log_probs, std::span<const int> labels, int blank) {
  const Tensor& lp = log_probs.value();
  require(lp.rank() == 2, "shape-mismatch", "ctc_loss needs [K, T], got " + shape_str(lp.shape()));
  const int k = lp.dim(0), t = lp.dim(1), l = static_cast<int>(labels.size());
  require(0 <= blank && blank < k, "invalid-argument", "ctc blank index outside symbol range");
  int repeats = 0;
  for (int i = 0; i < l; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(0 <= y && y < k && y != blank, "invalid-argument", "ctc label " + std::to_string(y) + " invalid");
    if (i > 0 && y == labels[static_cast<std::size_t>(i - 1)]) ++repeats;
  }
  require(t >= l + repeats && t > 0, "ctc-infeasible",
          "label sequence of length " + std::to_string(l) + " needs at least " + std::to_string(l + repeats) +
              " frames, got " + std::to_string(t));
  const int s_len = 2 * l + 1;
  std::vector<int> ext(static_cast<std::size_t>(s_len), blank);
  for (int i = 0; i < l; ++i) ext[static_cast<std::size_t>(2 * i + 1)] = labels[static_cast<std::size_t>(i)];
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  auto idx = [s_len](int tt, int s) { return static_cast<std::size_t>(tt) * s_len + s; };
  std::vector<double> alpha(static_cast<std::size_t>(t) * s_len, kNegInf);
  std::vector<double> beta(static_cast<std::size_t>(t) * s_len, kNegInf);
  alpha[idx(0, 0)] = lp.at(blank, 0);
  if (s_len > 1) alpha[idx(0, 1)] = lp.at(ext[1], 0);
  for (int tt = 1; tt < t; ++tt) {
    for (int s = 0; s < s_len; ++s) {
      double a = alpha[idx(tt - 1, s)];
      if (s >= 1) a = log_sum_exp(a, alpha[idx(tt - 1, s - 1)]);
      if (s >= 2 && ext[static_cast<std::size_t>(s)] != blank && ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)])
        a = log_sum_exp(a, alpha[idx(tt - 1, s - 2)]);
      alpha[idx(tt, s)] = a == kNegInf ? kNegInf : a + lp.at(ext[static_cast<std::size_t>(s)], tt);
    }
  }
  beta[idx(t - 1, s_len - 1)] = lp.at(ext[static_cast<std::size_t>(s_len - 1)], t - 1);
  if (s_len > 1) beta[idx(t - 1, s_len - 2)] = lp.at(ext[static_cast<std::size_t>(s_len - 2)], t - 1);
  for (int tt = t - 2; tt >= 0; --tt) {
    for (int s = s_len - 1; s >= 0; --s) {
      double b = beta[idx(tt + 1, s)];
      if (s + 1 < s_len) b = log_sum_exp(b, beta[idx(tt + 1, s + 1)]);
      if (s + 2 < s_len && ext[static_cast<std::size_t>(s + 2)] != blank &&
          ext[static_cast<std::size_t>(s + 2)] != ext[static_cast<std::size_t>(s)])
        b = log_sum_exp(b, beta[idx(tt + 1, s + 2)]);
      beta[idx(tt, s)] = b == kNegInf ? kNegInf : b + lp.at(ext[static_cast<std::size_t>(s)], tt);
    }
  }
  double log_p = alpha[idx(t - 1, s_len - 1)];
  if (s_len > 1) log_p = log_sum_exp(log_p, alpha[idx(t - 1, s_len - 2)]);
  require(std::isfinite(log_p), "ctc-infeasible", "ctc: no valid alignment has nonzero probability");

  // d(-log p)/d lp[c, tt] = -sum_{s: ext[s] = c} exp(alpha + beta - lp - log p).
  Tensor occupancy({k, t});
  for (int tt = 0; tt < t; ++tt)
    for (int s = 0; s < s_len; ++s) {
      const double ab = alpha[idx(tt, s)] + beta[idx(tt, s)];
      if (ab == kNegInf) continue;
      const int c = ext[static_cast<std::size_t>(s)];
      occupancy.at(c, tt) += std::exp(ab - lp.at(c, tt) - log_p);
    }
  return make_op(Tensor::scalar(-log_p), {log_probs}, [occupancy = std::move(occupancy)](Node& self) {
    Tensor& g = input(self, 0).grad_buffer();
    const double s = self.grad[0];
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] -= s * occupancy[i];
  });
}

}  // namespace ttsa::ag
