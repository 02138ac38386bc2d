// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal reverse-mode automatic differentiation over Tensor values.
//
// A Var is a handle to a node in a dynamically built graph. Nodes that do not
// depend on any gradient-requiring leaf drop their inputs and backward
// closure at construction, so inference builds no graph.

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ttsa/tensor.hpp"

namespace ttsa::ag {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;
  // Rows of an embedding table that received gradient (set by `embedding`).
  std::vector<char> touched_rows;

  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(int i) const { return node_->value.dim(i); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad);
Var detach(const Var& v);

// Builds an op node. `backward` receives the op node; it reads `self.grad`
// and accumulates into `self.inputs[i]->grad_buffer()` for inputs that
// require grad. Inputs are stored in the order given.
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

// Seeds d(root)/d(root) = 1 and propagates through the graph. root must hold
// a single element.
void backward(const Var& root);

// ---- elementwise ---------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var abs(const Var& x);
Var square(const Var& x);
Var clamp_min(const Var& x, double lo);

// ---- reductions ----------------------------------------------------------
Var sum(const Var& x);
Var mean(const Var& x);
// Mean over all trailing axes of a [C, ...] tensor, giving [C, 1].
Var mean_over_time(const Var& x);

// ---- channel broadcasting ------------------------------------------------
// x: [C, ...]; v holds C elements (shape [C] or [C, 1]).
Var add_channel(const Var& x, const Var& v);
Var mul_channel(const Var& x, const Var& v);

// ---- shape ---------------------------------------------------------------
Var reshape(const Var& x, Shape shape);
// out.flat[i] = index[i] < 0 ? 0 : x.flat[index[i]]; backward scatters.
Var gather(const Var& x, std::vector<int> index, Shape out_shape);
// Columns [begin, end) of a [C, T] tensor.
Var slice_time(const Var& x, int begin, int end);

// ---- linear algebra and convolution --------------------------------------
Var matmul(const Var& a, const Var& b);

struct Conv1dOptions {
  int stride = 1;
  int dilation = 1;
  int groups = 1;
  int pad_left = 0;
  int pad_right = 0;
};
// x: [Cin, T]; weight: [Cout, Cin / groups, K]; bias: [Cout] or undefined.
Var conv1d(const Var& x, const Var& weight, const Var& bias, const Conv1dOptions& opt);

// x: [Cin, T]; weight: [Cin, Cout, K]. Output length (T-1)*stride - 2*padding + K.
Var conv_transpose1d(const Var& x, const Var& weight, const Var& bias, int stride, int padding);

struct Conv2dOptions {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};
// x: [Cin, H, W]; weight: [Cout, Cin, KH, KW].
Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dOptions& opt);

// Normalizes every time step of x: [C, T] across its C channels.
Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

// table: [V, D]; returns [D, ids.size()].
Var embedding(const Var& table, std::span<const int> ids);

// ---- classification ------------------------------------------------------
// Normalizes each column of x: [K, T] to log-probabilities.
Var log_softmax_channels(const Var& x);
// Mean over columns of -log softmax(logits[:, t])[targets[t]].
Var cross_entropy_channels(const Var& logits, std::span<const int> targets);
// Negative log-likelihood of `labels` under CTC with log-probabilities
// [K, T] (rows are symbols, `blank` is one of them). Throws if the label
// sequence cannot fit in T frames.
Var ctc_loss(const Var& log_probs, std::span<const int> labels, int blank);

// ---- spectral ------------------------------------------------------------
// frames: [N, F] real columns; returns |rfft| of each column, [N/2 + 1, F],
// with the squared magnitude floored at `power_floor`.
Var rfft_magnitude(const Var& frames, double power_floor = 1e-7);

}  // namespace ttsa::ag
