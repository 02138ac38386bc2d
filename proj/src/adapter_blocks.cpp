// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/adapter_blocks.hpp"

#include "ttsa/error.hpp"

namespace ttsa {

std::size_t BottleneckAdapterSpec::parameter_count() const {
  const auto d = static_cast<std::size_t>(input_dim), b = static_cast<std::size_t>(bottleneck_dim);
  return 2 * d * b + b + d;
}

std::size_t ConvAdapterSpec::parameter_count() const {
  const auto c = static_cast<std::size_t>(channels);
  const auto r = static_cast<std::size_t>(channels / se_ratio);
  const auto k0 = static_cast<std::size_t>(kernel_sizes[0]), k1 = static_cast<std::size_t>(kernel_sizes[1]),
             k2 = static_cast<std::size_t>(kernel_sizes[2]);
  std::size_t n = (c * c * k0 + c) + (c * k1 + c) + (c * c * k2 + c);
  if (layer_norm) n += 4 * c;
  n += (r * c + r) + (c * r + c);
  return n;
}

std::size_t adapter_parameter_count(const AdapterSpec& spec) {
  return std::visit([](const auto& s) { return s.parameter_count(); }, spec);
}

int adapter_channels(const AdapterSpec& spec) {
  if (const auto* b = std::get_if<BottleneckAdapterSpec>(&spec)) return b->input_dim;
  return std::get<ConvAdapterSpec>(spec).channels;
}

BottleneckAdapter::BottleneckAdapter(const BottleneckAdapterSpec& spec, Rng& rng) : spec_(spec) {
  require(spec.bottleneck_dim >= 1 && spec.input_dim >= 1, "config-invalid", "bottleneck dims must be >= 1");
  w_down.value = Tensor({spec.bottleneck_dim, spec.input_dim});
  b_down.value = Tensor({spec.bottleneck_dim});
  w_up.value = Tensor({spec.input_dim, spec.bottleneck_dim});
  b_up.value = Tensor({spec.input_dim});
  init_uniform_fan_in(w_down, spec.input_dim, rng);
}

ag::Var BottleneckAdapter::forward(Tape& tape, const ag::Var& h) {
  require(h.value().rank() == 2 && h.dim(0) == spec_.input_dim, "shape-mismatch",
          "bottleneck adapter expects [" + std::to_string(spec_.input_dim) + ", T], got " + shape_str(h.shape()));
  ag::Var z = ag::relu(ag::add_channel(ag::matmul(tape.param(w_down), h), tape.param(b_down)));
  return ag::add(ag::add_channel(ag::matmul(tape.param(w_up), z), tape.param(b_up)), h);
}

void BottleneckAdapter::visit(const std::string& prefix, const ParameterVisitor& fn) {
  fn(join_path(prefix, "w_down"), w_down);
  fn(join_path(prefix, "b_down"), b_down);
  fn(join_path(prefix, "w_up"), w_up);
  fn(join_path(prefix, "b_up"), b_up);
}

ConvAdapter::ConvAdapter(const ConvAdapterSpec& spec, Rng& rng) : spec_(spec) {
  const int c = spec.channels;
  require(c >= 1 && spec.se_ratio >= 1 && c / spec.se_ratio >= 1, "config-invalid",
          "conv adapter needs channels >= se_ratio >= 1");
  for (int k : spec.kernel_sizes) require(k >= 1 && k % 2 == 1, "config-invalid", "conv adapter kernels must be odd");
  conv_in = Conv1d(c, c, spec.kernel_sizes[0], rng);
  depthwise = Conv1d(c, c, spec.kernel_sizes[1], rng, 1, c);
  conv_out = Conv1d(c, c, spec.kernel_sizes[2], rng);
  conv_out.zero_init();
  if (spec.layer_norm) {
    norm_in = LayerNorm(c);
    norm_out = LayerNorm(c);
  }
  const int r = c / spec.se_ratio;
  se_w1.value = Tensor({r, c});
  se_b1.value = Tensor({r});
  se_w2.value = Tensor({c, r});
  se_b2.value = Tensor({c});
  init_uniform_fan_in(se_w1, c, rng);
  init_uniform_fan_in(se_w2, r, rng);
}

ag::Var ConvAdapter::forward(Tape& tape, const ag::Var& h) {
  require(h.value().rank() == 2 && h.dim(0) == spec_.channels, "shape-mismatch",
          "conv adapter expects [" + std::to_string(spec_.channels) + ", T], got " + shape_str(h.shape()));
  ag::Var u = conv_in.forward(tape, h);
  if (spec_.layer_norm) u = norm_in.forward(tape, u);
  u = ag::relu(u);
  u = ag::relu(depthwise.forward(tape, u));
  u = conv_out.forward(tape, u);
  if (spec_.layer_norm) u = norm_out.forward(tape, u);
  // Squeeze-and-excitation gate over channels.
  ag::Var s = ag::mean_over_time(u);
  ag::Var z = ag::relu(ag::add_channel(ag::matmul(tape.param(se_w1), s), tape.param(se_b1)));
  ag::Var g = ag::sigmoid(ag::add_channel(ag::matmul(tape.param(se_w2), z), tape.param(se_b2)));
  return ag::add(ag::mul_channel(u, g), h);
}

void ConvAdapter::visit(const std::string& prefix, const ParameterVisitor& fn) {
  conv_in.visit(join_path(prefix, "conv_in"), fn);
  if (spec_.layer_norm) norm_in.visit(join_path(prefix, "norm_in"), fn);
  depthwise.visit(join_path(prefix, "depthwise"), fn);
  conv_out.visit(join_path(prefix, "conv_out"), fn);
  if (spec_.layer_norm) norm_out.visit(join_path(prefix, "norm_out"), fn);
  fn(join_path(prefix, "se.w1"), se_w1);
  fn(join_path(prefix, "se.b1"), se_b1);
  fn(join_path(prefix, "se.w2"), se_w2);
  fn(join_path(prefix, "se.b2"), se_b2);
}

std::unique_ptr<Adapter> make_adapter(const AdapterSpec& spec, Rng& rng) {
  if (const auto* b = std::get_if<BottleneckAdapterSpec>(&spec)) return std::make_unique<BottleneckAdapter>(*b, rng);
  return std::make_unique<ConvAdapter>(std::get<ConvAdapterSpec>(spec), rng);
}

void AdapterSlot::attach(std::unique_ptr<Adapter> a) {
  require(!adapter_, "invalid-argument", "an adapter is already attached here");
  adapter_ = std::move(a);
}

void AdapterSlot::visit(const std::string& host_prefix, const ParameterVisitor& fn) const {
  if (adapter_) adapter_->visit(join_path(host_prefix, "adapter"), fn);
}

}  // namespace ttsa
