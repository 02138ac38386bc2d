// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/nn.hpp"

#include <cmath>
#include <numbers>

#include "ttsa/error.hpp"

namespace ttsa {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : state_(seed) {}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::below(int n) {
  require(n > 0, "invalid-argument", "Rng::below needs a positive bound");
  return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  for (std::uint64_t t : tags) {
    std::uint64_t m = h ^ (t * 0xd6e8feb86659fd93ULL);
    h = splitmix64(m);
  }
  return Rng(h);
}

std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape(), 0.0);
  else grad.fill(0.0);
  if (row_sparse) touched_rows.assign(static_cast<std::size_t>(value.dim(0)), 0);
}

std::vector<std::pair<std::string, Parameter*>> named_parameters(Module& m, const std::string& prefix) {
  std::vector<std::pair<std::string, Parameter*>> out;
  m.visit(prefix, [&out](const std::string& name, Parameter& p) { out.emplace_back(name, &p); });
  return out;
}

std::size_t parameter_count(Module& m) {
  std::size_t n = 0;
  m.visit("", [&n](const std::string&, Parameter& p) { n += p.value.numel(); });
  return n;
}

std::string join_path(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

ag::Var Tape::param(Parameter& p) {
  auto it = leaves_.find(&p);
  if (it != leaves_.end()) return it->second;
  ag::Var v = ag::leaf(p.value, grad_enabled_ && p.requires_grad);
  leaves_.emplace(&p, v);
  order_.push_back(&p);
  return v;
}

void Tape::accumulate() {
  for (Parameter* p : order_) {
    const ag::Var& v = leaves_.at(p);
    if (!v.requires_grad() || v.grad().numel() != p->value.numel()) continue;
    if (p->grad.shape() != p->value.shape()) p->grad = Tensor(p->value.shape(), 0.0);
    const Tensor& g = v.grad();
    for (std::size_t i = 0; i < g.numel(); ++i) p->grad[i] += g[i];
    const auto& rows = v.node()->touched_rows;
    if (p->row_sparse && !rows.empty()) {
      if (p->touched_rows.size() != rows.size()) p->touched_rows.assign(rows.size(), 0);
      for (std::size_t r = 0; r < rows.size(); ++r) p->touched_rows[r] |= rows[r];
    }
  }
}

void init_uniform_fan_in(Parameter& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (double& v : p.value.values()) v = rng.uniform(-bound, bound);
}

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, Rng& rng, int dilation, int groups, int pad, int stride) {
  require(in_channels % groups == 0 && out_channels % groups == 0, "config-invalid", "conv groups must divide channels");
  weight.value = Tensor({out_channels, in_channels / groups, kernel});
  bias.value = Tensor({out_channels});
  const int fan_in = in_channels / groups * kernel;
  init_uniform_fan_in(weight, fan_in, rng);
  init_uniform_fan_in(bias, fan_in, rng);
  options.dilation = dilation;
  options.groups = groups;
  options.stride = stride;
  if (pad < 0) {
    const int total = dilation * (kernel - 1);
    options.pad_left = total / 2;
    options.pad_right = total - total / 2;
  } else {
    options.pad_left = options.pad_right = pad;
  }
}

ag::Var Conv1d::forward(Tape& tape, const ag::Var& x) {
  return ag::conv1d(x, tape.param(weight), tape.param(bias), options);
}

void Conv1d::visit(const std::string& prefix, const ParameterVisitor& fn) {
  fn(join_path(prefix, "weight"), weight);
  fn(join_path(prefix, "bias"), bias);
}

void Conv1d::zero_init() {
  weight.value.fill(0.0);
  bias.value.fill(0.0);
}

ConvTranspose1d::ConvTranspose1d(int in_channels, int out_channels, int kernel, int stride_, int padding_, Rng& rng)
    : stride(stride_), padding(padding_) {
  weight.value = Tensor({in_channels, out_channels, kernel});
  bias.value = Tensor({out_channels});
  init_uniform_fan_in(weight, out_channels * kernel, rng);
  init_uniform_fan_in(bias, out_channels * kernel, rng);
}

ag::Var ConvTranspose1d::forward(Tape& tape, const ag::Var& x) {
  return ag::conv_transpose1d(x, tape.param(weight), tape.param(bias), stride, padding);
}

void ConvTranspose1d::visit(const std::string& prefix, const ParameterVisitor& fn) {
  fn(join_path(prefix, "weight"), weight);
  fn(join_path(prefix, "bias"), bias);
}

Conv2d::Conv2d(int in_channels, int out_channels, int kh, int kw, ag::Conv2dOptions opt, Rng& rng) : options(opt) {
  weight.value = Tensor({out_channels, in_channels, kh, kw});
  bias.value = Tensor({out_channels});
  init_uniform_fan_in(weight, in_channels * kh * kw, rng);
  init_uniform_fan_in(bias, in_channels * kh * kw, rng);
}

ag::Var Conv2d::forward(Tape& tape, const ag::Var& x) {
  return ag::conv2d(x, tape.param(weight), tape.param(bias), options);
}

void Conv2d::visit(const std::string& prefix, const ParameterVisitor& fn) {
  fn(join_path(prefix, "weight"), weight);
  fn(join_path(prefix, "bias"), bias);
}

LayerNorm::LayerNorm(int channels) {
  gamma.value = Tensor({channels}, 1.0);
  beta.value = Tensor({channels}, 0.0);
}

ag::Var LayerNorm::forward(Tape& tape, const ag::Var& x) {
  return ag::layer_norm_channels(x, tape.param(gamma), tape.param(beta));
}

void LayerNorm::visit(const std::string& prefix, const ParameterVisitor& fn) {
  fn(join_path(prefix, "gamma"), gamma);
  fn(join_path(prefix, "beta"), beta);
}

Embedding::Embedding(int rows, int dim, Rng& rng, double stddev) {
  table.value = Tensor({rows, dim});
  for (double& v : table.value.values()) v = stddev * rng.normal();
  table.row_sparse = true;
}

ag::Var Embedding::forward(Tape& tape, std::span<const int> ids) { return ag::embedding(tape.param(table), ids); }

void Embedding::visit(const std::string& prefix, const ParameterVisitor& fn) { fn(join_path(prefix, "table"), table); }

void Embedding::append_mean_rows(int count) {
  const int r = rows(), d = dim();
  require(count >= 0, "invalid-argument", "append_mean_rows with negative count");
  std::vector<double> mean_row(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < d; ++k) mean_row[static_cast<std::size_t>(k)] += table.value.at(i, k) / std::max(r, 1);
  std::vector<double> data = table.value.storage();
  for (int c = 0; c < count; ++c) data.insert(data.end(), mean_row.begin(), mean_row.end());
  table.value = Tensor({r + count, d}, std::move(data));
  table.grad = Tensor();
  table.touched_rows.clear();
}

}  // namespace ttsa
