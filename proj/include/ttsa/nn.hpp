// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Parameters, the per-forward Tape that turns them into graph leaves, and the
// handful of layers the acoustic model, vocoder and discriminators share.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ttsa/autograd.hpp"

namespace ttsa {

// Deterministic generator with platform-independent uniform/normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  int below(int n);  // [0, n)

  // Stream derived from a seed and an arbitrary tag sequence.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

 private:
  std::uint64_t state_;
};

// FNV-1a; stable across platforms and runs.
std::uint64_t stable_hash(const std::string& s);

struct Parameter {
  Tensor value;
  Tensor grad;
  bool requires_grad = true;
  // Embedding tables: the optimizer updates only rows that received
  // gradient in the current step.
  bool row_sparse = false;
  std::vector<char> touched_rows;

  void zero_grad();
};

using ParameterVisitor = std::function<void(const std::string& name, Parameter& p)>;

class Module {
 public:
  virtual ~Module() = default;
  virtual void visit(const std::string& prefix, const ParameterVisitor& fn) = 0;
};

std::vector<std::pair<std::string, Parameter*>> named_parameters(Module& m, const std::string& prefix);
std::size_t parameter_count(Module& m);

// Creates one graph leaf per parameter per forward pass and hands leaf
// gradients back to the parameters afterwards.
class Tape {
 public:
  // A tape with gradients disabled builds no graph (inference).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  ag::Var param(Parameter& p);
  // Adds leaf gradients into Parameter::grad (and marks touched rows).
  void accumulate();

 private:
  bool grad_enabled_;
  std::unordered_map<Parameter*, ag::Var> leaves_;
  std::vector<Parameter*> order_;
};

std::string join_path(const std::string& prefix, const std::string& name);

// ---- layers --------------------------------------------------------------

class Conv1d : public Module {
 public:
  Conv1d() = default;
  // "Same" zero padding for odd kernels when pad < 0.
  Conv1d(int in_channels, int out_channels, int kernel, Rng& rng, int dilation = 1, int groups = 1, int pad = -1,
         int stride = 1);

  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  void zero_init();

  Parameter weight;  // [out, in / groups, kernel]
  Parameter bias;    // [out]
  ag::Conv1dOptions options;
};

class ConvTranspose1d : public Module {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng);

  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  Parameter weight;  // [in, out, kernel]
  Parameter bias;
  int stride = 1;
  int padding = 0;
};

class Conv2d : public Module {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kh, int kw, ag::Conv2dOptions opt, Rng& rng);

  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  Parameter weight;  // [out, in, kh, kw]
  Parameter bias;
  ag::Conv2dOptions options;
};

class LayerNorm : public Module {
 public:
  LayerNorm() = default;
  explicit LayerNorm(int channels);

  ag::Var forward(Tape& tape, const ag::Var& x);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;

  Parameter gamma;
  Parameter beta;
};

class Embedding : public Module {
 public:
  Embedding() = default;
  Embedding(int rows, int dim, Rng& rng, double stddev);

  ag::Var forward(Tape& tape, std::span<const int> ids);
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  int rows() const { return table.value.dim(0); }
  int dim() const { return table.value.dim(1); }
  // Appends rows initialized to the mean of the existing rows.
  void append_mean_rows(int count);

  Parameter table;  // [rows, dim]
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform_fan_in(Parameter& p, int fan_in, Rng& rng);

}  // namespace ttsa
