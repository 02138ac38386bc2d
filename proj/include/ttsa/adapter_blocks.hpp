// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

// Adapter blocks and the slot through which host layers route their output.

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <variant>

#include "ttsa/nn.hpp"

namespace ttsa {

struct BottleneckAdapterSpec {
  int input_dim = 256;
  int bottleneck_dim = 16;

  // 2 * input_dim * bottleneck_dim + bottleneck_dim + input_dim
  std::size_t parameter_count() const;
  bool operator==(const BottleneckAdapterSpec&) const = default;
};

struct ConvAdapterSpec {
  int channels = 32;
  std::array<int, 3> kernel_sizes = {3, 5, 3};  // the middle layer is depthwise
  bool layer_norm = true;
  int se_ratio = 4;

  std::size_t parameter_count() const;
  bool operator==(const ConvAdapterSpec&) const = default;
};

using AdapterSpec = std::variant<BottleneckAdapterSpec, ConvAdapterSpec>;

std::size_t adapter_parameter_count(const AdapterSpec& spec);
// Channel width the adapter expects.
int adapter_channels(const AdapterSpec& spec);

class Adapter : public Module {
 public:
  // h: [channels, T] -> [channels, T]
  virtual ag::Var forward(Tape& tape, const ag::Var& h) = 0;
  virtual AdapterSpec spec() const = 0;
};

// h' = W_up relu(W_down h + b_down) + b_up + h, with W_up and b_up zero at init.
class BottleneckAdapter : public Adapter {
 public:
  BottleneckAdapter(const BottleneckAdapterSpec& spec, Rng& rng);

  ag::Var forward(Tape& tape, const ag::Var& h) override;
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  AdapterSpec spec() const override { return spec_; }

  Parameter w_down;  // [b, D]
  Parameter b_down;  // [b]
  Parameter w_up;    // [D, b]
  Parameter b_up;    // [D]

 private:
  BottleneckAdapterSpec spec_;
};

// conv(k0) -> LN -> ReLU -> depthwise conv(k1) -> ReLU -> conv(k2) -> LN -> SE,
// summed with the input. The last conv is zero at init.
class ConvAdapter : public Adapter {
 public:
  ConvAdapter(const ConvAdapterSpec& spec, Rng& rng);

  ag::Var forward(Tape& tape, const ag::Var& h) override;
  void visit(const std::string& prefix, const ParameterVisitor& fn) override;
  AdapterSpec spec() const override { return spec_; }

  Conv1d conv_in;
  LayerNorm norm_in;
  Conv1d depthwise;
  Conv1d conv_out;
  LayerNorm norm_out;
  Parameter se_w1;  // [C / r, C]
  Parameter se_b1;
  Parameter se_w2;  // [C, C / r]
  Parameter se_b2;

 private:
  ConvAdapterSpec spec_;
};

std::unique_ptr<Adapter> make_adapter(const AdapterSpec& spec, Rng& rng);

// A host layer owns one slot; an attached adapter consumes the host output
// and replaces it. Its parameters live under "<host>.adapter".
class AdapterSlot {
 public:
  bool occupied() const { return static_cast<bool>(adapter_); }
  Adapter* get() const { return adapter_.get(); }
  void attach(std::unique_ptr<Adapter> a);
  void detach() { adapter_.reset(); }

  ag::Var apply(Tape& tape, const ag::Var& h) const { return adapter_ ? adapter_->forward(tape, h) : h; }
  void visit(const std::string& host_prefix, const ParameterVisitor& fn) const;

 private:
  std::unique_ptr<Adapter> adapter_;
};

// A layer that exposes an attachment point.
class AdapterHost {
 public:
  virtual ~AdapterHost() = default;
  virtual int output_channels() const = 0;
  virtual AdapterSlot& slot() = 0;
};

}  // namespace ttsa
