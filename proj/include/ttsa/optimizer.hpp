// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ttsa/nn.hpp"

namespace ttsa {

struct OptimizerConfig {
  double beta1 = 0.8;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 1e-2;
  double gamma = 0.99;  // per-epoch exponential decay

  std::vector<std::string> violations() const;
};

// initial_lr * gamma^epoch
double scheduled_lr(double initial_lr, double gamma, int epoch);

using NamedParameters = std::vector<std::pair<std::string, Parameter*>>;

// Adam with decoupled weight decay. Parameters with requires_grad == false
// are skipped entirely. Row-sparse tables update (and decay) only the rows
// that received gradient since the last zero_grad.
class AdamW {
 public:
  explicit AdamW(const OptimizerConfig& config = {}) : config_(config) {}

  void step(const NamedParameters& params, double lr);
  std::int64_t steps() const { return t_; }

  // Moments keyed by parameter name, as "<prefix>m.<name>" / "<prefix>v.<name>".
  void export_state(const std::string& prefix, std::vector<std::pair<std::string, Tensor>>& out) const;
  void import_state(const std::string& prefix, const std::map<std::string, const Tensor*>& arrays, std::int64_t steps);

 private:
  struct Moments {
    Tensor m, v;
  };
  OptimizerConfig config_;
  std::map<std::string, Moments> state_;
  std::int64_t t_ = 0;
};

void zero_grads(const NamedParameters& params);

}  // namespace ttsa
