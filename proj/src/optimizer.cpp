// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/optimizer.hpp"

#include <cmath>

#include "ttsa/error.hpp"

namespace ttsa {

std::vector<std::string> OptimizerConfig::violations() const {
  std::vector<std::string> v;
  if (!(beta1 > 0.0 && beta1 < beta2 && beta2 < 1.0)) v.push_back("optimizer: need 0 < beta1 < beta2 < 1");
  if (!(eps > 0.0)) v.push_back("optimizer.eps must be > 0");
  if (!(weight_decay >= 0.0)) v.push_back("optimizer.weight_decay must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) v.push_back("optimizer.gamma must be in (0, 1]");
  return v;
}

double scheduled_lr(double initial_lr, double gamma, int epoch) { return initial_lr * std::pow(gamma, epoch); }

void zero_grads(const NamedParameters& params) {
  for (auto& [name, p] : params) p->zero_grad();
}

void AdamW::step(const NamedParameters& params, double lr) {
  require(lr > 0.0, "invalid-argument", "learning rate must be > 0");
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (const auto& [name, p] : params) {
    if (!p->requires_grad) continue;
    if (p->grad.shape() != p->value.shape()) continue;  // never received gradient
    auto& st = state_[name];
    if (st.m.shape() != p->value.shape()) {
      st.m = Tensor(p->value.shape(), 0.0);
      st.v = Tensor(p->value.shape(), 0.0);
    }
    auto update = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double g = p->grad[i];
        double& w = p->value[i];
        w -= lr * config_.weight_decay * w;
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
        w -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + config_.eps);
      }
    };
    if (p->row_sparse && p->value.rank() == 2) {
      const auto cols = static_cast<std::size_t>(p->value.dim(1));
      for (std::size_t r = 0; r < p->touched_rows.size(); ++r)
        if (p->touched_rows[r]) update(r * cols, (r + 1) * cols);
    } else {
      update(0, p->value.numel());
    }
  }
}

void AdamW::export_state(const std::string& prefix, std::vector<std::pair<std::string, Tensor>>& out) const {
  for (const auto& [name, st] : state_) {
    out.emplace_back(prefix + "m." + name, st.m);
    out.emplace_back(prefix + "v." + name, st.v);
  }
}

void AdamW::import_state(const std::string& prefix, const std::map<std::string, const Tensor*>& arrays,
                         std::int64_t steps) {
  state_.clear();
  t_ = steps;
  const std::string pm = prefix + "m.";
  for (const auto& [key, tensor] : arrays) {
    if (key.rfind(pm, 0) != 0) continue;
    const std::string name = key.substr(pm.size());
    auto it = arrays.find(prefix + "v." + name);
    require(it != arrays.end(), "checkpoint-format", "optimizer state for '" + name + "' lacks a second moment");
    state_[name] = Moments{*tensor, *it->second};
  }
}

}  // namespace ttsa
