// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include "ttsa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttsa/error.hpp"

namespace ttsa {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, "shape-mismatch", "negative dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  require(data_.size() == shape_numel(shape_), "shape-mismatch",
          "data size " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
}

void Tensor::reshape(Shape shape) {
  require(shape_numel(shape) == data_.size(), "shape-mismatch",
          "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  shape_ = std::move(shape);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::transposed() const {
  require(rank() == 2, "shape-mismatch", "transpose needs a 2-D tensor, got " + shape_str(shape_));
  const int r = shape_[0], c = shape_[1];
  Tensor out({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(j, i) = at(i, j);
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.numel() == b.numel(), "shape-mismatch",
          "max_abs_diff on " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ttsa
