// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/numerics/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rafe {

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw NumericError("negative extent in shape " + shape_str(shape));
    n *= e;
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

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

DiffTensor::DiffTensor(Shape shape) : shape_(std::move(shape)) {
  const auto n = static_cast<std::size_t>(numel(shape_));
  values_.assign(n, 0.0);
  grad_.assign(n, 0.0);
}

DiffTensor::DiffTensor(Shape shape, std::vector<double> values, bool requires_grad)
    : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
  if (static_cast<std::int64_t>(values_.size()) != numel(shape_)) {
    throw NumericError("DiffTensor: " + std::to_string(values_.size()) + " values for shape " +
                       shape_str(shape_));
  }
  grad_.assign(values_.size(), 0.0);
}

void DiffTensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

void DiffTensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void DiffTensor::check_finite(std::string_view what) const {
  if (!all_finite(values_)) throw NumericError("non-finite value in " + std::string(what));
}

}  // namespace rafe
