// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rafe {

using Shape = std::vector<std::int64_t>;

/// Raised for shape mismatches, non-finite values and misuse of the tape.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense f64 array with a same-shape gradient accumulator.
///
/// This is the storage for every optimized quantity (plane features, MLP
/// weights, generator and discriminator parameters). Values live here
/// between training steps; a Tape binds them as leaves for one step.
class DiffTensor {
 public:
  DiffTensor() = default;
  explicit DiffTensor(Shape shape);
  DiffTensor(Shape shape, std::vector<double> values, bool requires_grad = true);

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  std::int64_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag) { requires_grad_ = flag; }

  void zero_grad();
  void fill(double v);

  /// Throws NumericError naming `what` if any value is NaN or infinite.
  void check_finite(std::string_view what) const;

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool requires_grad_ = true;
};

bool all_finite(std::span<const double> xs);

}  // namespace rafe
