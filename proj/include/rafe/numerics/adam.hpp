// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "rafe/numerics/tensor.hpp"

namespace rafe {

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Per-parameter moments plus the shared step counter.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

/// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<DiffTensor*> params, AdamConfig config);

  /// Applies one update from the gradients currently stored in the params.
  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  AdamState& state() { return state_; }
  const std::vector<DiffTensor*>& params() const { return params_; }

 private:
  std::vector<DiffTensor*> params_;
  AdamState state_;
};

/// One Adam update of `params` using `grads` (same order and sizes).
/// Throws NumericError on shape mismatch or non-finite gradient.
void adam_step(std::vector<std::span<double>> params, std::vector<std::span<const double>> grads, AdamState& state);

}  // namespace rafe
