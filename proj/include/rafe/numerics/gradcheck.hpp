// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rafe/numerics/tape.hpp"

namespace rafe {

/// Squared norm of d(sum_b net(x)_b)/dx, kept differentiable with respect to
/// whatever parameters `net` binds. `net` must return one value per leading
/// index of x; x must be a requires_grad input on the tape.
Var grad_norm_sq_wrt_input(const std::function<Var(Var)>& net, Var x);

struct GradCheckOptions {
  double step = 1e-5;
  /// Floor of the relative-error denominator.
  double denom_floor = 1e-6;
  /// Checks at most this many coordinates (chosen with `seed`); <= 0 means all.
  std::int64_t max_coordinates = 0;
  std::uint64_t seed = 0;
  /// One-sided slopes disagreeing by more than this (relative) mark a kink.
  double kink_tolerance = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  /// Max over coordinates not flagged as sitting on a kink.
  double max_rel_error_smooth = 0.0;
  std::int64_t coordinates = 0;
  std::int64_t kinks = 0;
  bool unreliable() const { return kinks > 0; }
};

/// Compares tape gradients of `loss` against central differences.
/// `loss` rebuilds the scalar on a fresh tape from the current param values.
/// Throws NumericError if two evaluations at the same point disagree.
GradCheckResult finite_diff_check(const std::function<Var(Tape&)>& loss, const std::vector<DiffTensor*>& params,
                                  const GradCheckOptions& options = {});

}  // namespace rafe
