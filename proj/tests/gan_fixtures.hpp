// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rafe/numerics/gradcheck.hpp"
#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"
#include "rafe/training/networks.hpp"

namespace testutil {

/// |dD/dx|^2 summed over the batch, from a single first-order backward pass.
inline double r1_first_order(rafe::Discriminator& d, const std::vector<double>& x) {
  const int s = d.config().patch;
  rafe::Tape t;
  auto xv = t.input({static_cast<std::int64_t>(x.size()) / (3 * s * s), s, s, 3}, x, true);
  t.backward(rafe::ops::sum(d.forward(d.bind_frozen(t), xv)));
  double acc = 0.0;
  for (double g : t.leaf_grad(xv)) acc += g * g;
  return acc;
}

/// Worst relative error between the double-backward R1 parameter gradient
/// and central differences of r1_first_order, over up to max_coords random
/// coordinates. Coordinates straddling a leaky-ReLU kink are skipped.
inline double r1_nested_fd_error(rafe::Discriminator& d, const std::vector<double>& x, int max_coords,
                                 std::uint64_t seed) {
  const int s = d.config().patch;
  const std::int64_t b = static_cast<std::int64_t>(x.size()) / (3 * s * s);
  for (auto* p : d.params()) p->zero_grad();
  {
    rafe::Tape t;
    auto xv = t.input({b, s, s, 3}, x, true);
    const auto bound = d.bind(t);
    t.backward(rafe::grad_norm_sq_wrt_input([&](rafe::Var in) { return d.forward(bound, in); }, xv));
  }
  std::vector<std::pair<rafe::DiffTensor*, std::size_t>> coords;
  for (auto* p : d.params())
    for (std::size_t i = 0; i < static_cast<std::size_t>(p->size()); ++i) coords.emplace_back(p, i);
  auto rng = rafe::make_rng(seed, {0x7231});
  std::shuffle(coords.begin(), coords.end(), rng);
  if (static_cast<int>(coords.size()) > max_coords) coords.resize(static_cast<std::size_t>(max_coords));

  const double h = 1e-5, f0 = r1_first_order(d, x);
  double worst = 0.0;
  for (auto [p, i] : coords) {
    const double analytic = p->grad()[i];
    const double x0 = p->values()[i];
    p->values()[i] = x0 + h;
    const double fp = r1_first_order(d, x);
    p->values()[i] = x0 - h;
    const double fm = r1_first_order(d, x);
    p->values()[i] = x0;
    const double fwd = (fp - f0) / h, bwd = (f0 - fm) / h, central = (fp - fm) / (2 * h);
    if (std::abs(fwd - bwd) > 1e-3 * std::max(1.0, std::abs(central))) continue;
    worst = std::max(worst, std::abs(analytic - central) / std::max(std::abs(analytic), 1e-6));
  }
  return worst;
}

}  // namespace testutil
