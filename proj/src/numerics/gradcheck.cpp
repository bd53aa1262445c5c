// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"

namespace rafe {

Var grad_norm_sq_wrt_input(const std::function<Var(Var)>& net, Var x) {
  if (!x.valid()) throw NumericError("grad_norm_sq_wrt_input: detached input");
  auto& tape = *x.tape;
  if (!tape.requires_grad(x)) throw NumericError("grad_norm_sq_wrt_input: input does not require grad");
  auto out = net(x);
  if (out.tape != x.tape) throw NumericError("grad_norm_sq_wrt_input: net output on another tape");
  const auto batch = x.shape().empty() ? 1 : x.shape()[0];
  if (out.size() != batch) {
    throw NumericError("grad_norm_sq_wrt_input: net must be scalar per sample, got " + shape_str(out.shape()));
  }
  const Var wrt[] = {x};
  auto g = tape.grad(ops::sum(out), wrt);
  return ops::sum(ops::square(g[0]));
}

namespace {

double eval_loss(const std::function<Var(Tape&)>& loss) {
  Tape t;
  Tape::NoGradGuard guard(t);
  return loss(t).item();
}

}  // namespace

GradCheckResult finite_diff_check(const std::function<Var(Tape&)>& loss, const std::vector<DiffTensor*>& params,
                                  const GradCheckOptions& options) {
  for (auto* p : params) p->zero_grad();
  {
    Tape t;
    t.backward(loss(t));
  }
  std::vector<std::vector<double>> analytic;
  for (auto* p : params) analytic.emplace_back(p->grad().begin(), p->grad().end());

  const double f0 = eval_loss(loss);
  if (eval_loss(loss) != f0) throw NumericError("finite_diff_check: loss is not deterministic");

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < static_cast<std::size_t>(params[k]->size()); ++i) coords.emplace_back(k, i);
  if (options.max_coordinates > 0 && static_cast<std::int64_t>(coords.size()) > options.max_coordinates) {
    auto rng = make_rng(options.seed, {0x6772});
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(static_cast<std::size_t>(options.max_coordinates));
  }

  GradCheckResult r;
  const double h = options.step;
  for (const auto& [k, i] : coords) {
    auto vals = params[k]->values();
    const double x0 = vals[i];
    vals[i] = x0 + h;
    const double fp = eval_loss(loss);
    vals[i] = x0 - h;
    const double fm = eval_loss(loss);
    vals[i] = x0;

    const double central = (fp - fm) / (2.0 * h);
    const double fwd = (fp - f0) / h;
    const double bwd = (f0 - fm) / h;
    const double a = analytic[k][i];
    const double err = std::abs(a - central) / std::max(std::abs(a), options.denom_floor);
    const bool kink = std::abs(fwd - bwd) > options.kink_tolerance * std::max(1.0, std::abs(central));
    r.max_rel_error = std::max(r.max_rel_error, err);
    if (kink) {
      ++r.kinks;
    } else {
      r.max_rel_error_smooth = std::max(r.max_rel_error_smooth, err);
    }
    ++r.coordinates;
  }
  return r;
}

}  // namespace rafe
