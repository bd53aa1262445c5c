// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/numerics/adam.hpp"

#include <cmath>

namespace rafe {

void adam_step(std::vector<std::span<double>> params, std::vector<std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size()) throw NumericError("adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw NumericError("adam_step: state does not match parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size() || state.m[k].size() != params[k].size()) {
      throw NumericError("adam_step: shape mismatch for parameter " + std::to_string(k));
    }
    if (!all_finite(grads[k])) throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(k));
  }

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double g = grads[k][i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[k][i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

Adam::Adam(std::vector<DiffTensor*> params, AdamConfig config) : params_(std::move(params)) {
  state_.config = config;
  for (auto* p : params_) {
    state_.m.emplace_back(static_cast<std::size_t>(p->size()), 0.0);
    state_.v.emplace_back(static_cast<std::size_t>(p->size()), 0.0);
  }
}

void Adam::step() {
  std::vector<std::span<double>> ps;
  std::vector<std::span<const double>> gs;
  for (auto* p : params_) {
    ps.push_back(p->values());
    gs.push_back(p->grad());
  }
  adam_step(std::move(ps), std::move(gs), state_);
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

}  // namespace rafe
