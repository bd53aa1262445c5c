// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"

namespace testutil {

inline std::vector<double> random_values(std::uint64_t seed, std::size_t n, double scale = 1.0) {
  auto rng = rafe::make_rng(seed, {0x7e57});
  std::vector<double> v(n);
  for (auto& x : v) x = rafe::uniform(rng, -scale, scale);
  return v;
}

inline void fill_random(rafe::DiffTensor& t, std::uint64_t seed, double scale = 1.0) {
  const auto v = random_values(seed, static_cast<std::size_t>(t.size()), scale);
  std::copy(v.begin(), v.end(), t.values().begin());
}

/// Small dense network with random weights used as a gradient test subject.
class RandomMlp {
 public:
  RandomMlp(std::uint64_t seed, std::vector<std::int64_t> widths, bool softplus_act)
      : softplus_(softplus_act) {
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      weights_.emplace_back(rafe::Shape{widths[i], widths[i + 1]});
      biases_.emplace_back(rafe::Shape{widths[i + 1]});
      fill_random(weights_.back(), seed * 31 + i, 1.0 / std::sqrt(static_cast<double>(widths[i])) * 1.5);
      fill_random(biases_.back(), seed * 37 + i, 0.3);
    }
  }

  rafe::Var forward(rafe::Tape& t, rafe::Var x) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      x = rafe::ops::add_bias(rafe::ops::matmul(x, t.param(weights_[i])), t.param(biases_[i]));
      if (i + 1 < weights_.size()) x = softplus_ ? rafe::ops::softplus(x) : rafe::ops::tanh(x);
    }
    return x;
  }

  std::vector<rafe::DiffTensor*> params() {
    std::vector<rafe::DiffTensor*> p;
    for (auto& w : weights_) p.push_back(&w);
    for (auto& b : biases_) p.push_back(&b);
    return p;
  }

 private:
  std::vector<rafe::DiffTensor> weights_;
  std::vector<rafe::DiffTensor> biases_;
  bool softplus_;
};

/// Asymptotic Kolmogorov distribution tail Q(lambda).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// One-sample KS test against U(0, 1); returns the p-value.
inline double ks_uniform_pvalue(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = std::clamp(xs[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - cdf, cdf - i / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace testutil
