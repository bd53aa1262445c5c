// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/training/losses.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "rafe/metrics/metrics.hpp"
#include "rafe/numerics/gradcheck.hpp"
#include "rafe/numerics/ops.hpp"
#include "rafe/render/rays.hpp"

namespace rafe {

double tv_loss(const TriPlaneSet& tp) {
  const int r = tp.resolution(), c = tp.channels();
  if (r < 2) return 0.0;
  double s = 0.0;
  for (int k = 0; k < kPlaneCount; ++k)
    for (int v = 0; v < r; ++v)
      for (int u = 0; u < r; ++u)
        for (int ch = 0; ch < c; ++ch) {
          const double x = tp.at(k, v, u, ch);
          if (u + 1 < r) s += (tp.at(k, v, u + 1, ch) - x) * (tp.at(k, v, u + 1, ch) - x);
          if (v + 1 < r) s += (tp.at(k, v + 1, u, ch) - x) * (tp.at(k, v + 1, u, ch) - x);
        }
  return s / (static_cast<double>(kPlaneCount) * c * 2.0 * r * (r - 1));
}

Var tv_loss(const std::array<Var, 3>& planes) {
  const Shape s = planes[0].shape();
  if (s.size() != 3 || s[0] != s[1]) throw std::invalid_argument("tv_loss: planes must be [R, R, C]");
  const std::int64_t r = s[0], c = s[2];
  if (r < 2) return ops::scale(ops::sum(planes[0]), 0.0);
  const std::int64_t pairs = 2 * r * (r - 1) * c;
  // Horizontal differences first, then vertical.
  auto visit = [=](auto&& fn) {
    std::int64_t o = 0;
    for (std::int64_t v = 0; v < r; ++v)
      for (std::int64_t u = 0; u + 1 < r; ++u)
        for (std::int64_t ch = 0; ch < c; ++ch, ++o) fn(o, (v * r + u) * c + ch, (v * r + u + 1) * c + ch);
    for (std::int64_t v = 0; v + 1 < r; ++v)
      for (std::int64_t u = 0; u < r; ++u)
        for (std::int64_t ch = 0; ch < c; ++ch, ++o) fn(o, (v * r + u) * c + ch, ((v + 1) * r + u) * c + ch);
  };
  Var total;
  for (const Var& p : planes) {
    if (p.shape() != s) throw std::invalid_argument("tv_loss: plane shapes differ");
    Var d = ops::linear_map(
        "tv_diff", p, {pairs},
        [visit](std::span<const double> in, std::span<double> out) {
          visit([&](std::int64_t o, std::int64_t a, std::int64_t b) { out[o] += in[b] - in[a]; });
        },
        [visit](std::span<const double> in, std::span<double> out) {
          visit([&](std::int64_t o, std::int64_t a, std::int64_t b) {
            out[b] += in[o];
            out[a] -= in[o];
          });
        });
    Var sq = ops::sum(ops::square(d));
    total = total.valid() ? ops::add(total, sq) : sq;
  }
  return ops::scale(total, 1.0 / (3.0 * static_cast<double>(pairs)));
}

Var distortion_loss(Var weights, std::span<const double> s, std::span<const double> ds) {
  const Shape& sh = weights.shape();
  if (sh.size() != 2) throw std::invalid_argument("distortion_loss: weights must be [R, N]");
  const std::int64_t rays = sh[0], n = sh[1];
  if (static_cast<std::int64_t>(s.size()) != rays * n || s.size() != ds.size()) {
    throw std::invalid_argument("distortion_loss: sample arrays do not match the weights");
  }
  auto sp = std::make_shared<const std::vector<double>>(s.begin(), s.end());
  auto dp = std::make_shared<const std::vector<double>>(ds.begin(), ds.end());
  const auto w = weights.value();
  double total = 0.0;
  for (std::int64_t r = 0; r < rays; ++r) {
    double wsum = 0.0, wssum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(r * n + i);
      if (i > 0 && s[k] < s[k - 1]) throw std::invalid_argument("distortion_loss: positions not sorted");
      total += 2.0 * w[k] * (s[k] * wsum - wssum) + w[k] * w[k] * ds[k] / 3.0;
      wsum += w[k];
      wssum += w[k] * s[k];
    }
  }
  return weights.tape->record(
      "distortion", {}, {total / static_cast<double>(rays)}, {weights}, [weights, sp, dp, rays, n](RawGrad& g) {
        const auto w = weights.value();
        const auto& s = *sp;
        const auto& ds = *dp;
        const double go = g.out[0] / static_cast<double>(rays);
        for (std::int64_t r = 0; r < rays; ++r) {
          const std::size_t base = static_cast<std::size_t>(r * n);
          double wtot = 0.0, stot = 0.0;
          for (std::int64_t i = 0; i < n; ++i) {
            wtot += w[base + i];
            stot += w[base + i] * s[base + i];
          }
          double wbelow = 0.0, sbelow = 0.0;
          for (std::int64_t i = 0; i < n; ++i) {
            const std::size_t k = base + static_cast<std::size_t>(i);
            const double wabove = wtot - wbelow - w[k], sabove = stot - sbelow - w[k] * s[k];
            const double pair = s[k] * wbelow - sbelow + sabove - s[k] * wabove;
            g.in[0][k] += go * (2.0 * pair + 2.0 * w[k] * ds[k] / 3.0);
            wbelow += w[k];
            sbelow += w[k] * s[k];
          }
        }
      });
}

void normalized_samples(const RenderResult& r, std::vector<double>& s, std::vector<double>& ds) {
  const std::int64_t n = r.samples_per_ray;
  const double len = r.far - r.near;
  s.resize(r.t.size());
  ds.resize(r.t.size());
  for (std::size_t base = 0; base < r.t.size(); base += static_cast<std::size_t>(n)) {
    const std::span<const double> row(r.t.data() + base, static_cast<std::size_t>(n));
    const auto d = sample_deltas(row, r.near, r.far);
    for (std::int64_t i = 0; i < n; ++i) {
      s[base + i] = (row[i] - r.near) / len;
      ds[base + i] = d[i] / len;
    }
  }
}

Var distortion_loss(const RenderResult& r) {
  std::vector<double> s, ds;
  normalized_samples(r, s, ds);
  return distortion_loss(r.weights, s, ds);
}

Var density_reg(Var sigma) {
  const Shape sh = sigma.shape();
  if (sh.size() != 2) throw std::invalid_argument("density_reg: sigma must be [R, N]");
  const std::int64_t rays = sh[0], n = sh[1];
  if (n < 2) return ops::scale(ops::sum(sigma), 0.0);
  auto visit = [=](auto&& fn) {
    for (std::int64_t r = 0; r < rays; ++r)
      for (std::int64_t i = 0; i + 1 < n; ++i) fn(r * (n - 1) + i, r * n + i);
  };
  Var d = ops::linear_map(
      "adjacent_diff", sigma, {rays * (n - 1)},
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[o] += in[i + 1] - in[i]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) {
          out[i + 1] += in[o];
          out[i] -= in[o];
        });
      });
  return ops::mean_square(d);
}

namespace {

Var mean_softplus(Var logits, double sign) { return ops::mean(ops::softplus(ops::scale(logits, sign))); }

}  // namespace

Var discriminator_loss(const DiscriminatorFn& d, Var real, Var fake, double lambda_r1, Var* r1) {
  if (real.shape() != fake.shape()) {
    throw std::invalid_argument("adversarial loss: real " + shape_str(real.shape()) + " vs fake " +
                                shape_str(fake.shape()));
  }
  if (lambda_r1 < 0.0) throw std::invalid_argument("adversarial loss: lambda_r1 must be >= 0");
  Var loss = ops::add(mean_softplus(d(fake), 1.0), mean_softplus(d(real), -1.0));
  Var pen;
  if (lambda_r1 > 0.0) {
    pen = ops::scale(grad_norm_sq_wrt_input(d, real), 1.0 / static_cast<double>(real.shape()[0]));
    loss = ops::add(loss, ops::scale(pen, lambda_r1));
  } else {
    pen = real.tape->scalar(0.0);
  }
  if (r1) *r1 = pen;
  return loss;
}

Var generator_loss(const DiscriminatorFn& d, Var fake) { return mean_softplus(d(fake), -1.0); }

AdversarialLosses adversarial_losses(const DiscriminatorFn& d, Var real, Var fake, double lambda_r1) {
  AdversarialLosses out;
  out.d_loss = discriminator_loss(d, real, fake, lambda_r1, &out.r1);
  out.g_loss = generator_loss(d, fake);
  return out;
}

Var geometry_loss(Var rendered, Var restored) {
  if (rendered.shape() != restored.shape()) {
    throw std::invalid_argument("geometry_loss: extent mismatch " + shape_str(rendered.shape()) + " vs " +
                                shape_str(restored.shape()));
  }
  const Shape sh = rendered.shape();
  if (sh.size() != 4 || sh[3] != 3) throw std::invalid_argument("geometry_loss: expected [N, H, W, 3]");
  const std::int64_t px = sh[0] * sh[1] * sh[2];
  // Channel c copied into all three slots, so the proxy's luminance is c.
  auto gray = [&](Var x, std::int64_t c) {
    Var col = ops::slice_cols(ops::reshape(x, {px, 3}), c, c + 1);
    return ops::reshape(ops::concat_cols(ops::concat_cols(col, col), col), sh);
  };
  Var total;
  for (std::int64_t c = 0; c < 3; ++c) {
    Var term = perceptual_proxy(gray(rendered, c), gray(restored, c));
    total = total.valid() ? ops::add(total, term) : term;
  }
  return ops::scale(total, 1.0 / 3.0);
}

double anneal_sigma(double progress, double sigma0, double t_cut) {
  if (t_cut <= 0.0) return 0.0;
  return sigma0 * std::max(0.0, 1.0 - progress / t_cut);
}

std::vector<double> gaussian_taps(double sigma, int max_radius) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, std::min(max_radius, static_cast<int>(std::ceil(3.0 * sigma))));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    s += taps[static_cast<std::size_t>(i + radius)];
  }
  for (auto& t : taps) t /= s;
  return taps;
}

Var blur_anneal(Var patch, double progress, double sigma0, double t_cut) {
  const double sigma = anneal_sigma(progress, sigma0, t_cut);
  if (sigma <= 0.0) return patch;
  const Shape& s = patch.shape();
  if (s.size() != 4) throw std::invalid_argument("blur_anneal: expected NHWC, got " + shape_str(s));
  const int max_radius = static_cast<int>(std::min(s[1], s[2])) - 1;
  if (max_radius < 1) return patch;
  return ops::blur_separable(patch, gaussian_taps(sigma, max_radius));
}

}  // namespace rafe
