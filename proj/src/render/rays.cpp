// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/render/rays.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rafe {

Vec3 pixel_direction(const Camera& cam, double i, double j) {
  const double f = cam.focal();
  return {(i + 0.5 - 0.5 * cam.width) / f, -(j + 0.5 - 0.5 * cam.height) / f, -1.0};
}

RayBundle generate_rays(const Camera& cam, int x0, int y0, int w, int h) {
  cam.validate();
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > cam.width || y0 + h > cam.height) {
    throw std::out_of_range("generate_rays: window [" + std::to_string(x0) + "," + std::to_string(x0 + w) + ")x[" +
                            std::to_string(y0) + "," + std::to_string(y0 + h) + ") outside the " +
                            std::to_string(cam.width) + "x" + std::to_string(cam.height) + " image");
  }
  RayBundle rays;
  rays.near = cam.near;
  rays.far = cam.far;
  const Eigen::Matrix3d r = cam.c2w.block<3, 3>(0, 0);
  const Vec3 origin = cam.position();
  const auto n = static_cast<std::size_t>(w) * h;
  rays.origins.reserve(n);
  rays.dirs.reserve(n);
  for (int j = y0; j < y0 + h; ++j) {
    for (int i = x0; i < x0 + w; ++i) {
      rays.origins.push_back(origin);
      rays.dirs.push_back((r * pixel_direction(cam, i, j)).normalized());
    }
  }
  rays.view_dirs = rays.dirs;
  if (cam.ndc) return to_ndc(rays, cam);
  return rays;
}

RayBundle generate_rays(const Camera& cam, const PatchSpec& patch) {
  return generate_rays(cam, patch.px, patch.py, patch.side, patch.side);
}

RayBundle to_ndc(const RayBundle& rays, const Camera& cam) {
  const double n = cam.ndc_near;
  const double sx = 2.0 * cam.focal() / cam.width;
  const double sy = 2.0 * cam.focal() / cam.height;
  RayBundle out;
  out.near = 0.0;
  out.far = 1.0;
  out.ndc = true;
  out.view_dirs = rays.view_dirs;
  out.origins.resize(rays.size());
  out.dirs.resize(rays.size());
  for (std::size_t k = 0; k < rays.size(); ++k) {
    Vec3 o = rays.origins[k];
    const Vec3& d = rays.dirs[k];
    if (std::abs(d.z()) < 1e-12) throw std::invalid_argument("to_ndc: ray parallel to the image plane");
    o += (-(n + o.z()) / d.z()) * d;
    out.origins[k] = {-sx * o.x() / o.z(), -sy * o.y() / o.z(), 1.0 + 2.0 * n / o.z()};
    out.dirs[k] = {-sx * (d.x() / d.z() - o.x() / o.z()), -sy * (d.y() / d.z() - o.y() / o.z()), -2.0 * n / o.z()};
  }
  return out;
}

Vec3 ndc_project(const Vec3& p, const Camera& cam) {
  const double sx = 2.0 * cam.focal() / cam.width;
  const double sy = 2.0 * cam.focal() / cam.height;
  return {-sx * p.x() / p.z(), -sy * p.y() / p.z(), 1.0 + 2.0 * cam.ndc_near / p.z()};
}

Vec3 ndc_unproject(const Vec3& q, const Camera& cam) {
  const double sx = 2.0 * cam.focal() / cam.width;
  const double sy = 2.0 * cam.focal() / cam.height;
  const double z = 2.0 * cam.ndc_near / (q.z() - 1.0);
  return {-q.x() * z / sx, -q.y() * z / sy, z};
}

std::vector<double> stratified_samples(double near, double far, int n, bool jitter, Rng& rng) {
  if (!(near < far) || n < 1) throw std::invalid_argument("stratified_samples: need near < far and n >= 1");
  const double step = (far - near) / n;
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = jitter ? uniform01(rng) : 0.5;
    t[i] = near + (i + u) * step;
  }
  return t;
}

std::vector<double> stratified_samples(double near, double far, int n, bool jitter, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return stratified_samples(near, far, n, jitter, rng);
}

std::vector<double> importance_samples(std::span<const double> edges, std::span<const double> weights, int n,
                                       Rng& rng, bool deterministic) {
  if (edges.size() != weights.size() + 1 || weights.empty()) {
    throw std::invalid_argument("importance_samples: need one more edge than weights");
  }
  if (n < 0) throw std::invalid_argument("importance_samples: negative count");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("importance_samples: weights must be finite and >= 0");
    total += w;
  }
  if (n == 0) return {};
  if (total <= 0.0) return stratified_samples(edges.front(), edges.back(), n, !deterministic, rng);

  const std::size_t bins = weights.size();
  std::vector<double> cdf(bins + 1, 0.0);
  for (std::size_t i = 0; i < bins; ++i) cdf[i + 1] = cdf[i] + weights[i] / total;
  cdf[bins] = 1.0;
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const double u = deterministic ? (s + 0.5) / n : uniform01(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    k = k == 0 ? 0 : k - 1;
    if (k >= bins) k = bins - 1;
    while (k > 0 && weights[k] == 0.0) --k;  // only reachable through rounding at u ~ 1
    const double width = cdf[k + 1] - cdf[k];
    const double frac = width > 0.0 ? std::clamp((u - cdf[k]) / width, 0.0, 1.0) : 0.5;
    t[s] = edges[k] + frac * (edges[k + 1] - edges[k]);
  }
  return t;
}

std::vector<double> importance_samples(std::span<const double> edges, std::span<const double> weights, int n,
                                       std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return importance_samples(edges, weights, n, rng, false);
}

std::vector<double> merge_samples(std::span<const double> a, std::span<const double> b) {
  std::vector<double> t(a.begin(), a.end());
  t.insert(t.end(), b.begin(), b.end());
  std::sort(t.begin(), t.end());
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] <= t[i - 1]) t[i] = std::nextafter(t[i - 1], std::numeric_limits<double>::infinity());
  }
  return t;
}

std::vector<double> sample_deltas(std::span<const double> t, double near, double far) {
  if (t.empty()) throw std::invalid_argument("sample_deltas: no samples");
  std::vector<double> d(t.size());
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    d[i] = t[i + 1] - t[i];
    if (!(d[i] > 0.0)) throw std::invalid_argument("sample_deltas: t values must strictly increase");
  }
  d.back() = (far - near) / static_cast<double>(t.size());
  return d;
}

double patch_beta(double progress, const PatchSchedule& schedule) {
  const double t = std::clamp(progress, 0.0, 1.0);
  return 1.0 + t * (schedule.beta_final - 1.0);
}

std::array<double, 2> sample_patch_fraction(double progress, const PatchSchedule& schedule, Rng& rng) {
  if (schedule.uniform) {
    const double dx = uniform01(rng);
    return {dx, uniform01(rng)};
  }
  const double b = patch_beta(progress, schedule);
  const double dx = beta_sample(rng, b, b);
  return {dx, beta_sample(rng, b, b)};
}

PatchSpec sample_patch_origin(int width, int height, int side, double progress, const PatchSchedule& schedule,
                              Rng& rng) {
  if (side < 1 || side > std::min(width, height)) {
    throw std::invalid_argument("sample_patch_origin: patch side " + std::to_string(side) + " does not fit " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
  const auto [dx, dy] = sample_patch_fraction(progress, schedule, rng);
  PatchSpec p;
  p.side = side;
  p.px = static_cast<int>(std::lround(dx * (width - side)));
  p.py = static_cast<int>(std::lround(dy * (height - side)));
  return p;
}

}  // namespace rafe
