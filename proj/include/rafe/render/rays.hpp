// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rafe/numerics/rng.hpp"
#include "rafe/render/camera.hpp"

namespace rafe {

/// Rays plus the interval they are sampled over. In NDC mode `origins` and
/// `dirs` are the projected ray (dirs not unit length) and `view_dirs`
/// keeps the world-space unit direction for color decoding.
struct RayBundle {
  std::vector<Vec3> origins;
  std::vector<Vec3> dirs;
  std::vector<Vec3> view_dirs;
  double near = 0.0;
  double far = 1.0;
  bool ndc = false;

  std::size_t size() const { return origins.size(); }
};

/// Rays through the centers of pixels in [x0, x0+w) x [y0, y0+h), row-major.
RayBundle generate_rays(const Camera& cam, int x0, int y0, int w, int h);
RayBundle generate_rays(const Camera& cam, const PatchSpec& patch);

/// Camera-space direction (unnormalized, z = -1) of pixel center (i, j).
Vec3 pixel_direction(const Camera& cam, double i, double j);

/// Standard forward-facing NDC map anchored at cam.ndc_near.
RayBundle to_ndc(const RayBundle& rays, const Camera& cam);
Vec3 ndc_project(const Vec3& world, const Camera& cam);
Vec3 ndc_unproject(const Vec3& ndc, const Camera& cam);

/// One sample per equal bin of [near, far]: the center, or uniform within
/// the bin when jittered.
std::vector<double> stratified_samples(double near, double far, int n, bool jitter, Rng& rng);
std::vector<double> stratified_samples(double near, double far, int n, bool jitter, std::uint64_t seed);

/// Inverse-CDF draws from the piecewise-constant density proportional to
/// `weights` over bins [edges[i], edges[i+1]). Draws are random, or evenly
/// spaced in CDF space when `deterministic`. All-zero weights fall back to
/// stratified samples over the whole range.
std::vector<double> importance_samples(std::span<const double> bin_edges, std::span<const double> weights, int n,
                                       Rng& rng, bool deterministic = false);
std::vector<double> importance_samples(std::span<const double> bin_edges, std::span<const double> weights, int n,
                                       std::uint64_t seed);

/// Sorted union forced to be strictly increasing.
std::vector<double> merge_samples(std::span<const double> a, std::span<const double> b);

/// delta_i = t_{i+1} - t_i; the last one is (far - near) / N. Throws on
/// non-increasing t.
std::vector<double> sample_deltas(std::span<const double> t, double near, double far);

struct PatchSchedule {
  double beta_final = 0.3;
  bool uniform = false;
};

double patch_beta(double progress, const PatchSchedule& schedule);
/// (delta_x, delta_y) in [0, 1]: Beta(b, b) draws with b = patch_beta, or
/// U(0, 1) in uniform mode.
std::array<double, 2> sample_patch_fraction(double progress, const PatchSchedule& schedule, Rng& rng);
PatchSpec sample_patch_origin(int width, int height, int side, double progress, const PatchSchedule& schedule,
                              Rng& rng);

}  // namespace rafe
