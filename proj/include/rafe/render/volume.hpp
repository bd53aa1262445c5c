// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rafe/field/field.hpp"
#include "rafe/image.hpp"
#include "rafe/numerics/rng.hpp"
#include "rafe/numerics/tape.hpp"
#include "rafe/render/rays.hpp"

namespace rafe {

/// Per-sample weights w = T (1 - exp(-sigma delta)) for sigma [R, N].
Var render_weights(Var sigma, std::span<const double> deltas);
/// Plain version; also writes the transmittances when `transmittance` is non-empty.
void compute_weights(std::span<const double> sigma, std::span<const double> deltas, std::int64_t n_per_ray,
                     std::span<double> weights, std::span<double> transmittance = {});

/// sum_i w_i c_i + (1 - sum_i w_i) * background; weights [R, N], rgb [R*N, 3].
Var composite(Var weights, Var rgb, const std::array<double, 3>& background);

struct RenderOptions {
  int n_strat = 128;
  int n_imp = 48;
  /// Random stratified offsets and importance draws (training); off gives
  /// bin centers and evenly spaced CDF draws.
  bool jitter = true;
  std::array<double, 3> background{1.0, 1.0, 1.0};
  /// Rays per chunk in full-image renders.
  int chunk = 1024;
};

struct RenderResult {
  Var rgb;      // [R, 3]
  Var weights;  // [R, N]
  Var sigma;    // [R, N]
  std::vector<double> t;  // [R, N], sample positions
  std::int64_t samples_per_ray = 0;
  double near = 0.0;
  double far = 1.0;
};

/// Stratified pass (no gradient) to place importance samples, then a
/// differentiable pass over the merged set.
RenderResult render_rays(const BoundField& field, const RayBundle& rays, const RenderOptions& opts, Rng& rng);

/// Renders a patch on `field.coarse.planes[0].tape`; rgb is [side*side, 3].
RenderResult render_patch(const BoundField& field, const Camera& cam, const PatchSpec& patch,
                          const RenderOptions& opts, Rng& rng);

/// Full image without gradients.
ImageBuffer render_image(TwoLevelField& field, const Camera& cam, const RenderOptions& opts, std::uint64_t seed);

}  // namespace rafe
