// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rafe/image.hpp"
#include "rafe/numerics/tape.hpp"

namespace rafe {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE); identical images give kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);
double mse(const ImageBuffer& a, const ImageBuffer& b);

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5) over the
/// valid region, averaged over pixels and channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// Pyramid gradient distance used in place of a learned perceptual metric.
/// On e = a - b: three levels (5-tap binomial blur, then keep every other
/// pixel); each level adds the mean squares of luminance and of its
/// horizontal and vertical forward differences, weighted 1/3.
double perceptual_proxy(const ImageBuffer& a, const ImageBuffer& b);
/// Differentiable version over NHWC batches ([N, H, W, 3]).
Var perceptual_proxy(Var a, Var b);

inline constexpr int kProxyLevels = 3;

/// Mean squared response of the 4-neighbour Laplacian over the valid region.
double hf_energy(const ImageBuffer& img);

struct DistanceFn {
  std::string name;
  std::function<double(const ImageBuffer&, const ImageBuffer&)> fn;

  double operator()(const ImageBuffer& a, const ImageBuffer& b) const { return fn(a, b); }
};

DistanceFn proxy_distance();
DistanceFn mse_distance();

/// Mean over images of the distance to the nearest other image.
double diversity_score(const std::vector<ImageBuffer>& images, const DistanceFn& d);

/// Image <-> [1, H, W, C] tape tensor.
Var image_to_var(Tape& tape, const ImageBuffer& img, bool requires_grad = false);
ImageBuffer var_to_image(Var v, std::int64_t batch_index = 0);

}  // namespace rafe
