// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "rafe/field/triplane.hpp"
#include "rafe/numerics/tape.hpp"
#include "rafe/render/volume.hpp"

namespace rafe {

/// Mean squared difference of horizontally and vertically adjacent texels,
/// over all planes and channels.
double tv_loss(const TriPlaneSet& tp);
/// Same on plane nodes of shape [R, R, C].
Var tv_loss(const std::array<Var, 3>& planes);

/// Per-ray sum_{i,j} w_i w_j |s_i - s_j| + (1/3) sum_i w_i^2 ds_i, averaged
/// over rays. `s` and `ds` are [R*N] sample positions and widths in
/// normalized ray coordinates; weights are [R, N] with s sorted per ray.
Var distortion_loss(Var weights, std::span<const double> s, std::span<const double> ds);
/// Normalized positions and widths of a render's samples.
void normalized_samples(const RenderResult& r, std::vector<double>& s, std::vector<double>& ds);
/// Convenience: distortion loss of a render.
Var distortion_loss(const RenderResult& r);

/// Mean squared difference of consecutive densities; sigma is [R, N].
Var density_reg(Var sigma);

/// Maps a batch [B, ...] to logits [B].
using DiscriminatorFn = std::function<Var(Var)>;

struct AdversarialLosses {
  Var d_loss;  // includes the R1 term
  Var g_loss;
  Var r1;      // E ||dD/dx(real)||^2, before weighting
};

/// Softplus GAN losses with R1 on real samples. `real` must be a
/// requires_grad input when lambda_r1 > 0.
AdversarialLosses adversarial_losses(const DiscriminatorFn& d, Var real, Var fake, double lambda_r1);
/// L_D alone; writes the unweighted penalty to `r1` when given.
Var discriminator_loss(const DiscriminatorFn& d, Var real, Var fake, double lambda_r1, Var* r1 = nullptr);
/// Non-saturating L_G = E softplus(-D(fake)).
Var generator_loss(const DiscriminatorFn& d, Var fake);

/// Perceptual-proxy distance between a rendered and a restored NHWC patch,
/// averaged over the proxy applied to each color channel on its own.
Var geometry_loss(Var rendered, Var restored);

/// sigma0 * max(0, 1 - t / t_cut).
double anneal_sigma(double progress, double sigma0, double t_cut);
/// Gaussian taps for sigma (radius ceil(3 sigma), at most max_radius).
std::vector<double> gaussian_taps(double sigma, int max_radius);
/// Blurs an NHWC batch with sigma(t); identity once sigma reaches zero.
Var blur_anneal(Var patch, double progress, double sigma0, double t_cut);

}  // namespace rafe
