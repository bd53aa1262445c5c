// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rafe/numerics/tape.hpp"
#include "rafe/numerics/tensor.hpp"

namespace rafe {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned cube [lo, hi]^3 covered by the planes.
struct DomainBounds {
  double lo = -1.5;
  double hi = 1.5;

  bool operator==(const DomainBounds&) const = default;
};

/// Plane order used everywhere: P_xy, P_yz, P_zx.
inline constexpr int kPlaneCount = 3;
const char* plane_name(int k);

/// Three R x R feature grids with C channels each.
///
/// Each plane is stored as a [R, R, C] tensor; entry (v, u, c) sits at
/// (v * R + u) * C + c. Plane k is addressed by the coordinate pair
/// (x, y), (y, z) or (z, x) respectively, with u taking the first one.
class TriPlaneSet {
 public:
  TriPlaneSet() = default;
  TriPlaneSet(int resolution, int channels, DomainBounds bounds = {});

  int resolution() const { return resolution_; }
  int channels() const { return channels_; }
  const DomainBounds& bounds() const { return bounds_; }

  DiffTensor& plane(int k) { return planes_.at(static_cast<std::size_t>(k)); }
  const DiffTensor& plane(int k) const { return planes_.at(static_cast<std::size_t>(k)); }

  double& at(int k, int v, int u, int c);
  double at(int k, int v, int u, int c) const;

  void fill(double value);
  void set_requires_grad(bool flag);
  std::vector<DiffTensor*> params();

 private:
  int resolution_ = 0;
  int channels_ = 0;
  DomainBounds bounds_;
  std::array<DiffTensor, 3> planes_;
};

/// Entries i.i.d. uniform in [-scale, scale].
TriPlaneSet init_triplane(int resolution, int channels, double scale, std::uint64_t seed,
                          DomainBounds bounds = {});

/// Bilinear taps of one point on all three planes. Out-of-domain
/// coordinates clamp to the boundary texel.
struct PlaneTaps {
  std::array<std::array<std::int64_t, 4>, 3> texel;  // offsets into plane storage, in units of C
  std::array<std::array<double, 4>, 3> weight;
};

PlaneTaps plane_taps(int resolution, const DomainBounds& bounds, const Vec3& x);

/// Mean of the three bilinear samples at x.
std::vector<double> sample_triplane(const TriPlaneSet& tp, const Vec3& x);

/// Tape version over a batch of points. `planes` are [R, R, C] nodes
/// (parameters or generator outputs). Returns [P, C].
Var sample_planes(const std::array<Var, 3>& planes, int resolution, const DomainBounds& bounds,
                  std::span<const Vec3> points);

}  // namespace rafe
