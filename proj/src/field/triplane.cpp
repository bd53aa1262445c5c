// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/field/triplane.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rafe/numerics/rng.hpp"

namespace rafe {

const char* plane_name(int k) {
  static constexpr const char* kNames[] = {"xy", "yz", "zx"};
  if (k < 0 || k >= kPlaneCount) throw std::out_of_range("plane_name");
  return kNames[k];
}

TriPlaneSet::TriPlaneSet(int resolution, int channels, DomainBounds bounds)
    : resolution_(resolution), channels_(channels), bounds_(bounds) {
  if (resolution < 1 || channels < 1) {
    throw std::invalid_argument("TriPlaneSet: resolution and channels must be >= 1");
  }
  if (!(bounds.hi > bounds.lo)) throw std::invalid_argument("TriPlaneSet: empty domain bounds");
  for (auto& p : planes_) p = DiffTensor({resolution, resolution, channels});
}

double& TriPlaneSet::at(int k, int v, int u, int c) {
  return plane(k).values()[(static_cast<std::size_t>(v) * resolution_ + u) * channels_ + c];
}

double TriPlaneSet::at(int k, int v, int u, int c) const {
  return plane(k).values()[(static_cast<std::size_t>(v) * resolution_ + u) * channels_ + c];
}

void TriPlaneSet::fill(double value) {
  for (auto& p : planes_) p.fill(value);
}

void TriPlaneSet::set_requires_grad(bool flag) {
  for (auto& p : planes_) p.set_requires_grad(flag);
}

std::vector<DiffTensor*> TriPlaneSet::params() { return {&planes_[0], &planes_[1], &planes_[2]}; }

TriPlaneSet init_triplane(int resolution, int channels, double scale, std::uint64_t seed, DomainBounds bounds) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw std::invalid_argument("init_triplane: bad scale");
  TriPlaneSet tp(resolution, channels, bounds);
  for (int k = 0; k < kPlaneCount; ++k) {
    Rng rng = make_rng(seed, {0x747269ULL, static_cast<std::uint64_t>(k)});
    for (double& v : tp.plane(k).values()) v = scale == 0.0 ? 0.0 : uniform(rng, -scale, scale);
  }
  return tp;
}

namespace {

struct Axis1 {
  std::int64_t i0, i1;
  double f;
};

Axis1 locate(double coord, int resolution, const DomainBounds& b) {
  if (resolution == 1) return {0, 0, 0.0};
  double g = (coord - b.lo) / (b.hi - b.lo) * (resolution - 1);
  g = std::clamp(g, 0.0, static_cast<double>(resolution - 1));
  auto i0 = static_cast<std::int64_t>(std::floor(g));
  if (i0 > resolution - 2) i0 = resolution - 2;
  return {i0, i0 + 1, g - static_cast<double>(i0)};
}

}  // namespace

PlaneTaps plane_taps(int resolution, const DomainBounds& bounds, const Vec3& x) {
  if (!x.allFinite()) throw std::invalid_argument("sample_triplane: non-finite point");
  static constexpr int kU[3] = {0, 1, 2};
  static constexpr int kV[3] = {1, 2, 0};
  PlaneTaps t{};
  for (int k = 0; k < kPlaneCount; ++k) {
    const Axis1 u = locate(x[kU[k]], resolution, bounds);
    const Axis1 v = locate(x[kV[k]], resolution, bounds);
    const std::int64_t r = resolution;
    t.texel[k] = {v.i0 * r + u.i0, v.i0 * r + u.i1, v.i1 * r + u.i0, v.i1 * r + u.i1};
    t.weight[k] = {(1.0 - u.f) * (1.0 - v.f), u.f * (1.0 - v.f), (1.0 - u.f) * v.f, u.f * v.f};
  }
  return t;
}

namespace {

// Shared by the plain and tape paths so both give identical bits.
void accumulate(const PlaneTaps& t, const std::array<std::span<const double>, 3>& planes, int channels,
                double* out) {
  for (int c = 0; c < channels; ++c) {
    double total = 0.0;
    for (int k = 0; k < kPlaneCount; ++k) {
      double s = 0.0;
      for (int j = 0; j < 4; ++j) s += t.weight[k][j] * planes[k][t.texel[k][j] * channels + c];
      total += s;
    }
    out[c] = total / 3.0;
  }
}

}  // namespace

std::vector<double> sample_triplane(const TriPlaneSet& tp, const Vec3& x) {
  const PlaneTaps t = plane_taps(tp.resolution(), tp.bounds(), x);
  std::vector<double> out(static_cast<std::size_t>(tp.channels()));
  accumulate(t, {tp.plane(0).values(), tp.plane(1).values(), tp.plane(2).values()}, tp.channels(), out.data());
  return out;
}

Var sample_planes(const std::array<Var, 3>& planes, int resolution, const DomainBounds& bounds,
                  std::span<const Vec3> points) {
  Tape* tape = planes[0].tape;
  const Shape& s0 = planes[0].shape();
  if (s0.size() != 3 || s0[0] != resolution || s0[1] != resolution) {
    throw std::invalid_argument("sample_planes: plane shape " + shape_str(s0) + " does not match resolution " +
                                std::to_string(resolution));
  }
  for (const Var& p : planes) {
    if (p.tape != tape || p.shape() != s0) throw std::invalid_argument("sample_planes: inconsistent planes");
  }
  const int channels = static_cast<int>(s0[2]);
  const auto n = static_cast<std::int64_t>(points.size());
  std::vector<PlaneTaps> taps(points.size());
  std::vector<double> out(static_cast<std::size_t>(n * channels));
  const std::array<std::span<const double>, 3> vals = {planes[0].value(), planes[1].value(), planes[2].value()};
  for (std::int64_t p = 0; p < n; ++p) {
    taps[p] = plane_taps(resolution, bounds, points[p]);
    accumulate(taps[p], vals, channels, out.data() + p * channels);
  }
  return tape->record(
      "sample_planes", {n, channels}, std::move(out), {planes[0], planes[1], planes[2]},
      [taps = std::move(taps), channels, n](RawGrad& g) {
        for (int k = 0; k < kPlaneCount; ++k) {
          if (g.in[k].empty()) continue;
          double* dst = g.in[k].data();
          for (std::int64_t p = 0; p < n; ++p) {
            const double* go = g.out.data() + p * channels;
            for (int j = 0; j < 4; ++j) {
              const double w = taps[p].weight[k][j] / 3.0;
              if (w == 0.0) continue;
              double* row = dst + taps[p].texel[k][j] * channels;
              for (int c = 0; c < channels; ++c) row[c] += w * go[c];
            }
          }
        }
      });
}

}  // namespace rafe
