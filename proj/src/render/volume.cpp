// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/render/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rafe/numerics/ops.hpp"

namespace rafe {

void compute_weights(std::span<const double> sigma, std::span<const double> deltas, std::int64_t n_per_ray,
                     std::span<double> weights, std::span<double> transmittance) {
  if (n_per_ray < 1 || sigma.size() != deltas.size() || sigma.size() != weights.size() ||
      sigma.size() % static_cast<std::size_t>(n_per_ray) != 0) {
    throw std::invalid_argument("compute_weights: size mismatch");
  }
  const bool keep_t = !transmittance.empty();
  const std::size_t rays = sigma.size() / static_cast<std::size_t>(n_per_ray);
  for (std::size_t r = 0; r < rays; ++r) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n_per_ray; ++i) {
      const std::size_t k = r * static_cast<std::size_t>(n_per_ray) + static_cast<std::size_t>(i);
      const double od = sigma[k] * deltas[k];
      const double t = std::exp(-acc);
      weights[k] = -t * std::expm1(-od);
      if (keep_t) transmittance[k] = t;
      acc += od;
    }
  }
}

Var render_weights(Var sigma, std::span<const double> deltas) {
  const Shape& s = sigma.shape();
  if (s.size() != 2) throw std::invalid_argument("render_weights: sigma must be [rays, samples]");
  const std::int64_t n = s[1];
  std::vector<double> d(deltas.begin(), deltas.end());
  std::vector<double> w(d.size()), trans(d.size());
  compute_weights(sigma.value(), d, n, w, trans);
  std::vector<double> wcopy = w;
  return sigma.tape->record(
      "render_weights", s, std::move(w), {sigma},
      [d = std::move(d), w = std::move(wcopy), trans = std::move(trans), n](RawGrad& g) {
        if (g.in[0].empty()) return;
        const std::size_t rays = w.size() / static_cast<std::size_t>(n);
        for (std::size_t r = 0; r < rays; ++r) {
          double suffix = 0.0;  // sum over later samples of g_i w_i
          for (std::int64_t i = n - 1; i >= 0; --i) {
            const std::size_t k = r * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
            g.in[0][k] += d[k] * (g.out[k] * (trans[k] - w[k]) - suffix);
            suffix += g.out[k] * w[k];
          }
        }
      });
}

Var composite(Var weights, Var rgb, const std::array<double, 3>& bg) {
  const Shape& ws = weights.shape();
  if (ws.size() != 2 || rgb.shape() != Shape{ws[0] * ws[1], 3}) {
    throw std::invalid_argument("composite: expected weights [R, N] and rgb [R*N, 3], got " + shape_str(ws) + " and " +
                                shape_str(rgb.shape()));
  }
  const std::int64_t rays = ws[0], n = ws[1];
  const auto w = weights.value();
  const auto c = rgb.value();
  std::vector<double> out(static_cast<std::size_t>(rays * 3));
  for (std::int64_t r = 0; r < rays; ++r) {
    double acc[3] = {0.0, 0.0, 0.0};
    double wsum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t k = r * n + i;
      for (int ch = 0; ch < 3; ++ch) acc[ch] += w[k] * c[k * 3 + ch];
      wsum += w[k];
    }
    for (int ch = 0; ch < 3; ++ch) out[r * 3 + ch] = acc[ch] + (1.0 - wsum) * bg[ch];
  }
  return weights.tape->record("composite", {rays, 3}, std::move(out), {weights, rgb},
                              [weights, rgb, rays, n, bg](RawGrad& g) {
                                const auto w = weights.value();
                                const auto c = rgb.value();
                                for (std::int64_t r = 0; r < rays; ++r) {
                                  const double* go = g.out.data() + r * 3;
                                  for (std::int64_t i = 0; i < n; ++i) {
                                    const std::int64_t k = r * n + i;
                                    if (!g.in[0].empty()) {
                                      double s = 0.0;
                                      for (int ch = 0; ch < 3; ++ch) s += go[ch] * (c[k * 3 + ch] - bg[ch]);
                                      g.in[0][k] += s;
                                    }
                                    if (!g.in[1].empty()) {
                                      for (int ch = 0; ch < 3; ++ch) g.in[1][k * 3 + ch] += go[ch] * w[k];
                                    }
                                  }
                                }
                              });
}

namespace {

void sample_points(const RayBundle& rays, std::span<const double> t, std::int64_t n, std::vector<Vec3>& pts,
                   std::vector<Vec3>& dirs) {
  const std::size_t total = rays.size() * static_cast<std::size_t>(n);
  pts.resize(total);
  dirs.resize(total);
  for (std::size_t r = 0; r < rays.size(); ++r) {
    for (std::int64_t i = 0; i < n; ++i) {
      const std::size_t k = r * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
      pts[k] = rays.origins[r] + t[k] * rays.dirs[r];
      dirs[k] = rays.view_dirs[r];
    }
  }
}

std::vector<double> ray_deltas(const RayBundle& rays, std::span<const double> t, std::int64_t n) {
  std::vector<double> d(t.size());
  for (std::size_t r = 0; r < rays.size(); ++r) {
    const auto tr = t.subspan(r * static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    auto dr = sample_deltas(tr, rays.near, rays.far);
    const double scale = rays.ndc ? rays.dirs[r].norm() : 1.0;
    for (std::int64_t i = 0; i < n; ++i) d[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = dr[i] * scale;
  }
  return d;
}

}  // namespace

RenderResult render_rays(const BoundField& field, const RayBundle& rays, const RenderOptions& opts, Rng& rng) {
  if (opts.n_strat < 1 || opts.n_imp < 0) throw std::invalid_argument("render_rays: bad sample counts");
  if (rays.size() == 0) throw std::invalid_argument("render_rays: empty ray bundle");
  Tape& tape = *field.coarse.planes[0].tape;
  const auto rays_n = static_cast<std::int64_t>(rays.size());
  const std::int64_t ns = opts.n_strat, ni = opts.n_imp, n = ns + ni;

  std::vector<double> ts(static_cast<std::size_t>(rays_n * ns));
  for (std::int64_t r = 0; r < rays_n; ++r) {
    const auto s = stratified_samples(rays.near, rays.far, opts.n_strat, opts.jitter, rng);
    std::copy(s.begin(), s.end(), ts.begin() + r * ns);
  }

  std::vector<Vec3> pts, dirs;
  std::vector<double> t;
  if (ni == 0) {
    t = std::move(ts);
  } else {
    std::vector<double> coarse_w(ts.size());
    {
      Tape::NoGradGuard ng(tape);
      const std::size_t mark = tape.size();
      sample_points(rays, ts, ns, pts, dirs);
      const auto out = eval_field(field, pts, dirs);
      const auto d = ray_deltas(rays, ts, ns);
      compute_weights(out.sigma.value(), d, ns, coarse_w);
      tape.truncate(mark);
    }
    std::vector<double> edges(static_cast<std::size_t>(ns + 1));
    const double step = (rays.far - rays.near) / static_cast<double>(ns);
    for (std::int64_t i = 0; i <= ns; ++i) edges[i] = rays.near + static_cast<double>(i) * step;
    edges.back() = rays.far;
    t.resize(static_cast<std::size_t>(rays_n * n));
    for (std::int64_t r = 0; r < rays_n; ++r) {
      const std::span<const double> tr(ts.data() + r * ns, static_cast<std::size_t>(ns));
      const std::span<const double> wr(coarse_w.data() + r * ns, static_cast<std::size_t>(ns));
      const auto imp = importance_samples(edges, wr, opts.n_imp, rng, !opts.jitter);
      const auto merged = merge_samples(tr, imp);
      std::copy(merged.begin(), merged.end(), t.begin() + r * n);
    }
  }

  sample_points(rays, t, n, pts, dirs);
  const auto deltas = ray_deltas(rays, t, n);
  const auto out = eval_field(field, pts, dirs);
  Var sigma = ops::reshape(out.sigma, {rays_n, n});
  Var w = render_weights(sigma, deltas);
  RenderResult res;
  res.rgb = composite(w, out.rgb, opts.background);
  res.weights = w;
  res.sigma = sigma;
  res.near = rays.near;
  res.far = rays.far;
  res.t = std::move(t);
  res.samples_per_ray = n;
  return res;
}

RenderResult render_patch(const BoundField& field, const Camera& cam, const PatchSpec& patch, const RenderOptions& opts,
                          Rng& rng) {
  return render_rays(field, generate_rays(cam, patch), opts, rng);
}

ImageBuffer render_image(TwoLevelField& field, const Camera& cam, const RenderOptions& opts, std::uint64_t seed) {
  const RayBundle all = generate_rays(cam, 0, 0, cam.width, cam.height);
  ImageBuffer img(cam.width, cam.height, 3);
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, opts.chunk));
  for (std::size_t begin = 0, ci = 0; begin < all.size(); begin += chunk, ++ci) {
    const std::size_t end = std::min(all.size(), begin + chunk);
    RayBundle part;
    part.near = all.near;
    part.far = all.far;
    part.ndc = all.ndc;
    part.origins.assign(all.origins.begin() + begin, all.origins.begin() + end);
    part.dirs.assign(all.dirs.begin() + begin, all.dirs.begin() + end);
    part.view_dirs.assign(all.view_dirs.begin() + begin, all.view_dirs.begin() + end);
    Tape tape;
    Tape::NoGradGuard ng(tape);
    const BoundField bf = bind_field(tape, field);
    Rng rng = make_rng(seed, {ci});
    const auto res = render_rays(bf, part, opts, rng);
    const auto v = res.rgb.value();
    std::copy(v.begin(), v.end(), img.data.begin() + static_cast<std::ptrdiff_t>(begin * 3));
  }
  return img;
}

}  // namespace rafe
