// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/cli/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

#include "rafe/numerics/rng.hpp"
#include "rafe/render/rays.hpp"

namespace rafe {

namespace {

Eigen::Matrix3d rotation_of(const Vec3& deg) {
  const double k = std::numbers::pi / 180.0;
  return (Eigen::AngleAxisd(deg.z() * k, Vec3::UnitZ()) * Eigen::AngleAxisd(deg.y() * k, Vec3::UnitY()) *
          Eigen::AngleAxisd(deg.x() * k, Vec3::UnitX()))
      .toRotationMatrix();
}

double lattice(std::int64_t x, std::int64_t y, std::int64_t z, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ 0x9e3779b97f4a7c15ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(x));
  h = splitmix64(h ^ static_cast<std::uint64_t>(y));
  h = splitmix64(h ^ static_cast<std::uint64_t>(z));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double value_noise(const Vec3& p, std::uint64_t seed) {
  const Vec3 f(std::floor(p.x()), std::floor(p.y()), std::floor(p.z()));
  const Vec3 u = p - f;
  auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double sx = fade(u.x()), sy = fade(u.y()), sz = fade(u.z());
  const auto ix = static_cast<std::int64_t>(f.x()), iy = static_cast<std::int64_t>(f.y()),
             iz = static_cast<std::int64_t>(f.z());
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? sx : 1 - sx) * (dy ? sy : 1 - sy) * (dz ? sz : 1 - sz);
    acc += w * lattice(ix + dx, iy + dy, iz + dz, seed);
  }
  return acc;
}

Color mix(const Color& a, const Color& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

struct LocalRay {
  Vec3 o, d;
};

LocalRay to_local(const Primitive& p, const Eigen::Matrix3d& r, const Vec3& origin, const Vec3& dir) {
  return {r.transpose() * (origin - p.center), r.transpose() * dir};
}

// Returns t or +inf; fills the local-space normal.
double hit_sphere(const Primitive& p, const LocalRay& ray, Vec3& n) {
  const double rad = p.size.x();
  const double b = ray.o.dot(ray.d), c = ray.o.squaredNorm() - rad * rad, a = ray.d.squaredNorm();
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double s = std::sqrt(disc);
  double t = (-b - s) / a;
  if (t <= 0.0) t = (-b + s) / a;
  if (t <= 0.0) return std::numeric_limits<double>::infinity();
  n = (ray.o + t * ray.d) / rad;
  return t;
}

double hit_box(const Primitive& p, const LocalRay& ray, Vec3& n) {
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  int axis0 = 0, axis1 = 0;
  for (int k = 0; k < 3; ++k) {
    const double h = p.size[k];
    if (std::abs(ray.d[k]) < 1e-300) {
      if (std::abs(ray.o[k]) > h) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = (-h - ray.o[k]) / ray.d[k], b = (h - ray.o[k]) / ray.d[k];
    if (a > b) std::swap(a, b);
    if (a > t0) {
      t0 = a;
      axis0 = k;
    }
    if (b < t1) {
      t1 = b;
      axis1 = k;
    }
  }
  if (t0 > t1 || t1 <= 0.0) return std::numeric_limits<double>::infinity();
  const double t = t0 > 0.0 ? t0 : t1;
  const int axis = t0 > 0.0 ? axis0 : axis1;
  n = Vec3::Zero();
  n[axis] = (ray.o[axis] + t * ray.d[axis]) > 0.0 ? 1.0 : -1.0;
  return t;
}

double hit_plane(const Primitive& p, const LocalRay& ray, Vec3& n) {
  if (std::abs(ray.d.y()) < 1e-300) return std::numeric_limits<double>::infinity();
  const double t = -ray.o.y() / ray.d.y();
  if (t <= 0.0) return std::numeric_limits<double>::infinity();
  const Vec3 q = ray.o + t * ray.d;
  if (std::abs(q.x()) > p.size.x() || std::abs(q.z()) > p.size.z()) return std::numeric_limits<double>::infinity();
  n = Vec3::UnitY();
  return t;
}

std::vector<Vec3> extreme_points(const Primitive& p) {
  const Eigen::Matrix3d r = rotation_of(p.rotation);
  std::vector<Vec3> pts;
  switch (p.kind) {
    case Primitive::Kind::Sphere:
      for (int k = 0; k < 3; ++k) {
        pts.push_back(p.center + p.size.x() * Vec3::Unit(k));
        pts.push_back(p.center - p.size.x() * Vec3::Unit(k));
      }
      break;
    case Primitive::Kind::Box:
      for (int c = 0; c < 8; ++c) {
        const Vec3 s((c & 1) ? 1 : -1, (c & 2) ? 1 : -1, (c & 4) ? 1 : -1);
        pts.push_back(p.center + r * p.size.cwiseProduct(s));
      }
      break;
    case Primitive::Kind::Plane:
      for (int c = 0; c < 4; ++c) {
        const Vec3 s((c & 1) ? 1 : -1, 0, (c & 2) ? 1 : -1);
        pts.push_back(p.center + r * p.size.cwiseProduct(s));
      }
      break;
  }
  return pts;
}

Color jitter_color(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

Vec3 jitter(Rng& rng, double amount) {
  return {uniform(rng, -amount, amount), uniform(rng, -amount, amount), uniform(rng, -amount, amount)};
}

}  // namespace

Color Texture::eval(const Vec3& local) const {
  const Vec3 p = local * frequency;
  switch (kind) {
    case Kind::Solid:
      return a;
    case Kind::Checker: {
      const auto s = static_cast<std::int64_t>(std::floor(p.x())) + static_cast<std::int64_t>(std::floor(p.y())) +
                     static_cast<std::int64_t>(std::floor(p.z()));
      return (s & 1) ? b : a;
    }
    case Kind::Stripes:
      return (static_cast<std::int64_t>(std::floor(p.x())) & 1) ? b : a;
    case Kind::Noise: {
      double v = 0.0, amp = 0.5, norm = 0.0, scale = 1.0;
      for (int o = 0; o < octaves; ++o) {
        v += amp * value_noise(p * scale, seed + static_cast<std::uint64_t>(o));
        norm += amp;
        amp *= 0.5;
        scale *= 2.0;
      }
      return mix(a, b, v / norm);
    }
  }
  return a;
}

void SyntheticScene::validate(const DomainBounds& bounds) const {
  if (primitives.empty()) throw std::invalid_argument("scene: no primitives");
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    const Primitive& p = primitives[i];
    if (!(p.size.minCoeff() >= 0.0) || (p.kind == Primitive::Kind::Sphere && !(p.size.x() > 0.0))) {
      throw std::invalid_argument("scene: primitive " + std::to_string(i) + " has a bad size");
    }
    for (const Vec3& q : extreme_points(p)) {
      if (q.minCoeff() < bounds.lo - 1e-12 || q.maxCoeff() > bounds.hi + 1e-12) {
        throw std::invalid_argument("scene: primitive " + std::to_string(i) + " leaves the domain box");
      }
    }
  }
}

SyntheticScene scene_preset(std::string_view name, std::uint64_t seed) {
  using P = Primitive::Kind;
  using T = Texture::Kind;
  Rng rng = make_rng(seed, {0x7363656e65});
  SyntheticScene s;
  if (name == "white_sphere") {
    s.primitives.push_back({.kind = P::Sphere, .size = Vec3::Constant(0.8), .texture = {.a = {1, 1, 1}}});
    s.background = {0, 0, 0};
    s.ambient = 1.0;
  } else if (name == "two_primitive") {
    s.primitives.push_back({.kind = P::Sphere,
                            .center = Vec3(-0.45, 0.1, 0.2) + jitter(rng, 0.05),
                            .size = Vec3::Constant(0.55),
                            .texture = {.kind = T::Checker,
                                        .a = jitter_color(rng, 0.6, 0.95),
                                        .b = jitter_color(rng, 0.05, 0.35),
                                        .frequency = 3.0}});
    s.primitives.push_back({.kind = P::Box,
                            .center = Vec3(0.55, -0.1, -0.25) + jitter(rng, 0.05),
                            .size = Vec3(0.35, 0.45, 0.35),
                            .rotation = Vec3(0, uniform(rng, 15, 45), 0),
                            .texture = {.kind = T::Stripes,
                                        .a = jitter_color(rng, 0.5, 0.9),
                                        .b = jitter_color(rng, 0.1, 0.4),
                                        .frequency = 5.0}});
  } else if (name == "desk") {
    s.primitives.push_back({.kind = P::Plane,
                            .center = Vec3(0, -0.7, 0),
                            .size = Vec3(1.4, 0, 1.4),
                            .texture = {.kind = T::Noise,
                                        .a = jitter_color(rng, 0.55, 0.75),
                                        .b = jitter_color(rng, 0.2, 0.35),
                                        .frequency = 3.0,
                                        .octaves = 4,
                                        .seed = derive_seed(seed, {1})}});
    s.primitives.push_back({.kind = P::Sphere,
                            .center = Vec3(-0.4, -0.2, 0.3) + jitter(rng, 0.05),
                            .size = Vec3::Constant(0.45),
                            .texture = {.kind = T::Checker,
                                        .a = jitter_color(rng, 0.6, 0.95),
                                        .b = jitter_color(rng, 0.05, 0.3),
                                        .frequency = 4.0}});
    s.primitives.push_back({.kind = P::Box,
                            .center = Vec3(0.5, -0.3, -0.3) + jitter(rng, 0.05),
                            .size = Vec3(0.3, 0.35, 0.3),
                            .rotation = Vec3(0, uniform(rng, 10, 50), 0),
                            .texture = {.kind = T::Stripes,
                                        .a = jitter_color(rng, 0.5, 0.9),
                                        .b = jitter_color(rng, 0.1, 0.35),
                                        .frequency = 6.0}});
    s.primitives.push_back({.kind = P::Sphere,
                            .center = Vec3(0.35, -0.45, 0.55) + jitter(rng, 0.03),
                            .size = Vec3::Constant(0.22),
                            .texture = {.a = jitter_color(rng, 0.3, 0.8)},
                            .specular = 0.6,
                            .shininess = 48.0});
  } else if (name == "shelf") {
    s.primitives.push_back({.kind = P::Plane,
                            .center = Vec3(0, 0, -1.2),
                            .size = Vec3(1.4, 0, 1.4),
                            .rotation = Vec3(90, 0, 0),
                            .texture = {.kind = T::Noise,
                                        .a = jitter_color(rng, 0.55, 0.8),
                                        .b = jitter_color(rng, 0.15, 0.35),
                                        .frequency = 2.5,
                                        .octaves = 4,
                                        .seed = derive_seed(seed, {2})}});
    s.primitives.push_back({.kind = P::Sphere,
                            .center = Vec3(-0.5, 0.0, 0.0) + jitter(rng, 0.05),
                            .size = Vec3::Constant(0.4),
                            .texture = {.kind = T::Checker,
                                        .a = jitter_color(rng, 0.6, 0.95),
                                        .b = jitter_color(rng, 0.05, 0.3),
                                        .frequency = 4.0}});
    s.primitives.push_back({.kind = P::Box,
                            .center = Vec3(0.45, -0.1, -0.5) + jitter(rng, 0.05),
                            .size = Vec3(0.3, 0.45, 0.3),
                            .rotation = Vec3(0, uniform(rng, 15, 40), 0),
                            .texture = {.kind = T::Stripes,
                                        .a = jitter_color(rng, 0.5, 0.9),
                                        .b = jitter_color(rng, 0.1, 0.35),
                                        .frequency = 6.0}});
    s.primitives.push_back({.kind = P::Sphere,
                            .center = Vec3(0.2, 0.45, 0.4) + jitter(rng, 0.03),
                            .size = Vec3::Constant(0.2),
                            .texture = {.a = jitter_color(rng, 0.3, 0.8)},
                            .specular = 0.6,
                            .shininess = 48.0});
    s.background = {0.1, 0.1, 0.12};
    s.light = Vec3(0.3, 0.6, 1.0).normalized();
  } else {
    throw std::invalid_argument("unknown scene preset '" + std::string(name) + "'");
  }
  return s;
}

Hit intersect(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir, double t_min) {
  Hit best;
  best.t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& p = scene.primitives[i];
    const Eigen::Matrix3d r = rotation_of(p.rotation);
    const LocalRay ray = to_local(p, r, origin, dir);
    Vec3 n;
    double t = std::numeric_limits<double>::infinity();
    switch (p.kind) {
      case Primitive::Kind::Sphere: t = hit_sphere(p, ray, n); break;
      case Primitive::Kind::Box: t = hit_box(p, ray, n); break;
      case Primitive::Kind::Plane: t = hit_plane(p, ray, n); break;
    }
    if (t > t_min && t < best.t) {
      best.t = t;
      best.local = ray.o + t * ray.d;
      best.normal = (r * n).normalized();
      best.primitive = static_cast<int>(i);
    }
  }
  if (best.primitive < 0) best.t = 0.0;
  return best;
}

ImageBuffer trace_scene(const SyntheticScene& scene, const Camera& cam, int supersample) {
  cam.validate();
  if (supersample < 1) throw std::invalid_argument("trace_scene: supersample must be >= 1");
  const Eigen::Matrix3d r = cam.c2w.block<3, 3>(0, 0);
  const Vec3 origin = cam.position();
  const Vec3 light = scene.light.normalized();
  const double inv = 1.0 / (supersample * supersample);
  ImageBuffer img(cam.width, cam.height, 3);
  for (int j = 0; j < cam.height; ++j) {
    for (int i = 0; i < cam.width; ++i) {
      Color acc{0, 0, 0};
      for (int sy = 0; sy < supersample; ++sy) {
        for (int sx = 0; sx < supersample; ++sx) {
          const double oi = (sx + 0.5) / supersample - 0.5, oj = (sy + 0.5) / supersample - 0.5;
          const Vec3 d = (r * pixel_direction(cam, i + oi, j + oj)).normalized();
          const Hit h = intersect(scene, origin, d);
          Color c = scene.background;
          if (h.primitive >= 0) {
            const Primitive& p = scene.primitives[static_cast<std::size_t>(h.primitive)];
            Vec3 n = h.normal;
            if (n.dot(d) > 0.0) n = -n;
            const Vec3 x = origin + h.t * d;
            double diffuse = std::max(0.0, n.dot(light)), spec = 0.0;
            if (diffuse > 0.0 && scene.ambient < 1.0 && intersect(scene, x + 1e-6 * n, light).primitive >= 0) {
              diffuse = 0.0;
            }
            if (p.specular > 0.0 && diffuse > 0.0) {
              const Vec3 half = (light - d).normalized();
              spec = p.specular * std::pow(std::max(0.0, n.dot(half)), p.shininess);
            }
            const Color albedo = p.texture.eval(h.local);
            for (int k = 0; k < 3; ++k) {
              c[k] = std::clamp(albedo[k] * (scene.ambient + (1.0 - scene.ambient) * diffuse) + spec, 0.0, 1.0);
            }
          }
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      }
      for (int k = 0; k < 3; ++k) img.at(i, j, k) = acc[k] * inv;
    }
  }
  return img;
}

void RigConfig::validate() const {
  if (train < 1 || test < 0) throw std::invalid_argument("rig: need at least one training view");
  if (width < 1 || height < 1) throw std::invalid_argument("rig: bad image extent");
  if (!(radius > 0.0)) throw std::invalid_argument("rig: radius must be positive");
  if (!(near < far)) throw std::invalid_argument("rig: near must be < far");
}

CameraSplit make_rig(const RigConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int n = cfg.train + cfg.test;
  std::vector<bool> held(static_cast<std::size_t>(n), false);
  for (int k = 0; k < cfg.test; ++k) {
    held[static_cast<std::size_t>(std::min(n - 1, static_cast<int>((k + 0.5) * n / cfg.test)))] = true;
  }
  Rng rng = make_rng(seed, {0x726967});
  CameraSplit out;
  if (cfg.kind == SceneKind::Object) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < n; ++i) {
      // Uniform in height is uniform in area; stay off the horizon and pole.
      const double y = 0.15 + 0.8 * (i + 0.5) / n;
      const double rho = std::sqrt(1.0 - y * y), az = phase + i * golden;
      const Vec3 eye = cfg.radius * Vec3(rho * std::cos(az), y, rho * std::sin(az));
      Camera cam = look_at(eye, Vec3::Zero(), Vec3::UnitY(), cfg.fov_x, cfg.width, cfg.height);
      cam.near = cfg.near;
      cam.far = cfg.far;
      (held[static_cast<std::size_t>(i)] ? out.test : out.train).push_back(cam);
    }
  } else {
    const int cols = std::min(n, 5), rows = (n + cols - 1) / cols;
    for (int i = 0; i < n; ++i) {
      const int c = i % cols, rr = i / cols;
      const double u = cols > 1 ? 2.0 * c / (cols - 1) - 1.0 : 0.0;
      const double v = rows > 1 ? 2.0 * rr / (rows - 1) - 1.0 : 0.0;
      const Vec3 eye(cfg.lateral * (u + uniform(rng, -0.1, 0.1)), 0.6 * cfg.lateral * (v + uniform(rng, -0.1, 0.1)),
                     cfg.radius);
      Camera cam = look_at(eye, eye - Vec3::UnitZ(), Vec3::UnitY(), cfg.fov_x, cfg.width, cfg.height);
      cam.ndc = true;
      cam.ndc_near = 1.0;
      cam.near = 0.0;
      cam.far = 1.0;
      (held[static_cast<std::size_t>(i)] ? out.test : out.train).push_back(cam);
    }
  }
  return out;
}

MultiViewSet synth_scene(const SyntheticScene& scene, const std::vector<Camera>& cameras, int supersample) {
  scene.validate();
  MultiViewSet set;
  for (const Camera& cam : cameras) set.views.push_back({trace_scene(scene, cam, supersample), cam});
  return set;
}

}  // namespace rafe
