// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rafe/degrade/degrade.hpp"
#include "rafe/field/triplane.hpp"
#include "rafe/image.hpp"
#include "rafe/multiview.hpp"
#include "rafe/render/camera.hpp"

namespace rafe {

using Color = std::array<double, 3>;

/// Solid (3D) procedural albedo evaluated in primitive-local coordinates.
struct Texture {
  enum class Kind { Solid, Checker, Stripes, Noise };
  Kind kind = Kind::Solid;
  Color a{0.8, 0.8, 0.8};
  Color b{0.2, 0.2, 0.2};
  /// Cells (or stripes, or base noise periods) per world unit.
  double frequency = 4.0;
  int octaves = 3;
  std::uint64_t seed = 0;

  Color eval(const Vec3& local) const;
};

struct Primitive {
  enum class Kind { Sphere, Box, Plane };
  Kind kind = Kind::Sphere;
  Vec3 center = Vec3::Zero();
  /// Sphere: x is the radius. Box: half extents. Plane: half extents along
  /// local x and z (the local normal is +y).
  Vec3 size = Vec3::Constant(0.5);
  /// Euler angles in degrees, applied x then y then z.
  Vec3 rotation = Vec3::Zero();
  Texture texture;
  /// Blinn-Phong lobe weight; 0 is purely Lambertian.
  double specular = 0.0;
  double shininess = 32.0;
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Color background{1.0, 1.0, 1.0};
  /// Direction towards the light.
  Vec3 light = Vec3(0.4, 1.0, 0.6).normalized();
  double ambient = 0.3;

  /// Throws std::invalid_argument for an empty scene or a primitive that
  /// leaves the domain box.
  void validate(const DomainBounds& bounds = {}) const;
};

/// "white_sphere", "two_primitive", "desk" (object) and "shelf" (forward
/// facing). The seed jitters colors, texture phases and placements.
SyntheticScene scene_preset(std::string_view name, std::uint64_t seed);

struct Hit {
  double t = 0.0;
  Vec3 normal = Vec3::Zero();
  Vec3 local = Vec3::Zero();
  int primitive = -1;
};

/// Closest intersection with t > t_min, or primitive = -1.
Hit intersect(const SyntheticScene& scene, const Vec3& origin, const Vec3& dir, double t_min = 1e-9);

/// Ray-traced render with supersample^2 stratified samples per pixel.
ImageBuffer trace_scene(const SyntheticScene& scene, const Camera& cam, int supersample = 2);

struct RigConfig {
  SceneKind kind = SceneKind::Object;
  int train = 20;
  int test = 5;
  double radius = 4.0;
  double fov_x = 0.6911112070083618;
  int width = 64;
  int height = 64;
  double near = 2.0;
  double far = 6.0;
  /// Forward rigs: half-width of the lateral camera grid.
  double lateral = 0.3;

  void validate() const;
};

struct CameraSplit {
  std::vector<Camera> train;
  std::vector<Camera> test;
};

/// Object rigs place train + test cameras on a Fibonacci lattice over the
/// upper hemisphere of `radius` (a uniform-area cover), looking at the
/// origin; every fifth pose is held out. Forward rigs put cameras on a
/// jittered lateral grid at z = radius, all looking down -z, in NDC mode.
CameraSplit make_rig(const RigConfig& cfg, std::uint64_t seed);

/// Clean renders of `scene` from each camera.
MultiViewSet synth_scene(const SyntheticScene& scene, const std::vector<Camera>& cameras, int supersample = 2);

}  // namespace rafe
