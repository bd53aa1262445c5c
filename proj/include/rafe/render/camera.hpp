// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rafe/field/triplane.hpp"

namespace rafe {

/// Pinhole camera. Camera space looks down -z with +y up; `c2w` maps
/// camera to world coordinates.
struct Camera {
  Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
  double fov_x = 0.6911112070083618;
  int width = 64;
  int height = 64;
  double near = 2.0;
  double far = 6.0;
  /// Forward-facing capture: sample in NDC with t in [0, 1].
  bool ndc = false;
  /// Near plane the NDC map is anchored at (world units).
  double ndc_near = 1.0;

  double focal() const;
  Vec3 position() const { return c2w.block<3, 1>(0, 3); }
  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
  /// Copy with the image extent scaled by 1/factor (FOV kept).
  Camera downscaled(int factor) const;
};

/// Camera at `eye` looking at `target`.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width, int height);

/// Pixel window [px, px+side) x [py, py+side) of one camera.
struct PatchSpec {
  int px = 0;
  int py = 0;
  int side = 0;
  int camera = 0;
};

/// Blender-style transforms file.
struct CameraRig {
  double fov_x = 0.0;
  std::vector<Camera> cameras;
  std::vector<std::string> file_paths;
};

/// Reads "camera_angle_x" and "frames"[{file_path, transform_matrix}]. The
/// optional keys "width", "height", "near", "far", "ndc" override defaults.
CameraRig read_camera_rig(const std::filesystem::path& path);
void write_camera_rig(const std::filesystem::path& path, const CameraRig& rig);

}  // namespace rafe
