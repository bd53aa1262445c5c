// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/render/camera.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>
#include <json.hpp>

namespace rafe {

double Camera::focal() const { return 0.5 * width / std::tan(0.5 * fov_x); }

void Camera::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("Camera: image extent must be >= 1");
  if (!(fov_x > 0.0 && fov_x < std::numbers::pi)) throw std::invalid_argument("Camera: fov_x outside (0, pi)");
  if (!(near < far)) throw std::invalid_argument("Camera: near must be < far");
  if (!c2w.allFinite()) throw std::invalid_argument("Camera: non-finite pose");
  const Eigen::Matrix3d r = c2w.block<3, 3>(0, 0);
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw std::invalid_argument("Camera: rotation block is not orthonormal");
  }
}

Camera Camera::downscaled(int factor) const {
  if (factor < 1 || width % factor != 0 || height % factor != 0) {
    throw std::invalid_argument("Camera::downscaled: extent not divisible by factor");
  }
  Camera c = *this;
  c.width = width / factor;
  c.height = height / factor;
  return c;
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) throw std::invalid_argument("look_at: up is parallel to the view direction");
  right.normalize();
  const Vec3 true_up = right.cross(forward);
  Camera c;
  c.c2w.block<3, 1>(0, 0) = right;
  c.c2w.block<3, 1>(0, 1) = true_up;
  c.c2w.block<3, 1>(0, 2) = -forward;
  c.c2w.block<3, 1>(0, 3) = eye;
  c.fov_x = fov_x;
  c.width = width;
  c.height = height;
  return c;
}

CameraRig read_camera_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_camera_rig: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("read_camera_rig: " + path.string() + ": " + e.what());
  }
  if (!j.contains("camera_angle_x") || !j.contains("frames")) {
    throw std::runtime_error("read_camera_rig: " + path.string() + " lacks camera_angle_x or frames");
  }
  CameraRig rig;
  rig.fov_x = j.at("camera_angle_x").get<double>();
  for (const auto& f : j.at("frames")) {
    Camera c;
    c.fov_x = rig.fov_x;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.near = j.value("near", c.near);
    c.far = j.value("far", c.far);
    c.ndc = j.value("ndc", c.ndc);
    c.ndc_near = j.value("ndc_near", c.ndc_near);
    const auto& m = f.at("transform_matrix");
    if (m.size() != 4) throw std::runtime_error("read_camera_rig: transform_matrix must be 4x4");
    for (int r = 0; r < 4; ++r) {
      if (m[r].size() != 4) throw std::runtime_error("read_camera_rig: transform_matrix must be 4x4");
      for (int k = 0; k < 4; ++k) c.c2w(r, k) = m[r][k].get<double>();
    }
    c.validate();
    rig.cameras.push_back(c);
    rig.file_paths.push_back(f.value("file_path", std::string{}));
  }
  return rig;
}

void write_camera_rig(const std::filesystem::path& path, const CameraRig& rig) {
  nlohmann::json j;
  j["camera_angle_x"] = rig.fov_x;
  if (!rig.cameras.empty()) {
    const Camera& c = rig.cameras.front();
    j["width"] = c.width;
    j["height"] = c.height;
    j["near"] = c.near;
    j["far"] = c.far;
    j["ndc"] = c.ndc;
    j["ndc_near"] = c.ndc_near;
  }
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int k = 0; k < 4; ++k) row.push_back(rig.cameras[i].c2w(r, k));
      m.push_back(row);
    }
    j["frames"].push_back({{"file_path", i < rig.file_paths.size() ? rig.file_paths[i] : std::string{}},
                           {"transform_matrix", m}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_camera_rig: cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace rafe
