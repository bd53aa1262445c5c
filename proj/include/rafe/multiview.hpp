// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "rafe/image.hpp"
#include "rafe/render/camera.hpp"

namespace rafe {

struct View {
  ImageBuffer image;
  Camera camera;
};

/// Images of one scene with their cameras (clean, degraded or restored).
struct MultiViewSet {
  std::vector<View> views;

  std::size_t size() const { return views.size(); }
  bool empty() const { return views.empty(); }
};

}  // namespace rafe
