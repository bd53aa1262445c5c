// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rafe {

/// Row-major H x W x C image with real samples, nominally in [0, 1].
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c = 3, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || c < 1) throw std::invalid_argument("ImageBuffer: bad extent");
  }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int x, int y, int c) { return data[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data[index(x, y, c)]; }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_extent(const ImageBuffer& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  void clamp01() {
    for (auto& v : data) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  /// Copy of the window [x0, x0+w) x [y0, y0+h).
  ImageBuffer crop(int x0, int y0, int w, int h) const {
    if (x0 < 0 || y0 < 0 || x0 + w > width || y0 + h > height) throw std::out_of_range("ImageBuffer::crop");
    ImageBuffer out(w, h, channels);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < channels; ++c) out.at(x, y, c) = at(x0 + x, y0 + y, c);
    return out;
  }
};

inline void require_same_extent(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
  if (!a.same_extent(b)) throw std::invalid_argument(std::string(what) + ": image extent mismatch");
}

}  // namespace rafe
