// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rafe/image.hpp"
#include "rafe/multiview.hpp"

namespace rafe {

/// round-half-up of clamp(v, 0, 1) * 255.
std::uint8_t quantize8(double v);

/// 8-bit PNG with 1, 3 or 4 channels.
void write_png(const std::filesystem::path& path, const ImageBuffer& img);
ImageBuffer read_png(const std::filesystem::path& path);

/// "RAFF", then width, height, channels as little-endian u32, then
/// row-major little-endian f32 samples.
void write_raff(const std::filesystem::path& path, const ImageBuffer& img);
ImageBuffer read_raff(const std::filesystem::path& path);

/// Dispatches on the extension (.png or .raff).
void save_image(const std::filesystem::path& path, const ImageBuffer& img);
ImageBuffer load_image(const std::filesystem::path& path);

/// Views as <dir>/<prefix>_NNN.<ext> plus <dir>/transforms.json.
void save_views(const std::filesystem::path& dir, const MultiViewSet& views, const std::string& ext = "raff",
                const std::string& prefix = "view");
MultiViewSet load_views(const std::filesystem::path& dir);

/// Images laid side by side left to right (equal heights), with a
/// `gap`-pixel separator of value `fill`.
ImageBuffer hstack(const std::vector<ImageBuffer>& images, int gap = 2, double fill = 1.0);

}  // namespace rafe
