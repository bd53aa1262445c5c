// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/cli/image_io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rafe {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

png_uint_32 png_format(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default: throw std::invalid_argument("png: unsupported channel count " + std::to_string(channels));
  }
}

}  // namespace

std::uint8_t quantize8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = png_format(img.channels);
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(img.data[i]);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&pi, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw std::runtime_error("png: cannot write " + path.string() + ": " + msg);
  }
}

ImageBuffer read_png(const std::filesystem::path& path) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str())) {
    throw std::runtime_error("png: cannot read " + path.string() + ": " + pi.message);
  }
  const int channels = (pi.format & PNG_FORMAT_FLAG_COLOR) ? ((pi.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3)
                                                           : ((pi.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 1);
  pi.format = png_format(channels);
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, bytes.data(), 0, nullptr)) {
    const std::string msg = pi.message;
    png_image_free(&pi);
    throw std::runtime_error("png: cannot decode " + path.string() + ": " + msg);
  }
  ImageBuffer img(static_cast<int>(pi.width), static_cast<int>(pi.height), channels);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

void write_raff(const std::filesystem::path& path, const ImageBuffer& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("raff: cannot write " + path.string());
  os.write("RAFF", 4);
  put_u32(os, static_cast<std::uint32_t>(img.width));
  put_u32(os, static_cast<std::uint32_t>(img.height));
  put_u32(os, static_cast<std::uint32_t>(img.channels));
  for (double v : img.data) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!os) throw std::runtime_error("raff: write failed for " + path.string());
}

ImageBuffer read_raff(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("raff: cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "RAFF", 4) != 0) {
    throw std::runtime_error("raff: " + path.string() + " is not a RAFF file");
  }
  const std::uint32_t w = get_u32(&bytes[4]), h = get_u32(&bytes[8]), c = get_u32(&bytes[12]);
  if (c < 1 || w > (1u << 16) || h > (1u << 16) || c > 64) throw std::runtime_error("raff: bad header in " + path.string());
  const std::size_t n = static_cast<std::size_t>(w) * h * c;
  if (bytes.size() != 16 + 4 * n) {
    throw std::runtime_error("raff: " + path.string() + " is truncated (" + std::to_string(bytes.size()) +
                             " bytes, expected " + std::to_string(16 + 4 * n) + ")");
  }
  ImageBuffer img(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  for (std::size_t i = 0; i < n; ++i) img.data[i] = std::bit_cast<float>(get_u32(&bytes[16 + 4 * i]));
  return img;
}

void save_image(const std::filesystem::path& path, const ImageBuffer& img) {
  const auto ext = path.extension();
  if (ext == ".png") return write_png(path, img);
  if (ext == ".raff") return write_raff(path, img);
  throw std::invalid_argument("image: unsupported format '" + ext.string() + "'");
}

ImageBuffer load_image(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".png") return read_png(path);
  if (ext == ".raff") return read_raff(path);
  throw std::invalid_argument("image: unsupported format '" + ext.string() + "'");
}

void save_views(const std::filesystem::path& dir, const MultiViewSet& views, const std::string& ext,
                const std::string& prefix) {
  std::filesystem::create_directories(dir);
  CameraRig rig;
  for (std::size_t i = 0; i < views.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%03zu.%s", prefix.c_str(), i, ext.c_str());
    save_image(dir / name, views.views[i].image);
    rig.cameras.push_back(views.views[i].camera);
    rig.file_paths.emplace_back(name);
  }
  if (!rig.cameras.empty()) rig.fov_x = rig.cameras.front().fov_x;
  write_camera_rig(dir / "transforms.json", rig);
}

MultiViewSet load_views(const std::filesystem::path& dir) {
  const CameraRig rig = read_camera_rig(dir / "transforms.json");
  MultiViewSet set;
  for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
    set.views.push_back({load_image(dir / rig.file_paths[i]), rig.cameras[i]});
  }
  return set;
}

ImageBuffer hstack(const std::vector<ImageBuffer>& images, int gap, double fill) {
  if (images.empty()) return {};
  const int h = images.front().height, c = images.front().channels;
  int w = 0;
  for (const auto& im : images) {
    if (im.height != h || im.channels != c) throw std::invalid_argument("hstack: images differ in height or channels");
    w += im.width;
  }
  w += gap * static_cast<int>(images.size() - 1);
  ImageBuffer out(w, h, c, fill);
  int x0 = 0;
  for (const auto& im : images) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < im.width; ++x)
        for (int k = 0; k < c; ++k) out.at(x0 + x, y, k) = im.at(x, y, k);
    x0 += im.width + gap;
  }
  return out;
}

}  // namespace rafe
