// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/degrade/degrade.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "rafe/log.hpp"
#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"

namespace rafe {

double BlurKernel::sum() const {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

ImageBuffer downsample(const ImageBuffer& img, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  const int w = img.width / factor, h = img.height / factor;
  if (w < 1 || h < 1) throw std::invalid_argument("downsample: image smaller than the factor");
  const int x0 = (img.width - w * factor) / 2, y0 = (img.height - h * factor) / 2;
  ImageBuffer out(w, h, img.channels);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) s += img.at(x0 + x * factor + dx, y0 + y * factor + dy, c);
        out.at(x, y, c) = s * inv;
      }
    }
  }
  return out;
}

Camera downsample_camera(const Camera& cam, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample_camera: factor must be >= 1");
  Camera c = cam;
  const int w = (cam.width / factor) * factor;
  const int h = (cam.height / factor) * factor;
  if (w != cam.width) c.fov_x = 2.0 * std::atan(0.5 * w / cam.focal());
  c.width = w / factor;
  c.height = h / factor;
  return c;
}

BlurKernel gaussian_kernel(int radius) {
  if (radius < 0) throw std::invalid_argument("gaussian_kernel: radius must be >= 0");
  if (radius == 0) return {};
  const double sigma = radius / 3.0;
  const int size = 2 * radius + 1;
  std::vector<double> taps(static_cast<std::size_t>(size));
  double s = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - radius;
    taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    s += taps[i];
  }
  for (auto& t : taps) t /= s;
  BlurKernel k;
  k.size = size;
  k.w.resize(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) k.w[static_cast<std::size_t>(y) * size + x] = taps[y] * taps[x];
  return k;
}

BlurKernel box_kernel(int size) {
  if (size < 1) throw std::invalid_argument("box_kernel: size must be >= 1");
  BlurKernel k;
  k.size = size;
  k.w.assign(static_cast<std::size_t>(size) * size, 1.0 / (static_cast<double>(size) * size));
  return k;
}

BlurKernel motion_kernel(int size, std::uint64_t seed) {
  if (size < 3 || size % 2 == 0) throw std::invalid_argument("motion_kernel: size must be odd and >= 3");
  Rng rng = make_rng(seed, {0x6d6f74ULL});
  constexpr int kControl = 6;
  constexpr int kPerSegment = 64;
  std::vector<Vec3> ctrl;
  Vec3 p = Vec3::Zero();
  double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < kControl; ++i) {
    ctrl.push_back(p);
    heading += normal(rng, 0.0, 0.7);
    const double len = uniform(rng, 0.5, 1.5);
    p += Vec3(len * std::cos(heading), len * std::sin(heading), 0.0);
  }
  // Catmull-Rom through the control points, ends clamped.
  std::vector<Vec3> path;
  auto cp = [&](int i) { return ctrl[static_cast<std::size_t>(std::clamp(i, 0, kControl - 1))]; };
  for (int s = 0; s + 1 < kControl; ++s) {
    const Vec3 a = cp(s - 1), b = cp(s), c = cp(s + 1), d = cp(s + 2);
    for (int k = 0; k < kPerSegment; ++k) {
      const double t = static_cast<double>(k) / kPerSegment, t2 = t * t, t3 = t2 * t;
      path.push_back(0.5 * ((2.0 * b) + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 +
                            (-a + 3.0 * b - 3.0 * c + d) * t3));
    }
  }
  path.push_back(ctrl.back());

  Vec3 mean = Vec3::Zero();
  for (const auto& q : path) mean += q;
  mean /= static_cast<double>(path.size());
  double extent = 0.0;
  for (auto& q : path) {
    q -= mean;
    extent = std::max({extent, std::abs(q.x()), std::abs(q.y())});
  }
  const double half = 0.5 * (size - 1);
  const double scale = extent > 0.0 ? (half - 0.5) / extent : 0.0;

  BlurKernel k;
  k.size = size;
  k.w.assign(static_cast<std::size_t>(size) * size, 0.0);
  for (const auto& q : path) {
    const double x = std::clamp(half + q.x() * scale, 0.0, size - 1.0);
    const double y = std::clamp(half + q.y() * scale, 0.0, size - 1.0);
    const int x0 = std::min(static_cast<int>(x), size - 2), y0 = std::min(static_cast<int>(y), size - 2);
    const double fx = x - x0, fy = y - y0;
    k.w[static_cast<std::size_t>(y0) * size + x0] += (1 - fx) * (1 - fy);
    k.w[static_cast<std::size_t>(y0) * size + x0 + 1] += fx * (1 - fy);
    k.w[static_cast<std::size_t>(y0 + 1) * size + x0] += (1 - fx) * fy;
    k.w[static_cast<std::size_t>(y0 + 1) * size + x0 + 1] += fx * fy;
  }
  const double s = k.sum();
  for (auto& v : k.w) v /= s;
  return k;
}

ImageBuffer convolve_blur(const ImageBuffer& img, const BlurKernel& kernel) {
  if (kernel.size < 1 || kernel.size % 2 == 0 ||
      kernel.w.size() != static_cast<std::size_t>(kernel.size) * kernel.size) {
    throw std::invalid_argument("convolve_blur: kernel must be square with odd size");
  }
  for (double v : kernel.w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("convolve_blur: kernel entries must be >= 0");
  }
  std::vector<double> w = kernel.w;
  const double s = kernel.sum();
  if (!(s > 0.0)) throw std::invalid_argument("convolve_blur: kernel sums to zero");
  if (std::abs(s - 1.0) > 1e-9) {
    log::warn("convolve_blur: kernel sums to " + std::to_string(s) + ", normalizing");
    for (auto& v : w) v /= s;
  }
  const int r = kernel.size / 2;
  ImageBuffer out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int ky = -r; ky <= r; ++ky) {
          const auto sy = static_cast<int>(ops::reflect_index(y - ky, img.height));
          for (int kx = -r; kx <= r; ++kx) {
            const double kw = w[static_cast<std::size_t>(ky + r) * kernel.size + (kx + r)];
            if (kw == 0.0) continue;
            const auto sx = static_cast<int>(ops::reflect_index(x - kx, img.width));
            acc += kw * img.at(sx, sy, c);
          }
        }
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

ImageBuffer shot_read_noise(const ImageBuffer& img, double read, double shot, std::uint64_t seed, bool clamp) {
  if (!(read >= 0.0) || !(shot >= 0.0)) throw std::invalid_argument("shot_read_noise: parameters must be >= 0");
  ImageBuffer out = img;
  if (read == 0.0 && shot == 0.0) return out;
  Rng rng = make_rng(seed, {0x6e6f6973ULL});
  std::normal_distribution<double> n01(0.0, 1.0);
  for (double& v : out.data) v += std::sqrt(read * read + shot * shot * v * v) * n01(rng);
  if (clamp) out.clamp01();
  return out;
}

namespace {

constexpr int kLumaTable[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr int kChromaTable[64] = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                  24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                  99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                  99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

double to_byte(double v) { return std::clamp(std::round(v), 0.0, 255.0); }

struct DctBasis {
  double c[8][8];  // c[u][x] = C(u)/2 cos((2x+1) u pi / 16)
  DctBasis() {
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(0.5) : 1.0;
      for (int x = 0; x < 8; ++x) c[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
};

// Quantizes one channel plane (extent a multiple of 8) in place.
void code_plane(std::vector<double>& plane, int w, int h, const int (&base)[64], int quality) {
  static const DctBasis basis;
  int q[64];
  for (int i = 0; i < 64; ++i) q[i] = jpeg_scaled_entry(base[i], quality);
  double blk[8][8], tmp[8][8], coef[8][8];
  for (int by = 0; by < h; by += 8) {
    for (int bx = 0; bx < w; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) blk[y][x] = plane[static_cast<std::size_t>(by + y) * w + bx + x] - 128.0;
      // Forward 2D DCT as two 1D passes.
      for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
          double s = 0.0;
          for (int x = 0; x < 8; ++x) s += basis.c[u][x] * blk[y][x];
          tmp[y][u] = s;
        }
      for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
          double s = 0.0;
          for (int y = 0; y < 8; ++y) s += basis.c[v][y] * tmp[y][u];
          coef[v][u] = std::round(s / q[v * 8 + u]) * q[v * 8 + u];
        }
      // Inverse.
      for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int u = 0; u < 8; ++u) s += basis.c[u][x] * coef[v][u];
          tmp[v][x] = s;
        }
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int v = 0; v < 8; ++v) s += basis.c[v][y] * tmp[v][x];
          plane[static_cast<std::size_t>(by + y) * w + bx + x] = s + 128.0;
        }
    }
  }
}

}  // namespace

int jpeg_scaled_entry(int base, int quality) {
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  return std::clamp((base * scale + 50) / 100, 1, 255);
}

ImageBuffer jpeg_codec(const ImageBuffer& img, int quality) {
  if (quality < 1 || quality > 100) throw std::invalid_argument("jpeg_codec: quality must be in [1, 100]");
  if (img.channels != 3) throw std::invalid_argument("jpeg_codec: expects 3 channels");
  const int w16 = (img.width + 15) / 16 * 16, h16 = (img.height + 15) / 16 * 16;
  const int cw = w16 / 2, ch = h16 / 2;
  std::vector<double> yp(static_cast<std::size_t>(w16) * h16), cbf(yp.size()), crf(yp.size());
  for (int y = 0; y < h16; ++y) {
    for (int x = 0; x < w16; ++x) {
      const int sx = std::min(x, img.width - 1), sy = std::min(y, img.height - 1);
      const double r = to_byte(255.0 * img.at(sx, sy, 0));
      const double g = to_byte(255.0 * img.at(sx, sy, 1));
      const double b = to_byte(255.0 * img.at(sx, sy, 2));
      const std::size_t i = static_cast<std::size_t>(y) * w16 + x;
      yp[i] = to_byte(0.299 * r + 0.587 * g + 0.114 * b);
      cbf[i] = to_byte(-0.168736 * r - 0.331264 * g + 0.5 * b + 128.0);
      crf[i] = to_byte(0.5 * r - 0.418688 * g - 0.081312 * b + 128.0);
    }
  }
  std::vector<double> cb(static_cast<std::size_t>(cw) * ch), cr(cb.size());
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      double sb = 0.0, sr = 0.0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t i = static_cast<std::size_t>(2 * y + dy) * w16 + 2 * x + dx;
          sb += cbf[i];
          sr += crf[i];
        }
      cb[static_cast<std::size_t>(y) * cw + x] = to_byte(0.25 * sb);
      cr[static_cast<std::size_t>(y) * cw + x] = to_byte(0.25 * sr);
    }
  }
  code_plane(yp, w16, h16, kLumaTable, quality);
  code_plane(cb, cw, ch, kChromaTable, quality);
  code_plane(cr, cw, ch, kChromaTable, quality);

  ImageBuffer out(img.width, img.height, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double yy = to_byte(yp[static_cast<std::size_t>(y) * w16 + x]);
      // Triangle-filter chroma upsampling: 9/3/3/1 weights over the nearest
      // sample and its neighbours on the pixel's side.
      const int cx = x / 2, cy = y / 2;
      const int nx = std::clamp(x % 2 ? cx + 1 : cx - 1, 0, cw - 1), ny = std::clamp(y % 2 ? cy + 1 : cy - 1, 0, ch - 1);
      auto up = [&](const std::vector<double>& p) {
        auto s = [&](int u, int v) { return to_byte(p[static_cast<std::size_t>(v) * cw + u]); };
        return (9.0 * s(cx, cy) + 3.0 * s(nx, cy) + 3.0 * s(cx, ny) + s(nx, ny)) / 16.0;
      };
      const double b_ = up(cb) - 128.0, r_ = up(cr) - 128.0;
      out.at(x, y, 0) = to_byte(yy + 1.402 * r_) / 255.0;
      out.at(x, y, 1) = to_byte(yy - 0.344136 * b_ - 0.714136 * r_) / 255.0;
      out.at(x, y, 2) = to_byte(yy + 1.772 * b_) / 255.0;
    }
  }
  return out;
}

void DegradationStage::validate() const {
  switch (kind) {
    case Kind::Downsample:
      if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
      break;
    case Kind::GaussianBlur:
      if (radius < 0) throw std::invalid_argument("gaussian_blur: radius must be >= 0");
      break;
    case Kind::MotionBlur:
      if (kernel_size < 3 || kernel_size % 2 == 0) throw std::invalid_argument("motion_blur: size must be odd and >= 3");
      break;
    case Kind::ShotReadNoise:
      if (!(read >= 0.0) || !(shot >= 0.0)) throw std::invalid_argument("shot_read_noise: parameters must be >= 0");
      break;
    case Kind::Jpeg:
      if (quality < 1 || quality > 100) throw std::invalid_argument("jpeg: quality must be in [1, 100]");
      break;
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

long long parse_int(const std::string& v, const std::string& key) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument("stage key " + key + ": bad integer '" + v + "'");
  return out;
}

double parse_real(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("stage key " + key + ": bad number '" + v + "'");
  return out;
}

std::string real_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DegradationStage parse_stage(std::string_view text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  const std::string name = trim(std::string_view(t).substr(0, colon));
  DegradationStage s;
  using K = DegradationStage::Kind;
  if (name == "downsample") s.kind = K::Downsample;
  else if (name == "gaussian_blur") s.kind = K::GaussianBlur;
  else if (name == "motion_blur") s.kind = K::MotionBlur;
  else if (name == "shot_read_noise") s.kind = K::ShotReadNoise;
  else if (name == "jpeg") s.kind = K::Jpeg;
  else throw std::invalid_argument("unknown degradation stage '" + name + "'");

  if (colon != std::string::npos) {
    std::string_view rest = std::string_view(t).substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string item = trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("stage '" + name + "': expected key=value, got '" + item + "'");
      const std::string key = trim(std::string_view(item).substr(0, eq));
      const std::string val = trim(std::string_view(item).substr(eq + 1));
      if (key == "seed") {
        s.seed = static_cast<std::uint64_t>(parse_int(val, key));
      } else if (s.kind == K::Downsample && key == "factor") {
        s.factor = static_cast<int>(parse_int(val, key));
      } else if (s.kind == K::GaussianBlur && key == "radius") {
        s.radius = static_cast<int>(parse_int(val, key));
      } else if (s.kind == K::MotionBlur && key == "size") {
        s.kernel_size = static_cast<int>(parse_int(val, key));
      } else if (s.kind == K::ShotReadNoise && key == "read") {
        s.read = parse_real(val, key);
      } else if (s.kind == K::ShotReadNoise && key == "shot") {
        s.shot = parse_real(val, key);
      } else if (s.kind == K::ShotReadNoise && key == "std255") {
        s.read = parse_real(val, key) / 255.0;
      } else if (s.kind == K::Jpeg && key == "quality") {
        s.quality = static_cast<int>(parse_int(val, key));
      } else {
        throw std::invalid_argument("stage '" + name + "': unknown key '" + key + "'");
      }
    }
  }
  s.validate();
  return s;
}

std::string format_stage(const DegradationStage& s) {
  using K = DegradationStage::Kind;
  switch (s.kind) {
    case K::Downsample:
      return "downsample:factor=" + std::to_string(s.factor);
    case K::GaussianBlur:
      return "gaussian_blur:radius=" + std::to_string(s.radius);
    case K::MotionBlur:
      return "motion_blur:size=" + std::to_string(s.kernel_size) + ",seed=" + std::to_string(s.seed);
    case K::ShotReadNoise:
      return "shot_read_noise:read=" + real_str(s.read) + ",shot=" + real_str(s.shot) + ",seed=" + std::to_string(s.seed);
    case K::Jpeg:
      return "jpeg:quality=" + std::to_string(s.quality);
  }
  throw std::logic_error("format_stage: unknown kind");
}

ImageBuffer apply_degradation(const ImageBuffer& img, const DegradationConfig& cfg, std::uint64_t view, Camera* cam) {
  using K = DegradationStage::Kind;
  ImageBuffer cur = img;
  for (const auto& s : cfg.stages) {
    s.validate();
    switch (s.kind) {
      case K::Downsample:
        cur = downsample(cur, s.factor);
        if (cam) *cam = downsample_camera(*cam, s.factor);
        break;
      case K::GaussianBlur:
        if (s.radius > 0) cur = convolve_blur(cur, gaussian_kernel(s.radius));
        break;
      case K::MotionBlur: {
        const std::uint64_t seed = cfg.shared_kernel ? s.seed : derive_seed(s.seed, {view});
        cur = convolve_blur(cur, motion_kernel(s.kernel_size, seed));
        break;
      }
      case K::ShotReadNoise:
        cur = shot_read_noise(cur, s.read, s.shot, derive_seed(s.seed, {view}), true);
        break;
      case K::Jpeg:
        cur = jpeg_codec(cur, s.quality);
        break;
    }
    cur.clamp01();
  }
  return cur;
}

DegradationConfig degradation_preset(std::string_view task, SceneKind scene, std::uint64_t seed) {
  using K = DegradationStage::Kind;
  DegradationConfig cfg;
  if (task == "none") return cfg;
  if (task == "sr") {
    cfg.stages.push_back({.kind = K::Downsample, .factor = 4});
  } else if (task == "deblur") {
    cfg.stages.push_back({.kind = K::MotionBlur, .kernel_size = 13, .seed = derive_seed(seed, {1})});
  } else if (task == "denoise") {
    // "gain8"
    cfg.stages.push_back({.kind = K::ShotReadNoise, .read = 0.08, .shot = 0.04, .seed = derive_seed(seed, {2})});
  } else if (task == "mixed") {
    cfg.stages.push_back({.kind = K::GaussianBlur, .radius = scene == SceneKind::Object ? 7 : 3});
    cfg.stages.push_back({.kind = K::ShotReadNoise, .read = 25.0 / 255.0, .shot = 0.0, .seed = derive_seed(seed, {3})});
    cfg.stages.push_back({.kind = K::Jpeg, .quality = 50});
  } else {
    throw std::invalid_argument("unknown degradation task '" + std::string(task) + "'");
  }
  return cfg;
}

WarpField::WarpField(int width, int height, double amplitude, std::uint64_t seed) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("WarpField: empty extent");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("WarpField: amplitude must be >= 0");
  Rng rng = make_rng(seed, {0x77617270ULL});
  constexpr int kWaves = 4;
  auto draw = [&](std::vector<Wave>& out) {
    for (int i = 0; i < kWaves; ++i) {
      out.push_back({uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0), uniform(rng, 0.0, 2.0 * std::numbers::pi),
                     normal(rng)});
    }
  };
  draw(waves_x_);
  draw(waves_y_);
  double ms = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto [dx, dy] = raw(x, y);
      ms += dx * dx + dy * dy;
    }
  }
  ms /= static_cast<double>(width) * height;
  scale_ = ms > 0.0 ? amplitude / std::sqrt(ms) : 0.0;
}

std::pair<double, double> WarpField::raw(double x, double y) const {
  auto sum = [&](const std::vector<Wave>& ws) {
    double s = 0.0;
    for (const auto& w : ws) s += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x / width_ + w.fy * y / height_) + w.phase);
    return s;
  };
  return {sum(waves_x_), sum(waves_y_)};
}

std::pair<double, double> WarpField::at(double x, double y) const {
  const auto [dx, dy] = raw(x, y);
  return {scale_ * dx, scale_ * dy};
}

ImageBuffer oracle_restore(const ImageBuffer& clean, const ImageBuffer& degraded, double amplitude,
                           std::uint64_t seed) {
  require_same_extent(clean, degraded, "oracle_restore");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("oracle_restore: amplitude must be >= 0");
  if (amplitude == 0.0) return clean;
  const WarpField warp(clean.width, clean.height, amplitude, seed);
  Rng rng = make_rng(seed, {0x64657461ULL});
  const double detail = 0.03 * amplitude;
  ImageBuffer out(clean.width, clean.height, clean.channels);
  for (int y = 0; y < clean.height; ++y) {
    for (int x = 0; x < clean.width; ++x) {
      const auto [dx, dy] = warp.at(x, y);
      const double sx = std::clamp(x + dx, 0.0, clean.width - 1.0);
      const double sy = std::clamp(y + dy, 0.0, clean.height - 1.0);
      const int x0 = std::min(static_cast<int>(sx), std::max(clean.width - 2, 0));
      const int y0 = std::min(static_cast<int>(sy), std::max(clean.height - 2, 0));
      const int x1 = std::min(x0 + 1, clean.width - 1), y1 = std::min(y0 + 1, clean.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      const double texture = detail * normal(rng);
      for (int c = 0; c < clean.channels; ++c) {
        const double v = (1 - fx) * (1 - fy) * clean.at(x0, y0, c) + fx * (1 - fy) * clean.at(x1, y0, c) +
                         (1 - fx) * fy * clean.at(x0, y1, c) + fx * fy * clean.at(x1, y1, c);
        out.at(x, y, c) = v + texture;
      }
    }
  }
  out.clamp01();
  return out;
}

}  // namespace rafe
