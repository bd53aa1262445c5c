// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rafe/numerics/ops.hpp"

namespace rafe {

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_extent(a, b, "mse");
  if (a.data.empty()) throw std::invalid_argument("mse: empty images");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

namespace {

constexpr int kSsimWin = 11;

std::vector<double> ssim_taps() {
  std::vector<double> t(kSsimWin);
  double s = 0.0;
  for (int i = 0; i < kSsimWin; ++i) {
    const double d = i - kSsimWin / 2;
    t[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    s += t[i];
  }
  for (auto& v : t) v /= s;
  return t;
}

// Valid-region separable filter of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& p, int w, int h, const std::vector<double>& t) {
  const int k = static_cast<int>(t.size());
  const int ow = w - k + 1, oh = h - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += t[i] * p[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += t[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_extent(a, b, "ssim");
  if (a.width < kSsimWin || a.height < kSsimWin) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  static const std::vector<double> taps = ssim_taps();
  const int w = a.width, h = a.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.data[i * a.channels + c];
      y[i] = b.data[i * b.channels + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, taps), my = filter_valid(y, w, h, taps);
    const auto sxx = filter_valid(xx, w, h, taps), syy = filter_valid(yy, w, h, taps), sxy = filter_valid(xy, w, h, taps);
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
      total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

namespace {

// Every other pixel of an NHWC tensor, starting at (0, 0).
Var decimate2(Var x) {
  const Shape s = x.shape();
  const std::int64_t n = s[0], h = s[1], w = s[2], c = s[3];
  const std::int64_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  auto visit = [=](auto&& fn) {
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx)
          for (std::int64_t ch = 0; ch < c; ++ch)
            fn(((b * oh + y) * ow + xx) * c + ch, ((b * h + 2 * y) * w + 2 * xx) * c + ch);
  };
  return ops::linear_map(
      "decimate2", x, {n, oh, ow, c},
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[o] += in[i]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i) { out[i] += in[o]; });
      });
}

// Forward difference along axis 1 (vertical) or 2 (horizontal) of [N, H, W, 1].
Var forward_diff(Var x, int axis) {
  const Shape s = x.shape();
  const std::int64_t n = s[0], h = s[1], w = s[2];
  const std::int64_t oh = axis == 1 ? h - 1 : h, ow = axis == 2 ? w - 1 : w;
  const std::int64_t step = axis == 1 ? w : 1;
  auto visit = [=](auto&& fn) {
    for (std::int64_t b = 0; b < n; ++b)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx) {
          const std::int64_t i = (b * h + y) * w + xx;
          fn((b * oh + y) * ow + xx, i, i + step);
        }
  };
  return ops::linear_map(
      "forward_diff", x, {n, oh, ow, 1},
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i0, std::int64_t i1) { out[o] += in[i1] - in[i0]; });
      },
      [visit](std::span<const double> in, std::span<double> out) {
        visit([&](std::int64_t o, std::int64_t i0, std::int64_t i1) {
          out[i1] += in[o];
          out[i0] -= in[o];
        });
      });
}

Var luminance(Var x) {
  const Shape s = x.shape();
  if (s.size() != 4 || s[3] != 3) throw std::invalid_argument("perceptual_proxy: expected [N, H, W, 3], got " + shape_str(s));
  Tape& t = *x.tape;
  Var flat = ops::reshape(x, {s[0] * s[1] * s[2], 3});
  Var wts = t.input({3, 1}, {0.299, 0.587, 0.114});
  return ops::reshape(ops::matmul(flat, wts), {s[0], s[1], s[2], 1});
}

}  // namespace

Var perceptual_proxy(Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("perceptual_proxy: extent mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  static const std::vector<double> binomial{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  Var level = luminance(ops::sub(a, b));
  Var total;
  for (int l = 0; l < kProxyLevels; ++l) {
    if (l > 0) {
      if (level.shape()[1] < 2 && level.shape()[2] < 2) break;
      level = decimate2(ops::blur_separable(level, binomial));
    }
    Var term = ops::mean_square(level);
    if (level.shape()[2] >= 2) term = ops::add(term, ops::mean_square(forward_diff(level, 2)));
    if (level.shape()[1] >= 2) term = ops::add(term, ops::mean_square(forward_diff(level, 1)));
    term = ops::scale(term, 1.0 / kProxyLevels);
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

double perceptual_proxy(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_extent(a, b, "perceptual_proxy");
  Tape t;
  Tape::NoGradGuard ng(t);
  return perceptual_proxy(image_to_var(t, a), image_to_var(t, b)).item();
}

double hf_energy(const ImageBuffer& img) {
  if (img.width < 3 || img.height < 3) return 0.0;
  double s = 0.0;
  std::size_t n = 0;
  for (int y = 1; y + 1 < img.height; ++y)
    for (int x = 1; x + 1 < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double l = img.at(x - 1, y, c) + img.at(x + 1, y, c) + img.at(x, y - 1, c) + img.at(x, y + 1, c) -
                         4.0 * img.at(x, y, c);
        s += l * l;
        ++n;
      }
  return s / static_cast<double>(n);
}

DistanceFn proxy_distance() {
  return {"proxy", [](const ImageBuffer& a, const ImageBuffer& b) { return perceptual_proxy(a, b); }};
}

DistanceFn mse_distance() {
  return {"mse", [](const ImageBuffer& a, const ImageBuffer& b) { return mse(a, b); }};
}

double diversity_score(const std::vector<ImageBuffer>& images, const DistanceFn& d) {
  if (images.size() < 2) throw std::invalid_argument("diversity_score: need at least two images");
  for (const auto& im : images) require_same_extent(images.front(), im, "diversity_score");
  const std::size_t n = images.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i * n + j] = dist[j * n + i] = d(images[i], images[j]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) m = std::min(m, dist[i * n + j]);
    total += m;
  }
  return total / static_cast<double>(n);
}

Var image_to_var(Tape& tape, const ImageBuffer& img, bool requires_grad) {
  return tape.input({1, img.height, img.width, img.channels}, img.data, requires_grad);
}

ImageBuffer var_to_image(Var v, std::int64_t batch_index) {
  const Shape& s = v.shape();
  if (s.size() != 4) throw std::invalid_argument("var_to_image: expected NHWC, got " + shape_str(s));
  ImageBuffer img(static_cast<int>(s[2]), static_cast<int>(s[1]), static_cast<int>(s[3]));
  const auto per = static_cast<std::size_t>(s[1] * s[2] * s[3]);
  const auto vals = v.value();
  std::copy(vals.begin() + static_cast<std::ptrdiff_t>(batch_index * per),
            vals.begin() + static_cast<std::ptrdiff_t>((batch_index + 1) * per), img.data.begin());
  return img;
}

}  // namespace rafe
