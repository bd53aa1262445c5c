// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "image_fixtures.hpp"
#include "rafe/degrade/degrade.hpp"
#include "rafe/metrics/metrics.hpp"
#include "rafe/numerics/gradcheck.hpp"
#include "rafe/numerics/ops.hpp"
#include "test_util.hpp"

using namespace rafe;

namespace {

// Reference SSIM: explicit 2D window sums at every valid position.
double ssim_reference(const ImageBuffer& a, const ImageBuffer& b) {
  double g[11][11], s = 0.0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      g[y][x] = std::exp(-((x - 5) * (x - 5) + (y - 5) * (y - 5)) / (2 * 2.25));
      s += g[y][x];
    }
  double total = 0.0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c)
    for (int y0 = 0; y0 + 11 <= a.height; ++y0)
      for (int x0 = 0; x0 + 11 <= a.width; ++x0) {
        double ma = 0, mb = 0;
        for (int y = 0; y < 11; ++y)
          for (int x = 0; x < 11; ++x) {
            ma += g[y][x] / s * a.at(x0 + x, y0 + y, c);
            mb += g[y][x] / s * b.at(x0 + x, y0 + y, c);
          }
        double va = 0, vb = 0, cov = 0;
        for (int y = 0; y < 11; ++y)
          for (int x = 0; x < 11; ++x) {
            const double da = a.at(x0 + x, y0 + y, c) - ma, db = b.at(x0 + x, y0 + y, c) - mb;
            va += g[y][x] / s * da * da;
            vb += g[y][x] / s * db * db;
            cov += g[y][x] / s * da * db;
          }
        const double c1 = 1e-4, c2 = 9e-4;
        total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
  return total / count;
}

ImageBuffer checkerboard(int w, int h, int pitch) {
  ImageBuffer img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = ((x / pitch + y / pitch) % 2) ? 1.0 : 0.0;
  return img;
}

}  // namespace

TEST_CASE("psnr") {
  const auto a = testutil::natural_image(32, 24, 1);
  CHECK(psnr(a, a) == kPsnrCap);

  ImageBuffer x(16, 16, 3, 100.0), y(16, 16, 3, 101.0);
  CHECK(psnr(x, y, 255.0) == doctest::Approx(48.1308).epsilon(1e-5));
  CHECK(psnr(x, y, 255.0) == doctest::Approx(10.0 * std::log10(255.0 * 255.0)).epsilon(1e-14));

  // Uniform noise on [-h, h] has variance h^2 / 3.
  ImageBuffer clean(512, 512, 3, 0.5), noisy = clean;
  auto rng = make_rng(3);
  const double hw = 0.1;
  for (auto& v : noisy.data) v += uniform(rng, -hw, hw);
  CHECK(std::abs(psnr(clean, noisy) - 10.0 * std::log10(3.0 / (hw * hw))) < 0.1);

  CHECK_THROWS_AS(psnr(a, ImageBuffer(31, 24, 3)), std::invalid_argument);
}

TEST_CASE("ssim against a direct windowed reference") {
  const auto a = testutil::natural_image(24, 20, 2);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  const auto ca = testutil::constant_image(16, 16, 0.3, 0.6, 0.7);
  const auto cb = testutil::constant_image(16, 16, 0.8, 1.0, 1.0);  // a + 0.5 clamped
  CHECK(std::abs(ssim(ca, cb) - ssim_reference(ca, cb)) < 1e-6);

  auto noisy = a;
  auto rng = make_rng(5);
  for (auto& v : noisy.data) v = std::clamp(v + normal(rng, 0.0, 0.1), 0.0, 1.0);
  CHECK(std::abs(ssim(a, noisy) - ssim_reference(a, noisy)) < 1e-9);
  CHECK(ssim(a, noisy) == ssim(noisy, a));
  CHECK(ssim(a, noisy) < 1.0);

  CHECK_THROWS_AS(ssim(ImageBuffer(10, 20, 3), ImageBuffer(10, 20, 3)), std::invalid_argument);
}

TEST_CASE("perceptual proxy is a distance") {
  const auto a = testutil::natural_image(32, 32, 3);
  const auto b = testutil::random_image(32, 32, 4);
  CHECK(perceptual_proxy(a, a) == 0.0);
  CHECK(perceptual_proxy(a, b) == perceptual_proxy(b, a));
  CHECK(perceptual_proxy(a, b) > 0.0);
  // Odd extents go through the pyramid too.
  const auto c = testutil::natural_image(21, 15, 6);
  CHECK(perceptual_proxy(c, testutil::random_image(21, 15, 7)) > 0.0);
  CHECK_THROWS_AS(perceptual_proxy(a, c), std::invalid_argument);
}

TEST_CASE("perceptual proxy gradient matches finite differences") {
  DiffTensor a({2, 12, 10, 3}, testutil::random_values(1, 720, 0.5));
  const auto bv = testutil::random_values(2, 720, 0.5);
  auto loss = [&](Tape& t) { return perceptual_proxy(t.param(a), t.input({2, 12, 10, 3}, bv)); };
  const auto r = finite_diff_check(loss, {&a}, {.max_coordinates = 200, .seed = 3});
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("perceptual proxy grows with blur strength") {
  const auto a = testutil::natural_image(48, 48, 8);
  double prev = 0.0;
  for (int r = 1; r <= 5; ++r) {
    const double d = perceptual_proxy(a, convolve_blur(a, gaussian_kernel(r)));
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("hf_energy") {
  CHECK(hf_energy(testutil::constant_image(9, 9, 0.2, 0.4, 0.6)) == 0.0);
  const double checker = hf_energy(checkerboard(16, 16, 1));
  CHECK(checker == doctest::Approx(16.0));  // |Laplacian| = 4 at every pixel
  CHECK(checker > hf_energy(checkerboard(16, 16, 2)));
  CHECK(checker > hf_energy(testutil::random_image(16, 16, 1)));
  CHECK(checker > hf_energy(testutil::natural_image(16, 16, 1)));
  ImageBuffer stripes(16, 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) stripes.at(x, y, c) = x % 2;
  CHECK(checker > hf_energy(stripes));

  for (std::uint64_t seed : {1, 2, 3}) {
    const auto img = seed == 3 ? testutil::natural_image(40, 30, seed) : testutil::random_image(40, 30, seed);
    double prev = hf_energy(img);
    for (int r = 1; r <= 5; ++r) {
      const double e = hf_energy(convolve_blur(img, gaussian_kernel(r)));
      CHECK(e < prev);
      prev = e;
    }
  }
}

TEST_CASE("diversity score follows the nearest-neighbour average") {
  const auto a = testutil::natural_image(16, 16, 1);
  CHECK(diversity_score({a, a, a}, proxy_distance()) == 0.0);

  const auto b = testutil::random_image(16, 16, 2);
  CHECK(diversity_score({a, b}, proxy_distance()) == perceptual_proxy(a, b));

  // Images tagged by their first pixel; d(x,y)=1, d(x,z)=2, d(y,z)=3.
  auto tagged = [](double t) { return ImageBuffer(2, 2, 3, t); };
  DistanceFn table{"table", [](const ImageBuffer& p, const ImageBuffer& q) {
                     const int i = static_cast<int>(p.data[0]), j = static_cast<int>(q.data[0]);
                     if (i == j) return 0.0;
                     const int lo = std::min(i, j), hi = std::max(i, j);
                     return lo == 0 ? (hi == 1 ? 1.0 : 2.0) : 3.0;
                   }};
  CHECK(diversity_score({tagged(0), tagged(1), tagged(2)}, table) == doctest::Approx(4.0 / 3.0));
  CHECK(diversity_score({tagged(2), tagged(0), tagged(1)}, table) == doctest::Approx(4.0 / 3.0));
  DistanceFn scaled{"scaled", [&](const ImageBuffer& p, const ImageBuffer& q) { return 2.5 * table(p, q); }};
  CHECK(diversity_score({tagged(0), tagged(1), tagged(2)}, scaled) == doctest::Approx(2.5 * 4.0 / 3.0));

  CHECK_THROWS_AS(diversity_score({a}, proxy_distance()), std::invalid_argument);
}
