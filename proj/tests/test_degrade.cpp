// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "image_fixtures.hpp"
#include "rafe/degrade/degrade.hpp"
#include "rafe/log.hpp"
#include "rafe/metrics/metrics.hpp"

using namespace rafe;

namespace {

struct QuietLog {
  log::Level prev = log::level();
  QuietLog() { log::set_level(log::Level::Off); }
  ~QuietLog() { log::set_level(prev); }
};

// Mean squared neighbour difference across 8x8 block seams divided by the
// same inside blocks.
double blockiness(const ImageBuffer& img) {
  double edge = 0, inner = 0;
  long ne = 0, ni = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x + 1 < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = img.at(x + 1, y, c) - img.at(x, y, c);
        if (x % 8 == 7) {
          edge += d * d;
          ++ne;
        } else {
          inner += d * d;
          ++ni;
        }
      }
  for (int y = 0; y + 1 < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double d = img.at(x, y + 1, c) - img.at(x, y, c);
        if (y % 8 == 7) {
          edge += d * d;
          ++ne;
        } else {
          inner += d * d;
          ++ni;
        }
      }
  return (edge / ne) / (inner / ni);
}

}  // namespace

TEST_CASE("downsample") {
  const auto img = testutil::natural_image(12, 8, 1);
  CHECK(downsample(img, 1).data == img.data);

  ImageBuffer blocks(4, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) blocks.at(x, y, c) = 0.25 * ((x / 2) + 2 * (y / 2));
  const auto d = downsample(blocks, 2);
  CHECK(d.width == 2);
  CHECK(d.at(0, 0, 0) == 0.0);
  CHECK(d.at(1, 0, 1) == 0.25);
  CHECK(d.at(0, 1, 2) == 0.5);
  CHECK(d.at(1, 1, 0) == 0.75);

  const auto big = downsample(ImageBuffer(256, 256, 3, 0.5), 4);
  CHECK(big.width == 64);
  CHECK(big.height == 64);

  // 10x9 at factor 4 crops the central 8x8.
  const auto odd = testutil::random_image(10, 9, 2);
  const auto od = downsample(odd, 4);
  CHECK(od.width == 2);
  CHECK(od.height == 2);
  double s = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) s += odd.at(1 + x, 0 + y, 0);
  CHECK(od.at(0, 0, 0) == doctest::Approx(s / 16));
  CHECK_THROWS_AS(downsample(img, 0), std::invalid_argument);

  Camera cam;
  cam.width = 10;
  cam.height = 9;
  cam.fov_x = 1.0;
  const Camera dc = downsample_camera(cam, 4);
  CHECK(dc.width == 2);
  CHECK(dc.height == 2);
  // Same focal length in original pixels: the crop narrows the view.
  CHECK(dc.focal() * 4 == doctest::Approx(cam.focal()).epsilon(1e-12));
}

TEST_CASE("convolution basics") {
  const auto img = testutil::natural_image(20, 14, 3);
  CHECK(convolve_blur(img, BlurKernel{}).data == img.data);

  const auto flat = testutil::constant_image(15, 11, 0.2, 0.5, 0.9);
  for (int r : {1, 3, 7}) {
    const auto out = convolve_blur(flat, gaussian_kernel(r));
    for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] == doctest::Approx(flat.data[i]).epsilon(1e-15));
  }

  // Step edge under a 3x3 box: ramp 0, 1/3, 2/3, 1.
  ImageBuffer step(8, 5, 3);
  for (int y = 0; y < 5; ++y)
    for (int x = 4; x < 8; ++x)
      for (int c = 0; c < 3; ++c) step.at(x, y, c) = 1.0;
  const auto ramp = convolve_blur(step, box_kernel(3));
  for (int y = 0; y < 5; ++y) {
    CHECK(ramp.at(2, y, 0) == doctest::Approx(0.0));
    CHECK(ramp.at(3, y, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(ramp.at(4, y, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(ramp.at(5, y, 0) == doctest::Approx(1.0));
    // Reflect padding keeps the borders flat.
    CHECK(ramp.at(0, y, 0) == 0.0);
    CHECK(ramp.at(7, y, 0) == doctest::Approx(1.0));
  }

  BlurKernel unnorm = box_kernel(3);
  for (auto& v : unnorm.w) v *= 2.0;
  QuietLog quiet;
  const long before = log::warning_count();
  const auto a = convolve_blur(step, unnorm);
  CHECK(log::warning_count() == before + 1);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == doctest::Approx(ramp.data[i]).epsilon(1e-14));
  BlurKernel neg = box_kernel(3);
  neg.w[0] = -0.1;
  CHECK_THROWS_AS(convolve_blur(step, neg), std::invalid_argument);
}

TEST_CASE("gaussian kernel") {
  const auto k = gaussian_kernel(7);
  CHECK(k.size == 15);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // sigma = 7/3: ratio between the center and one tap off on the axis.
  CHECK(k.at(7, 7) / k.at(8, 7) == doctest::Approx(std::exp(0.5 / (7.0 / 3.0 * 7.0 / 3.0))).epsilon(1e-12));
  CHECK(gaussian_kernel(0).size == 1);
}

TEST_CASE("motion kernels") {
  const auto k = motion_kernel(13, 42);
  CHECK(k.size == 13);
  double s = 0.0;
  for (double v : k.w) {
    CHECK(v >= 0.0);
    s += v;
  }
  CHECK(std::abs(s - 1.0) < 1e-12);
  CHECK(motion_kernel(13, 42).w == k.w);
  CHECK(motion_kernel(13, 43).w != k.w);
  CHECK_THROWS_AS(motion_kernel(12, 1), std::invalid_argument);
  CHECK_THROWS_AS(motion_kernel(1, 1), std::invalid_argument);

  // An impulse reproduces the kernel (true convolution, not correlation).
  ImageBuffer impulse(31, 31, 3);
  for (int c = 0; c < 3; ++c) impulse.at(15, 15, c) = 1.0;
  const auto out = convolve_blur(impulse, k);
  for (int y = 0; y < 13; ++y)
    for (int x = 0; x < 13; ++x) CHECK(out.at(15 - 6 + x, 15 - 6 + y, 0) == doctest::Approx(k.at(x, y)).epsilon(1e-14));
}

TEST_CASE("shot and read noise") {
  const auto img = testutil::natural_image(16, 16, 4);
  CHECK(shot_read_noise(img, 0.0, 0.0, 1).data == img.data);

  ImageBuffer mid(1000, 1000, 1, 0.5);
  const auto n = shot_read_noise(mid, 0.1, 0.2, 7, false);
  double s = 0, s2 = 0;
  for (double v : n.data) {
    s += v;
    s2 += v * v;
  }
  const double cnt = static_cast<double>(n.data.size());
  const double var = s2 / cnt - (s / cnt) * (s / cnt);
  CHECK(std::abs(var - 0.02) < 0.02 * 0.02);

  const auto clamped = shot_read_noise(img, 0.3, 0.1, 9);
  for (double v : clamped.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(shot_read_noise(img, 0.3, 0.1, 9).data == clamped.data);
  CHECK(shot_read_noise(img, 0.3, 0.1, 10).data != clamped.data);

  const auto gain8 = degradation_preset("denoise", SceneKind::Object, 1);
  REQUIRE(gain8.stages.size() == 1);
  CHECK(gain8.stages[0].read == 0.08);
  CHECK(gain8.stages[0].shot == 0.04);
}

TEST_CASE("jpeg codec") {
  // Band-limited, as a camera image would be.
  const auto nat = convolve_blur(testutil::natural_image(64, 48, 5), gaussian_kernel(2));
  CHECK(psnr(jpeg_codec(nat, 100), nat) >= 40.0);

  const auto flat = testutil::constant_image(24, 17, 0.3, 0.6, 0.7);
  for (int q : {10, 50, 100}) {
    const auto out = jpeg_codec(flat, q);
    for (std::size_t i = 3; i < out.data.size(); ++i) CHECK(out.data[i] == out.data[i % 3]);
    const double tol = (q == 100 ? 1.0 : 10.0) / 255.0;
    for (int c = 0; c < 3; ++c) CHECK(std::abs(out.data[c] - flat.data[c]) < tol);
  }

  // Coding error jumps at block seams more than inside blocks.
  auto error = [&](int q) {
    auto e = jpeg_codec(nat, q);
    for (std::size_t i = 0; i < e.data.size(); ++i) e.data[i] -= nat.data[i];
    return e;
  };
  CHECK(blockiness(error(50)) > 1.0);
  CHECK(blockiness(error(50)) > blockiness(error(100)));
  CHECK(psnr(jpeg_codec(nat, 50), nat) < psnr(jpeg_codec(nat, 100), nat));

  CHECK(jpeg_scaled_entry(16, 50) == 16);
  CHECK(jpeg_scaled_entry(16, 100) == 1);
  CHECK(jpeg_scaled_entry(16, 25) == 32);
  CHECK(jpeg_scaled_entry(99, 1) == 255);
  CHECK_THROWS_AS(jpeg_codec(nat, 0), std::invalid_argument);
  CHECK_THROWS_AS(jpeg_codec(nat, 101), std::invalid_argument);
}

TEST_CASE("mixed preset and stage strings") {
  const auto obj = degradation_preset("mixed", SceneKind::Object, 3);
  REQUIRE(obj.stages.size() == 3);
  CHECK(obj.stages[0].kind == DegradationStage::Kind::GaussianBlur);
  CHECK(obj.stages[0].radius == 7);
  CHECK(obj.stages[1].kind == DegradationStage::Kind::ShotReadNoise);
  CHECK(obj.stages[1].read == doctest::Approx(0.098).epsilon(1e-3));
  CHECK(obj.stages[1].shot == 0.0);
  CHECK(obj.stages[2].kind == DegradationStage::Kind::Jpeg);
  CHECK(obj.stages[2].quality == 50);
  CHECK(degradation_preset("mixed", SceneKind::ForwardFacing, 3).stages[0].radius == 3);
  CHECK(degradation_preset("deblur", SceneKind::Object, 3).stages[0].kernel_size == 13);
  CHECK(degradation_preset("sr", SceneKind::Object, 3).stages[0].factor == 4);

  const auto img = testutil::natural_image(16, 16, 2);
  CHECK(apply_degradation(img, degradation_preset("none", SceneKind::Object, 0), 0).data == img.data);

  for (const auto& s : obj.stages) CHECK(parse_stage(format_stage(s)) == s);
  const auto p = parse_stage("gaussian_blur:radius=7");
  CHECK(p.radius == 7);
  CHECK(parse_stage(" shot_read_noise : std255=25, seed=4 ").read == doctest::Approx(25.0 / 255.0));
  CHECK_THROWS_AS(parse_stage("sharpen:amount=2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_stage("jpeg:quality=0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_stage("jpeg:radius=2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_stage("downsample:factor=x"), std::invalid_argument);
}

TEST_CASE("single stages degrade; zero strength is the identity; reruns match") {
  const auto img = testutil::natural_image(32, 32, 9);
  using K = DegradationStage::Kind;
  const std::vector<DegradationStage> strong{{.kind = K::GaussianBlur, .radius = 2},
                                             {.kind = K::MotionBlur, .kernel_size = 7, .seed = 3},
                                             {.kind = K::ShotReadNoise, .read = 0.05, .shot = 0.02, .seed = 4},
                                             {.kind = K::Jpeg, .quality = 30}};
  for (const auto& s : strong) {
    DegradationConfig cfg{{s}, false};
    const auto out = apply_degradation(img, cfg, 2);
    CHECK(psnr(out, img) < kPsnrCap);
    CHECK(apply_degradation(img, cfg, 2).data == out.data);
  }
  const std::vector<DegradationStage> zero{{.kind = K::Downsample, .factor = 1},
                                           {.kind = K::GaussianBlur, .radius = 0},
                                           {.kind = K::ShotReadNoise, .read = 0.0, .shot = 0.0, .seed = 4}};
  for (const auto& s : zero) CHECK(apply_degradation(img, {{s}, false}, 0).data == img.data);

  // Per-view noise differs across views; shared motion blur does not.
  DegradationConfig noise{{strong[2]}, false};
  CHECK(apply_degradation(img, noise, 0).data != apply_degradation(img, noise, 1).data);
  DegradationConfig shared{{strong[1]}, true}, per_view{{strong[1]}, false};
  CHECK(apply_degradation(img, shared, 0).data == apply_degradation(img, shared, 1).data);
  CHECK(apply_degradation(img, per_view, 0).data != apply_degradation(img, per_view, 1).data);

  // Downsampling stages update the camera.
  Camera cam;
  cam.width = 32;
  cam.height = 32;
  const auto sr = apply_degradation(img, degradation_preset("sr", SceneKind::Object, 0), 0, &cam);
  CHECK(sr.width == 8);
  CHECK(cam.width == 8);
}

TEST_CASE("oracle restorer") {
  const auto clean = testutil::natural_image(40, 32, 11);
  const auto degraded = convolve_blur(clean, gaussian_kernel(2));
  CHECK(oracle_restore(clean, degraded, 0.0, 5).data == clean.data);
  CHECK(oracle_restore(clean, degraded, 1.0, 5).data == oracle_restore(clean, degraded, 1.0, 5).data);
  CHECK(oracle_restore(clean, degraded, 1.0, 5).data != oracle_restore(clean, degraded, 1.0, 6).data);
  CHECK_THROWS_AS(oracle_restore(clean, ImageBuffer(39, 32, 3), 1.0, 5), std::invalid_argument);

  // RMS of the warp field over 10^5 random positions.
  const WarpField warp(40, 32, 1.0, 77);
  auto rng = make_rng(8);
  double ms = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto [dx, dy] = warp.at(uniform(rng, 0, 40), uniform(rng, 0, 32));
    ms += dx * dx + dy * dy;
  }
  CHECK(std::abs(std::sqrt(ms / n) - 1.0) < 0.05);

  // Pairwise proxy distance among restorations grows with the amplitude.
  double prev = 0.0;
  for (double a : {0.25, 0.5, 1.0, 2.0}) {
    std::vector<ImageBuffer> views;
    for (std::uint64_t s = 1; s <= 4; ++s) views.push_back(oracle_restore(clean, degraded, a, s));
    double d = 0.0;
    for (std::size_t i = 0; i < views.size(); ++i)
      for (std::size_t j = i + 1; j < views.size(); ++j) d += perceptual_proxy(views[i], views[j]);
    CHECK(d > prev);
    prev = d;
  }
}
