// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rafe/image.hpp"
#include "rafe/render/camera.hpp"

namespace rafe {

/// Square blur kernel, row-major, centered at (size/2, size/2).
struct BlurKernel {
  int size = 1;
  std::vector<double> w{1.0};

  double at(int x, int y) const { return w[static_cast<std::size_t>(y) * size + x]; }
  double sum() const;
};

/// Box-filter average over factor x factor blocks. Extents that are not
/// multiples of the factor are center-cropped first.
ImageBuffer downsample(const ImageBuffer& img, int factor);
/// Camera matching `downsample`: the crop narrows the FOV, then the extent shrinks.
Camera downsample_camera(const Camera& cam, int factor);

/// sigma = radius / 3 sampled on 2r+1 taps; radius 0 is the identity.
BlurKernel gaussian_kernel(int radius);
BlurKernel box_kernel(int size);
/// Random smooth camera-shake path (Catmull-Rom through random control
/// points) splatted bilinearly into size x size texels, normalized to sum 1.
BlurKernel motion_kernel(int size, std::uint64_t seed);

/// True 2D convolution with reflect padding. Negative entries throw; a
/// kernel not summing to 1 is normalized with a warning.
ImageBuffer convolve_blur(const ImageBuffer& img, const BlurKernel& kernel);

/// Per-pixel Gaussian with variance read^2 + shot^2 * I^2.
ImageBuffer shot_read_noise(const ImageBuffer& img, double read, double shot, std::uint64_t seed, bool clamp = true);

/// Baseline JPEG reconstruction: 8-bit input, YCbCr 4:2:0, 8x8 DCT, IJG
/// scaled standard tables. Entropy coding is skipped (it is lossless).
ImageBuffer jpeg_codec(const ImageBuffer& img, int quality);
/// IJG quality scaling of a base table entry.
int jpeg_scaled_entry(int base, int quality);

struct DegradationStage {
  enum class Kind { Downsample, GaussianBlur, MotionBlur, ShotReadNoise, Jpeg };
  Kind kind = Kind::GaussianBlur;
  int factor = 1;
  int radius = 0;
  int kernel_size = 13;
  double read = 0.0;
  double shot = 0.0;
  int quality = 100;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DegradationStage&) const = default;
};

/// "name:key=value,key=value" with names downsample, gaussian_blur,
/// motion_blur, shot_read_noise, jpeg. `format_stage` writes every field
/// so the string pins the stage down.
DegradationStage parse_stage(std::string_view text);
std::string format_stage(const DegradationStage& stage);

struct DegradationConfig {
  std::vector<DegradationStage> stages;
  /// Motion blur: one kernel for all views, else a fresh seed per view.
  bool shared_kernel = false;
};

/// Applies the stages in order, clamping after each. `view` selects the
/// per-view noise (and kernel) seeds; `cam`, when given, is updated for
/// downsampling stages.
ImageBuffer apply_degradation(const ImageBuffer& img, const DegradationConfig& cfg, std::uint64_t view,
                              Camera* cam = nullptr);

enum class SceneKind { Object, ForwardFacing };

/// Task presets: "sr", "deblur", "denoise", "mixed", or "none".
DegradationConfig degradation_preset(std::string_view task, SceneKind scene, std::uint64_t seed);

/// Smooth random displacement field (sum of a few random plane waves per
/// axis) scaled so its RMS magnitude over the pixel grid equals `amplitude`.
class WarpField {
 public:
  WarpField(int width, int height, double amplitude, std::uint64_t seed);
  /// Displacement in pixels at continuous pixel coordinates.
  std::pair<double, double> at(double x, double y) const;

 private:
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::pair<double, double> raw(double x, double y) const;

  int width_, height_;
  double scale_ = 0.0;
  std::vector<Wave> waves_x_, waves_y_;
};

/// Stand-in for a per-view 2D restorer: the clean view warped by a
/// WarpField of RMS `amplitude` px plus fine texture noise of size
/// 0.03 * amplitude. amplitude = 0 returns `clean` unchanged.
ImageBuffer oracle_restore(const ImageBuffer& clean, const ImageBuffer& degraded, double amplitude,
                           std::uint64_t seed);

}  // namespace rafe
