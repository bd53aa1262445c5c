// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rafe/field/triplane.hpp"
#include "rafe/numerics/tape.hpp"
#include "rafe/numerics/tensor.hpp"

namespace rafe {

enum class Activation { Softplus, LeakyRelu };

Var apply_activation(Var x, Activation act);

/// Fully connected stack; the activation follows every layer but the last.
class Mlp {
 public:
  struct Bound {
    std::vector<Var> weights;
    std::vector<Var> biases;
  };

  Mlp() = default;
  /// widths = {in, hidden..., out}. Weights and biases start uniform in
  /// +-1/sqrt(fan_in).
  Mlp(std::vector<int> widths, Activation act, std::uint64_t seed);

  Bound bind(Tape& tape);
  /// Binds copies of the values as constants.
  Bound bind_frozen(Tape& tape) const;
  Var forward(const Bound& bound, Var x) const;

  const std::vector<int>& widths() const { return widths_; }
  std::size_t layer_count() const { return weights_.size(); }
  DiffTensor& weight(std::size_t i) { return weights_.at(i); }
  DiffTensor& bias(std::size_t i) { return biases_.at(i); }
  const DiffTensor& weight(std::size_t i) const { return weights_.at(i); }
  const DiffTensor& bias(std::size_t i) const { return biases_.at(i); }

  std::vector<DiffTensor*> params();
  void set_requires_grad(bool flag);
  void fill(double value);

 private:
  std::vector<int> widths_;
  Activation act_ = Activation::Softplus;
  std::vector<DiffTensor> weights_;
  std::vector<DiffTensor> biases_;
};

struct DecoderConfig {
  int feature_channels = 16;
  int color_feature = 15;
  int density_hidden = 64;
  int density_layers = 2;
  int color_hidden = 32;
  int color_layers = 1;
  int dir_frequencies = 4;

  bool operator==(const DecoderConfig&) const = default;
};

/// 3 + 6F values: the direction, then sin(2^k d) and cos(2^k d) for k < F.
int direction_encoding_dim(int frequencies);
void encode_direction(const Vec3& dir, int frequencies, std::span<double> out);

/// M_dens maps a feature to (raw density, color feature); M_color maps the
/// color feature plus the encoded direction to RGB.
class FieldDecoder {
 public:
  struct Bound {
    Mlp::Bound density;
    Mlp::Bound color;
  };
  struct Output {
    Var sigma;  // [P]
    Var rgb;    // [P, 3]
  };

  FieldDecoder() = default;
  FieldDecoder(const DecoderConfig& cfg, std::uint64_t seed);

  const DecoderConfig& config() const { return cfg_; }
  Mlp& density_mlp() { return density_; }
  Mlp& color_mlp() { return color_; }
  const Mlp& density_mlp() const { return density_; }
  const Mlp& color_mlp() const { return color_; }

  Bound bind(Tape& tape);
  Bound bind_frozen(Tape& tape) const;
  /// `features` is [P, C]; `dirs` holds P unit directions (ignored when
  /// use_viewdir is off).
  Output decode(const Bound& bound, Var features, std::span<const Vec3> dirs, bool use_viewdir) const;

  std::vector<DiffTensor*> params();
  void set_requires_grad(bool flag);

 private:
  DecoderConfig cfg_;
  Mlp density_;
  Mlp color_;
};

struct PointSample {
  double sigma = 0.0;
  std::array<double, 3> rgb{};
};

/// Single-point decode. A direction off unit length by more than 1e-6 is
/// normalized with a warning; a zero direction throws.
PointSample decode_point(const FieldDecoder& dec, std::span<const double> feature, const Vec3& dir,
                         bool use_viewdir);

}  // namespace rafe
