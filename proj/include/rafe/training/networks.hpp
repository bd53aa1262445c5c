// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rafe/field/decoder.hpp"
#include "rafe/field/triplane.hpp"
#include "rafe/numerics/checkpoint.hpp"
#include "rafe/numerics/tape.hpp"

namespace rafe {

struct GeneratorConfig {
  int z_dim = 64;
  int w_dim = 64;
  int mapping_layers = 2;
  /// Channels of the learned 8x8 constant and the synthesis stack.
  int base_channels = 16;
  /// Output plane resolution, 8 * 2^k.
  int resolution = 32;
  /// Output channels; must match the coarse planes.
  int channels = 16;
  /// Multiplies the final projection so the residual starts small.
  double output_scale = 0.1;

  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

/// Latent-conditioned residual tri-plane generator.
///
/// z goes through the mapping MLP to w. Each plane has its own stack: a
/// learned 8x8 constant, then per stage {nearest x2, 3x3 conv, per-channel
/// affine modulation (1 + a(w), b(w)), leaky ReLU}, and a final 1x1
/// projection to the plane channels.
class Generator {
 public:
  struct Stage {
    DiffTensor conv_w, conv_b, mod_w, mod_b;
  };
  struct PlaneStack {
    DiffTensor constant;
    std::vector<Stage> stages;
    DiffTensor out_w, out_b;
  };
  struct Bound {
    Mlp::Bound mapping;
    struct StageVars {
      Var conv_w, conv_b, mod_w, mod_b;
    };
    struct PlaneVars {
      Var constant;
      std::vector<StageVars> stages;
      Var out_w, out_b;
    };
    std::array<PlaneVars, 3> planes;
  };

  Generator() = default;
  Generator(const GeneratorConfig& cfg, std::uint64_t seed);

  const GeneratorConfig& config() const { return cfg_; }
  int stage_count() const;

  Bound bind(Tape& tape);
  Bound bind_frozen(Tape& tape) const;
  /// Three [R, R, C] planes for one latent z (z_dim values).
  std::array<Var, 3> synthesize(const Bound& bound, std::span<const double> z) const;
  /// Plain evaluation into a TriPlaneSet.
  TriPlaneSet sample(std::span<const double> z, const DomainBounds& bounds = {}) const;

  std::vector<DiffTensor*> params();
  void set_requires_grad(bool flag);
  std::vector<NamedTensorRef> named_tensors() const;
  /// Overwrites values from a checkpoint; shapes must match.
  void load_tensors(const std::vector<NamedTensor>& tensors);

  Mlp& mapping() { return mapping_; }
  const PlaneStack& plane_stack(int k) const { return stacks_.at(static_cast<std::size_t>(k)); }

 private:
  GeneratorConfig cfg_;
  Mlp mapping_;
  std::array<PlaneStack, 3> stacks_;
};

/// Standard normal latent of length dim.
std::vector<double> sample_latent(int dim, std::uint64_t seed);

struct DiscriminatorConfig {
  /// Input patch side, 4 * 2^k.
  int patch = 16;
  int channels = 16;
  int hidden = 32;
  int mbstd_group = 4;

  void validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

/// Patch discriminator: 3x3 conv from RGB, then {3x3 conv, leaky ReLU, 2x2
/// average pool} down to 4x4, a minibatch-stddev channel, one more 3x3 conv
/// and a two-layer dense head to one logit per patch.
class Discriminator {
 public:
  struct Bound {
    std::vector<Var> conv_w, conv_b;
    Var fc1_w, fc1_b, fc2_w, fc2_b;
  };

  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return cfg_; }

  Bound bind(Tape& tape);
  Bound bind_frozen(Tape& tape) const;
  /// [B, S, S, 3] pixels in [0, 1] -> [B] logits.
  Var forward(const Bound& bound, Var x) const;

  std::vector<DiffTensor*> params();
  void set_requires_grad(bool flag);
  std::vector<NamedTensorRef> named_tensors() const;
  void load_tensors(const std::vector<NamedTensor>& tensors);

 private:
  DiscriminatorConfig cfg_;
  // conv_w_[0] reads RGB; the last one follows the stddev channel.
  std::vector<DiffTensor> conv_w_, conv_b_;
  DiffTensor fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

}  // namespace rafe
