// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rafe/cli/scene.hpp"
#include "rafe/degrade/degrade.hpp"
#include "rafe/render/volume.hpp"
#include "rafe/training/train.hpp"

namespace rafe {

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;

  // [scene]
  std::string scene = "desk";
  /// When set, clean views are read from <dataset>/train and <dataset>/test
  /// instead of being synthesized.
  std::filesystem::path dataset;
  int supersample = 2;

  RigConfig rig;

  // [degrade]
  /// sr, deblur, denoise, mixed, none or nerf_like.
  std::string task = "mixed";
  /// Explicit stage strings; overrides the task preset when non-empty.
  std::vector<std::string> stages;
  bool shared_kernel = false;
  /// nerf_like: coarse iterations of the clean fit whose renders become
  /// the degraded set.
  int nerf_like_iterations = 200;

  // [restore]
  double restore_amplitude = 1.0;
  int restorations_per_view = 1;

  TrainConfig train;

  // [eval]
  int samples = 3;
  RenderOptions eval_render{.n_strat = 32, .n_imp = 16, .jitter = false};
  bool perframe = true;
  std::vector<std::string> metrics{"psnr", "ssim", "proxy", "hf_energy", "diversity"};

  SceneKind scene_kind() const { return rig.kind; }
  /// The degradation applied by the degrade stage (empty for nerf_like).
  DegradationConfig degradation() const;
  void validate() const;
};

/// Parses TOML text. Unknown keys and wrongly typed values throw
/// std::invalid_argument naming the key.
ExperimentConfig parse_config(std::string_view text, std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical TOML for the whole config.
std::string format_config(const ExperimentConfig& cfg);
/// Canonical TOML for one top-level section ("scene", "rig", "train", ...),
/// used to key cached stages.
std::string format_section(const ExperimentConfig& cfg, std::string_view section);

}  // namespace rafe
