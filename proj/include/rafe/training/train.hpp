// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <vector>

#include "rafe/field/field.hpp"
#include "rafe/multiview.hpp"
#include "rafe/numerics/adam.hpp"
#include "rafe/render/volume.hpp"
#include "rafe/training/networks.hpp"

namespace rafe {

struct LossWeights {
  double geometry = 0.5;
  double adv = 1.0;
  double rec = 1.0;
  double r1 = 0.01;
  double tv = 0.01;
  double dis = 0.001;
  double dreg = 1e-4;

  bool operator==(const LossWeights&) const = default;
};

struct TrainConfig {
  LossWeights lambda;
  double lr_g = 2.5e-3;
  double lr_d = 2e-3;
  double lr_coarse = 1e-2;

  // Coarse field.
  int coarse_resolution = 32;
  int channels = 16;
  double coarse_init_scale = 0.1;
  DomainBounds bounds;
  DecoderConfig decoder;
  int coarse_iterations = 1000;
  int coarse_patches = 8;
  int coarse_patch = 8;

  // Restoration.
  int iterations = 2000;
  int batch = 8;
  int patch = 16;
  /// Coarse-branch reconstruction patches per G step.
  int rec_patches = 1;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  double blur_sigma0 = 1.0;
  double blur_cut = 0.5;
  double beta_final = 0.3;

  // Ablations.
  bool use_residual_coarse = true;
  bool use_viewdir = true;
  bool beta_sampling = true;

  RenderOptions render{.n_strat = 32, .n_imp = 16};

  int log_every = 10;
  int checkpoint_every = 0;
  std::filesystem::path log_path;
  std::filesystem::path checkpoint_dir;
  /// Warn when the per-pixel variance of fake patches across latents
  /// falls below this.
  double collapse_threshold = 1e-7;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// The coarse field fit_coarse starts from.
TwoLevelField init_coarse(const TrainConfig& cfg, std::uint64_t seed);

/// Optimizes coarse planes and decoder on random patches of `views` with
/// lambda_rec * L2 + lambda_tv * TV + lambda_dis * distortion. Throws
/// NumericError on a non-finite loss (after dumping the state when
/// cfg.checkpoint_dir is set).
TwoLevelField fit_coarse(const MultiViewSet& views, const TrainConfig& cfg, std::uint64_t seed,
                         std::vector<double>* losses = nullptr);

/// Coarse field (frozen), shared decoder, generator and discriminator.
struct RestorationModel {
  TwoLevelField field;
  Generator generator;
  Discriminator discriminator;

  /// The field with its fine level generated from z.
  TwoLevelField sample(std::span<const double> z) const;
  TwoLevelField sample(std::uint64_t latent_seed) const;
};

RestorationModel init_restoration(const TwoLevelField& coarse, const TrainConfig& cfg, std::uint64_t seed);

void save_restoration(const std::filesystem::path& dir, const RestorationModel& model);
RestorationModel load_restoration(const std::filesystem::path& dir);

struct TrainLogRow {
  int iteration = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_geometry = 0.0;
  double loss_rec = 0.0;
  double r1 = 0.0;
  double wall_time = 0.0;
};

/// Alternating G/D optimization of a RestorationModel.
class RestorationTrainer {
 public:
  RestorationTrainer(RestorationModel& model, const MultiViewSet& restored, const MultiViewSet& degraded,
                     const TrainConfig& cfg, std::uint64_t seed);

  /// Generator + decoder step; caches the detached fakes for the D step.
  void generator_step(int iteration);
  /// Discriminator step on the cached fakes and reals.
  void discriminator_step(int iteration);
  /// Both steps plus logging, checkpoints and the collapse check.
  void iterate(int iteration);
  void run();

  const std::vector<TrainLogRow>& log() const { return rows_; }
  int collapse_warnings() const { return collapse_warnings_; }
  /// Mean per-pixel variance of a fixed patch rendered under two latents.
  double latent_patch_variance() const;

 private:
  double progress(int iteration) const;
  void check_finite(double v, const char* what, int iteration) const;
  void write_checkpoint(const std::filesystem::path& path) const;

  RestorationModel& model_;
  const MultiViewSet& restored_;
  const MultiViewSet& degraded_;
  TrainConfig cfg_;
  std::uint64_t seed_;
  std::unique_ptr<Adam> adam_g_;
  std::unique_ptr<Adam> adam_d_;
  std::vector<double> fake_cache_;
  std::vector<double> real_cache_;
  TrainLogRow current_;
  std::vector<TrainLogRow> rows_;
  int collapse_warnings_ = 0;
  std::ofstream log_file_;
  std::chrono::steady_clock::time_point start_;
};

/// init_restoration + RestorationTrainer::run.
RestorationModel train_restoration(const TwoLevelField& coarse, const MultiViewSet& restored,
                                   const MultiViewSet& degraded, const TrainConfig& cfg, std::uint64_t seed);

/// Copies the [side x side] crop at patch into an NHWC value vector.
std::vector<double> crop_patch(const ImageBuffer& img, const PatchSpec& patch);

}  // namespace rafe
