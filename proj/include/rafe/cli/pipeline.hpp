// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rafe/cli/config.hpp"

namespace rafe {

/// A failure inside one pipeline stage. what() starts with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Stage names in execution order.
const std::vector<std::string>& pipeline_stages();

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Cache key of `stage` (hex): a hash of the config sections it reads and
/// the keys of the stages it consumes.
std::string stage_key(const ExperimentConfig& cfg, std::string_view stage);

struct StageOptions {
  /// Re-run even when <out>/<stage>/stage.key matches.
  bool force = false;
};

/// Runs one stage, reading upstream outputs from `out`. Returns false when
/// the cached result was reused. Throws StageError; a failed stage leaves
/// its partial directory without a stage.key.
bool run_stage(const ExperimentConfig& cfg, const std::filesystem::path& out, std::string_view stage,
               const StageOptions& opts = {});

/// All stages in order; cached stages are skipped. Also writes
/// <out>/config.toml. Per-iteration logs with wall times go to <out>/logs.
void run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out, const StageOptions& opts = {});

/// Nearest-neighbour resize to an integer multiple (or the same) extent.
ImageBuffer resize_nearest(const ImageBuffer& img, int width, int height);

/// Aggregates <out>/eval and <out>/render into <out>/report: report.md with
/// a metric table and strips/view_NNN.png comparison strips. Missing
/// inputs are listed in the report, which is still written. Returns the
/// markdown text.
std::string write_report(const std::filesystem::path& out);

}  // namespace rafe
