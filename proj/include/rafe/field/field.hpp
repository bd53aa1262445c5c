// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rafe/field/decoder.hpp"
#include "rafe/field/triplane.hpp"

namespace rafe {

/// Coarse planes plus an optional residual level, decoded by one shared MLP
/// pair. The composed feature is coarse + fine.
struct TwoLevelField {
  TriPlaneSet coarse;
  std::optional<TriPlaneSet> fine;
  FieldDecoder decoder;
  bool use_viewdir = true;

  /// Throws std::invalid_argument on a channel or bounds mismatch.
  void validate() const;
};

std::vector<double> compose_feature(const TwoLevelField& field, const Vec3& x);

PointSample query_field(const TwoLevelField& field, const Vec3& x, const Vec3& dir);

/// Plane nodes of one level on a tape.
struct PlaneVars {
  std::array<Var, 3> planes;
  int resolution = 0;
};

/// A field bound to a tape. The fine level can be swapped for generator
/// output; leaving it empty renders the coarse field alone.
struct BoundField {
  PlaneVars coarse;
  std::optional<PlaneVars> fine;
  FieldDecoder::Bound decoder;
  const FieldDecoder* decoder_def = nullptr;
  DomainBounds bounds;
  int channels = 0;
  bool use_viewdir = true;
};

PlaneVars bind_planes(Tape& tape, TriPlaneSet& tp);
/// Binds every stored tensor; gradients flow to those with requires_grad.
BoundField bind_field(Tape& tape, TwoLevelField& field);

/// Evaluates sigma [P] and rgb [P, 3] at P points.
FieldDecoder::Output eval_field(const BoundField& field, std::span<const Vec3> points,
                                std::span<const Vec3> dirs);

void save_field(const std::filesystem::path& path, const TwoLevelField& field);
TwoLevelField load_field(const std::filesystem::path& path);

}  // namespace rafe
