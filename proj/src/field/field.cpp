// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/field/field.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "rafe/numerics/checkpoint.hpp"
#include "rafe/numerics/ops.hpp"

namespace rafe {

void TwoLevelField::validate() const {
  if (coarse.channels() != decoder.config().feature_channels) {
    throw std::invalid_argument("TwoLevelField: coarse planes have " + std::to_string(coarse.channels()) +
                                " channels, decoder expects " + std::to_string(decoder.config().feature_channels));
  }
  if (fine) {
    if (fine->channels() != coarse.channels()) {
      throw std::invalid_argument("TwoLevelField: channel mismatch between levels (" +
                                  std::to_string(coarse.channels()) + " vs " + std::to_string(fine->channels()) + ")");
    }
    if (!(fine->bounds() == coarse.bounds())) throw std::invalid_argument("TwoLevelField: bounds mismatch");
  }
}

std::vector<double> compose_feature(const TwoLevelField& field, const Vec3& x) {
  field.validate();
  std::vector<double> f = sample_triplane(field.coarse, x);
  if (field.fine) {
    const std::vector<double> r = sample_triplane(*field.fine, x);
    for (std::size_t c = 0; c < f.size(); ++c) f[c] += r[c];
  }
  return f;
}

PointSample query_field(const TwoLevelField& field, const Vec3& x, const Vec3& dir) {
  const auto f = compose_feature(field, x);
  return decode_point(field.decoder, f, dir, field.use_viewdir);
}

PlaneVars bind_planes(Tape& tape, TriPlaneSet& tp) {
  return {{tape.param(tp.plane(0)), tape.param(tp.plane(1)), tape.param(tp.plane(2))}, tp.resolution()};
}

BoundField bind_field(Tape& tape, TwoLevelField& field) {
  field.validate();
  BoundField b;
  b.coarse = bind_planes(tape, field.coarse);
  if (field.fine) b.fine = bind_planes(tape, *field.fine);
  b.decoder = field.decoder.bind(tape);
  b.decoder_def = &field.decoder;
  b.bounds = field.coarse.bounds();
  b.channels = field.coarse.channels();
  b.use_viewdir = field.use_viewdir;
  return b;
}

FieldDecoder::Output eval_field(const BoundField& field, std::span<const Vec3> points, std::span<const Vec3> dirs) {
  if (field.decoder_def == nullptr) throw std::invalid_argument("eval_field: unbound decoder");
  Var f = sample_planes(field.coarse.planes, field.coarse.resolution, field.bounds, points);
  if (field.fine) {
    if (field.fine->planes[0].shape().at(2) != field.channels) {
      throw std::invalid_argument("eval_field: residual planes have the wrong channel count");
    }
    f = ops::add(f, sample_planes(field.fine->planes, field.fine->resolution, field.bounds, points));
  }
  return field.decoder_def->decode(field.decoder, f, dirs, field.use_viewdir);
}

namespace {

constexpr double kFieldFormat = 1.0;

std::string mlp_key(const char* which, const char* kind, std::size_t i) {
  return std::string("decoder.") + which + "." + kind + std::to_string(i);
}

}  // namespace

void save_field(const std::filesystem::path& path, const TwoLevelField& field) {
  field.validate();
  const DecoderConfig& d = field.decoder.config();
  const int fine_res = field.fine ? field.fine->resolution() : 0;
  DiffTensor header({14}, {kFieldFormat, static_cast<double>(field.coarse.resolution()),
                           static_cast<double>(field.coarse.channels()), field.coarse.bounds().lo,
                           field.coarse.bounds().hi, field.use_viewdir ? 1.0 : 0.0,
                           static_cast<double>(d.color_feature), static_cast<double>(d.density_hidden),
                           static_cast<double>(d.density_layers), static_cast<double>(d.color_hidden),
                           static_cast<double>(d.color_layers), static_cast<double>(d.dir_frequencies),
                           field.fine ? 1.0 : 0.0, static_cast<double>(fine_res)});
  std::vector<NamedTensorRef> refs{{"field.header", &header}};
  for (int k = 0; k < kPlaneCount; ++k) refs.push_back({std::string("coarse.") + plane_name(k), &field.coarse.plane(k)});
  if (field.fine) {
    for (int k = 0; k < kPlaneCount; ++k) refs.push_back({std::string("fine.") + plane_name(k), &field.fine->plane(k)});
  }
  const Mlp& dm = field.decoder.density_mlp();
  const Mlp& cm = field.decoder.color_mlp();
  for (std::size_t i = 0; i < dm.layer_count(); ++i) {
    refs.push_back({mlp_key("density", "w", i), &dm.weight(i)});
    refs.push_back({mlp_key("density", "b", i), &dm.bias(i)});
  }
  for (std::size_t i = 0; i < cm.layer_count(); ++i) {
    refs.push_back({mlp_key("color", "w", i), &cm.weight(i)});
    refs.push_back({mlp_key("color", "b", i), &cm.bias(i)});
  }
  save_checkpoint(path, refs);
}

namespace {

void copy_into(DiffTensor& dst, const DiffTensor& src, const std::string& name) {
  if (dst.shape() != src.shape()) {
    throw std::runtime_error("load_field: tensor " + name + " has shape " + shape_str(src.shape()) + ", expected " +
                             shape_str(dst.shape()));
  }
  std::copy(src.values().begin(), src.values().end(), dst.values().begin());
}

}  // namespace

TwoLevelField load_field(const std::filesystem::path& path) {
  const auto tensors = load_checkpoint(path);
  const DiffTensor& h = find_tensor(tensors, "field.header");
  if (h.size() != 14 || h.values()[0] != kFieldFormat) throw std::runtime_error("load_field: unsupported header");
  const auto hv = h.values();
  auto as_int = [&](int i) { return static_cast<int>(hv[static_cast<std::size_t>(i)]); };
  const DomainBounds bounds{hv[3], hv[4]};
  DecoderConfig d;
  d.feature_channels = as_int(2);
  d.color_feature = as_int(6);
  d.density_hidden = as_int(7);
  d.density_layers = as_int(8);
  d.color_hidden = as_int(9);
  d.color_layers = as_int(10);
  d.dir_frequencies = as_int(11);

  TwoLevelField f;
  f.coarse = TriPlaneSet(as_int(1), d.feature_channels, bounds);
  f.use_viewdir = hv[5] != 0.0;
  f.decoder = FieldDecoder(d, 0);
  for (int k = 0; k < kPlaneCount; ++k) {
    const std::string n = std::string("coarse.") + plane_name(k);
    copy_into(f.coarse.plane(k), find_tensor(tensors, n), n);
  }
  if (hv[12] != 0.0) {
    f.fine = TriPlaneSet(as_int(13), d.feature_channels, bounds);
    for (int k = 0; k < kPlaneCount; ++k) {
      const std::string n = std::string("fine.") + plane_name(k);
      copy_into(f.fine->plane(k), find_tensor(tensors, n), n);
    }
  }
  Mlp& dm = f.decoder.density_mlp();
  Mlp& cm = f.decoder.color_mlp();
  for (std::size_t i = 0; i < dm.layer_count(); ++i) {
    copy_into(dm.weight(i), find_tensor(tensors, mlp_key("density", "w", i)), mlp_key("density", "w", i));
    copy_into(dm.bias(i), find_tensor(tensors, mlp_key("density", "b", i)), mlp_key("density", "b", i));
  }
  for (std::size_t i = 0; i < cm.layer_count(); ++i) {
    copy_into(cm.weight(i), find_tensor(tensors, mlp_key("color", "w", i)), mlp_key("color", "w", i));
    copy_into(cm.bias(i), find_tensor(tensors, mlp_key("color", "b", i)), mlp_key("color", "b", i));
  }
  f.validate();
  return f;
}

}  // namespace rafe
