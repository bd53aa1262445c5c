// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/field/decoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rafe/log.hpp"
#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"

namespace rafe {

Var apply_activation(Var x, Activation act) {
  switch (act) {
    case Activation::Softplus:
      return ops::softplus(x);
    case Activation::LeakyRelu:
      return ops::leaky_relu(x, 0.2);
  }
  throw std::logic_error("apply_activation: unknown activation");
}

Mlp::Mlp(std::vector<int> widths, Activation act, std::uint64_t seed) : widths_(std::move(widths)), act_(act) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (int w : widths_) {
    if (w < 1) throw std::invalid_argument("Mlp: widths must be >= 1");
  }
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    const int fan_in = widths_[i], fan_out = widths_[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Rng rng = make_rng(seed, {0x6d6c70ULL, i});
    std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out), b(static_cast<std::size_t>(fan_out));
    for (double& v : w) v = uniform(rng, -bound, bound);
    for (double& v : b) v = uniform(rng, -bound, bound);
    weights_.emplace_back(Shape{fan_in, fan_out}, std::move(w));
    biases_.emplace_back(Shape{fan_out}, std::move(b));
  }
}

Mlp::Bound Mlp::bind(Tape& tape) {
  Bound b;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    b.weights.push_back(tape.param(weights_[i]));
    b.biases.push_back(tape.param(biases_[i]));
  }
  return b;
}

Mlp::Bound Mlp::bind_frozen(Tape& tape) const {
  Bound b;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    b.weights.push_back(tape.constant(weights_[i]));
    b.biases.push_back(tape.constant(biases_[i]));
  }
  return b;
}

Var Mlp::forward(const Bound& bound, Var x) const {
  if (bound.weights.size() != weights_.size()) throw std::invalid_argument("Mlp::forward: binding mismatch");
  if (x.shape().size() != 2 || x.shape()[1] != widths_.front()) {
    throw std::invalid_argument("Mlp::forward: expected [N, " + std::to_string(widths_.front()) + "], got " +
                                shape_str(x.shape()));
  }
  Var h = x;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = ops::add_bias(ops::matmul(h, bound.weights[i]), bound.biases[i]);
    if (i + 1 < weights_.size()) h = apply_activation(h, act_);
  }
  return h;
}

std::vector<DiffTensor*> Mlp::params() {
  std::vector<DiffTensor*> out;
  for (auto& w : weights_) out.push_back(&w);
  for (auto& b : biases_) out.push_back(&b);
  return out;
}

void Mlp::set_requires_grad(bool flag) {
  for (auto* p : params()) p->set_requires_grad(flag);
}

void Mlp::fill(double value) {
  for (auto* p : params()) p->fill(value);
}

int direction_encoding_dim(int frequencies) { return 3 + 6 * frequencies; }

void encode_direction(const Vec3& dir, int frequencies, std::span<double> out) {
  if (static_cast<int>(out.size()) != direction_encoding_dim(frequencies)) {
    throw std::invalid_argument("encode_direction: output size mismatch");
  }
  for (int a = 0; a < 3; ++a) out[a] = dir[a];
  double freq = 1.0;
  for (int k = 0; k < frequencies; ++k, freq *= 2.0) {
    for (int a = 0; a < 3; ++a) {
      out[3 + 6 * k + a] = std::sin(freq * dir[a]);
      out[6 + 6 * k + a] = std::cos(freq * dir[a]);
    }
  }
}

FieldDecoder::FieldDecoder(const DecoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.feature_channels < 1 || cfg.color_feature < 1 || cfg.density_layers < 0 || cfg.color_layers < 0 ||
      cfg.dir_frequencies < 0) {
    throw std::invalid_argument("FieldDecoder: bad config");
  }
  std::vector<int> dw{cfg.feature_channels};
  for (int i = 0; i < cfg.density_layers; ++i) dw.push_back(cfg.density_hidden);
  dw.push_back(1 + cfg.color_feature);
  std::vector<int> cw{cfg.color_feature + direction_encoding_dim(cfg.dir_frequencies)};
  for (int i = 0; i < cfg.color_layers; ++i) cw.push_back(cfg.color_hidden);
  cw.push_back(3);
  density_ = Mlp(dw, Activation::Softplus, derive_seed(seed, {1}));
  color_ = Mlp(cw, Activation::Softplus, derive_seed(seed, {2}));
}

FieldDecoder::Bound FieldDecoder::bind(Tape& tape) { return {density_.bind(tape), color_.bind(tape)}; }

FieldDecoder::Bound FieldDecoder::bind_frozen(Tape& tape) const {
  return {density_.bind_frozen(tape), color_.bind_frozen(tape)};
}

FieldDecoder::Output FieldDecoder::decode(const Bound& bound, Var features, std::span<const Vec3> dirs,
                                          bool use_viewdir) const {
  Tape& tape = *features.tape;
  const std::int64_t n = features.shape().at(0);
  const int denc = direction_encoding_dim(cfg_.dir_frequencies);
  if (use_viewdir && static_cast<std::int64_t>(dirs.size()) != n) {
    throw std::invalid_argument("FieldDecoder::decode: one direction per point required");
  }
  Var head = density_.forward(bound.density, features);
  Var sigma = ops::reshape(ops::softplus(ops::slice_cols(head, 0, 1)), {n});
  Var fcol = ops::slice_cols(head, 1, 1 + cfg_.color_feature);

  std::vector<double> enc(static_cast<std::size_t>(n * denc), 0.0);
  if (use_viewdir) {
    for (std::int64_t p = 0; p < n; ++p) {
      encode_direction(dirs[p], cfg_.dir_frequencies, std::span<double>(enc.data() + p * denc, denc));
    }
  }
  Var x = ops::concat_cols(fcol, tape.input({n, denc}, std::move(enc)));
  Var rgb = ops::sigmoid(color_.forward(bound.color, x));
  return {sigma, rgb};
}

std::vector<DiffTensor*> FieldDecoder::params() {
  auto out = density_.params();
  for (auto* p : color_.params()) out.push_back(p);
  return out;
}

void FieldDecoder::set_requires_grad(bool flag) {
  density_.set_requires_grad(flag);
  color_.set_requires_grad(flag);
}

PointSample decode_point(const FieldDecoder& dec, std::span<const double> feature, const Vec3& dir,
                         bool use_viewdir) {
  const int c = dec.config().feature_channels;
  if (static_cast<int>(feature.size()) != c) {
    throw std::invalid_argument("decode_point: feature has " + std::to_string(feature.size()) + " channels, expected " +
                                std::to_string(c));
  }
  Vec3 d = dir;
  if (use_viewdir) {
    const double len = d.norm();
    if (!(len > 0.0) || !std::isfinite(len)) throw std::invalid_argument("decode_point: degenerate direction");
    if (std::abs(len - 1.0) > 1e-6) {
      log::warn("decode_point: direction not unit length (|d| = " + std::to_string(len) + "), normalizing");
      d /= len;
    }
  }
  Tape tape;
  Tape::NoGradGuard ng(tape);
  const FieldDecoder::Bound b = dec.bind_frozen(tape);
  Var f = tape.input({1, c}, {feature.begin(), feature.end()});
  const Vec3 dirs[1] = {d};
  auto out = dec.decode(b, f, dirs, use_viewdir);
  PointSample s;
  s.sigma = out.sigma.value()[0];
  for (int k = 0; k < 3; ++k) s.rgb[k] = out.rgb.value()[k];
  return s;
}

}  // namespace rafe
