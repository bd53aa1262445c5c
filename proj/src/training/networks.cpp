// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/training/networks.hpp"

#include <cmath>
#include <stdexcept>

#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"

namespace rafe {

namespace {

bool is_pow2_multiple(int v, int base) {
  if (v < base || v % base != 0) return false;
  const int q = v / base;
  return (q & (q - 1)) == 0;
}

DiffTensor uniform_tensor(Shape shape, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (auto& x : v) x = uniform(rng, -bound, bound);
  return DiffTensor(std::move(shape), std::move(v));
}

DiffTensor zero_tensor(Shape shape) {
  return DiffTensor(shape, std::vector<double>(static_cast<std::size_t>(numel(shape)), 0.0));
}

void copy_named(DiffTensor& dst, const std::vector<NamedTensor>& src, const std::string& name) {
  const DiffTensor& t = find_tensor(src, name);
  if (t.shape() != dst.shape()) {
    throw std::runtime_error("checkpoint tensor " + name + " has shape " + shape_str(t.shape()) + ", expected " +
                             shape_str(dst.shape()));
  }
  std::copy(t.values().begin(), t.values().end(), dst.values().begin());
}

}  // namespace

void GeneratorConfig::validate() const {
  if (z_dim < 1 || w_dim < 1 || mapping_layers < 1 || base_channels < 1 || channels < 1) {
    throw std::invalid_argument("generator: dimensions must be positive");
  }
  if (!is_pow2_multiple(resolution, 8)) throw std::invalid_argument("generator: resolution must be 8 * 2^k");
}

int Generator::stage_count() const {
  int n = 0;
  for (int r = 8; r < cfg_.resolution; r *= 2) ++n;
  return std::max(1, n);
}

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg.validate();
  std::vector<int> widths{cfg.z_dim};
  for (int i = 0; i < cfg.mapping_layers; ++i) widths.push_back(cfg.w_dim);
  mapping_ = Mlp(widths, Activation::LeakyRelu, derive_seed(seed, {0x6d6170}));
  const int c0 = cfg.base_channels;
  for (int k = 0; k < kPlaneCount; ++k) {
    Rng rng = make_rng(seed, {0x73796e, static_cast<std::uint64_t>(k)});
    PlaneStack& ps = stacks_[static_cast<std::size_t>(k)];
    std::vector<double> cv(static_cast<std::size_t>(64 * c0));
    for (auto& v : cv) v = normal(rng, 0.0, 1.0);
    ps.constant = DiffTensor({8, 8, c0}, std::move(cv));
    for (int s = 0; s < stage_count(); ++s) {
      Stage st;
      st.conv_w = uniform_tensor({9 * c0, c0}, 9 * c0, rng);
      st.conv_b = zero_tensor({c0});
      st.mod_w = uniform_tensor({cfg.w_dim, 2 * c0}, cfg.w_dim, rng);
      st.mod_b = zero_tensor({2 * c0});
      ps.stages.push_back(std::move(st));
    }
    ps.out_w = uniform_tensor({c0, cfg.channels}, c0, rng);
    ps.out_b = zero_tensor({cfg.channels});
  }
}

Generator::Bound Generator::bind(Tape& tape) {
  Bound b;
  b.mapping = mapping_.bind(tape);
  for (int k = 0; k < kPlaneCount; ++k) {
    PlaneStack& ps = stacks_[static_cast<std::size_t>(k)];
    auto& pv = b.planes[static_cast<std::size_t>(k)];
    pv.constant = tape.param(ps.constant);
    for (auto& st : ps.stages) {
      pv.stages.push_back({tape.param(st.conv_w), tape.param(st.conv_b), tape.param(st.mod_w), tape.param(st.mod_b)});
    }
    pv.out_w = tape.param(ps.out_w);
    pv.out_b = tape.param(ps.out_b);
  }
  return b;
}

Generator::Bound Generator::bind_frozen(Tape& tape) const {
  Bound b;
  b.mapping = mapping_.bind_frozen(tape);
  for (int k = 0; k < kPlaneCount; ++k) {
    const PlaneStack& ps = stacks_[static_cast<std::size_t>(k)];
    auto& pv = b.planes[static_cast<std::size_t>(k)];
    pv.constant = tape.constant(ps.constant);
    for (const auto& st : ps.stages) {
      pv.stages.push_back(
          {tape.constant(st.conv_w), tape.constant(st.conv_b), tape.constant(st.mod_w), tape.constant(st.mod_b)});
    }
    pv.out_w = tape.constant(ps.out_w);
    pv.out_b = tape.constant(ps.out_b);
  }
  return b;
}

std::array<Var, 3> Generator::synthesize(const Bound& bound, std::span<const double> z) const {
  if (static_cast<int>(z.size()) != cfg_.z_dim) {
    throw std::invalid_argument("generator: latent has " + std::to_string(z.size()) + " values, expected " +
                                std::to_string(cfg_.z_dim));
  }
  Tape& tape = *bound.planes[0].constant.tape;
  Var zv = tape.input({1, cfg_.z_dim}, {z.begin(), z.end()});
  Var w = mapping_.forward(bound.mapping, zv);
  const std::int64_t c0 = cfg_.base_channels;
  const bool upsample = cfg_.resolution > 8;
  std::array<Var, 3> out;
  for (int k = 0; k < kPlaneCount; ++k) {
    const auto& pv = bound.planes[static_cast<std::size_t>(k)];
    Var x = ops::reshape(pv.constant, {1, 8, 8, c0});
    for (const auto& st : pv.stages) {
      if (upsample) x = ops::upsample2(x);
      x = ops::conv3x3(x, st.conv_w, st.conv_b);
      const std::int64_t h = x.shape()[1], wd = x.shape()[2];
      Var style = ops::add_bias(ops::matmul(w, st.mod_w), st.mod_b);
      Var gain = ops::reshape(ops::add_scalar(ops::slice_cols(style, 0, c0), 1.0), {c0});
      Var shift = ops::reshape(ops::slice_cols(style, c0, 2 * c0), {c0});
      Var flat = ops::reshape(x, {h * wd, c0});
      flat = ops::add_bias(ops::mul(flat, ops::broadcast_rows(gain, h * wd)), shift);
      x = ops::leaky_relu(ops::reshape(flat, {1, h, wd, c0}));
    }
    x = ops::scale(ops::conv1x1(x, pv.out_w, pv.out_b), cfg_.output_scale);
    out[static_cast<std::size_t>(k)] = ops::reshape(x, {cfg_.resolution, cfg_.resolution, cfg_.channels});
  }
  return out;
}

TriPlaneSet Generator::sample(std::span<const double> z, const DomainBounds& bounds) const {
  Tape tape;
  Tape::NoGradGuard ng(tape);
  const auto planes = synthesize(bind_frozen(tape), z);
  TriPlaneSet tp(cfg_.resolution, cfg_.channels, bounds);
  for (int k = 0; k < kPlaneCount; ++k) {
    const auto v = planes[static_cast<std::size_t>(k)].value();
    std::copy(v.begin(), v.end(), tp.plane(k).values().begin());
  }
  return tp;
}

std::vector<DiffTensor*> Generator::params() {
  std::vector<DiffTensor*> p = mapping_.params();
  for (auto& ps : stacks_) {
    p.push_back(&ps.constant);
    for (auto& st : ps.stages) {
      p.push_back(&st.conv_w);
      p.push_back(&st.conv_b);
      p.push_back(&st.mod_w);
      p.push_back(&st.mod_b);
    }
    p.push_back(&ps.out_w);
    p.push_back(&ps.out_b);
  }
  return p;
}

void Generator::set_requires_grad(bool flag) {
  for (auto* t : params()) t->set_requires_grad(flag);
}

std::vector<NamedTensorRef> Generator::named_tensors() const {
  std::vector<NamedTensorRef> refs;
  for (std::size_t i = 0; i < mapping_.layer_count(); ++i) refs.push_back({"gen.mapping.w" + std::to_string(i), &mapping_.weight(i)});
  for (std::size_t i = 0; i < mapping_.layer_count(); ++i) refs.push_back({"gen.mapping.b" + std::to_string(i), &mapping_.bias(i)});
  for (int k = 0; k < kPlaneCount; ++k) {
    const PlaneStack& ps = stacks_[static_cast<std::size_t>(k)];
    const std::string pre = std::string("gen.") + plane_name(k) + ".";
    refs.push_back({pre + "const", &ps.constant});
    for (std::size_t s = 0; s < ps.stages.size(); ++s) {
      const std::string sp = pre + "s" + std::to_string(s) + ".";
      refs.push_back({sp + "conv_w", &ps.stages[s].conv_w});
      refs.push_back({sp + "conv_b", &ps.stages[s].conv_b});
      refs.push_back({sp + "mod_w", &ps.stages[s].mod_w});
      refs.push_back({sp + "mod_b", &ps.stages[s].mod_b});
    }
    refs.push_back({pre + "out_w", &ps.out_w});
    refs.push_back({pre + "out_b", &ps.out_b});
  }
  return refs;
}

void Generator::load_tensors(const std::vector<NamedTensor>& tensors) {
  auto refs = named_tensors();
  auto params_list = params();
  // named_tensors() and params() enumerate in the same order.
  for (std::size_t i = 0; i < refs.size(); ++i) copy_named(*params_list[i], tensors, refs[i].name);
}

std::vector<double> sample_latent(int dim, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x7a});
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (auto& v : z) v = normal(rng, 0.0, 1.0);
  return z;
}

void DiscriminatorConfig::validate() const {
  if (!is_pow2_multiple(patch, 4)) throw std::invalid_argument("discriminator: patch must be 4 * 2^k");
  if (channels < 1 || hidden < 1 || mbstd_group < 1) throw std::invalid_argument("discriminator: sizes must be positive");
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg.validate();
  Rng rng = make_rng(seed, {0x646973});
  const int c = cfg.channels;
  conv_w_.push_back(uniform_tensor({27, c}, 27, rng));
  conv_b_.push_back(zero_tensor({c}));
  for (int s = cfg.patch; s > 4; s /= 2) {
    conv_w_.push_back(uniform_tensor({9 * c, c}, 9 * c, rng));
    conv_b_.push_back(zero_tensor({c}));
  }
  conv_w_.push_back(uniform_tensor({9 * (c + 1), c}, 9 * (c + 1), rng));
  conv_b_.push_back(zero_tensor({c}));
  fc1_w_ = uniform_tensor({16 * c, cfg.hidden}, 16 * c, rng);
  fc1_b_ = zero_tensor({cfg.hidden});
  fc2_w_ = uniform_tensor({cfg.hidden, 1}, cfg.hidden, rng);
  fc2_b_ = zero_tensor({1});
}

Discriminator::Bound Discriminator::bind(Tape& tape) {
  Bound b;
  for (std::size_t i = 0; i < conv_w_.size(); ++i) {
    b.conv_w.push_back(tape.param(conv_w_[i]));
    b.conv_b.push_back(tape.param(conv_b_[i]));
  }
  b.fc1_w = tape.param(fc1_w_);
  b.fc1_b = tape.param(fc1_b_);
  b.fc2_w = tape.param(fc2_w_);
  b.fc2_b = tape.param(fc2_b_);
  return b;
}

Discriminator::Bound Discriminator::bind_frozen(Tape& tape) const {
  Bound b;
  for (std::size_t i = 0; i < conv_w_.size(); ++i) {
    b.conv_w.push_back(tape.constant(conv_w_[i]));
    b.conv_b.push_back(tape.constant(conv_b_[i]));
  }
  b.fc1_w = tape.constant(fc1_w_);
  b.fc1_b = tape.constant(fc1_b_);
  b.fc2_w = tape.constant(fc2_w_);
  b.fc2_b = tape.constant(fc2_b_);
  return b;
}

Var Discriminator::forward(const Bound& b, Var x) const {
  const Shape s = x.shape();
  if (s.size() != 4 || s[1] != cfg_.patch || s[2] != cfg_.patch || s[3] != 3) {
    throw std::invalid_argument("discriminator: expected [B, " + std::to_string(cfg_.patch) + ", " +
                                std::to_string(cfg_.patch) + ", 3], got " + shape_str(s));
  }
  const std::int64_t batch = s[0];
  const std::size_t last = b.conv_w.size() - 1;
  // Pixels enter centered on zero; from [0, 1] the first layers barely
  // separate sharp from blurred patches for hundreds of steps.
  x = ops::add_scalar(ops::scale(x, 2.0), -1.0);
  Var h = ops::leaky_relu(ops::conv3x3(x, b.conv_w[0], b.conv_b[0]));
  for (std::size_t i = 1; i < last; ++i) {
    h = ops::avg_pool2(ops::leaky_relu(ops::conv3x3(h, b.conv_w[i], b.conv_b[i])));
  }
  const std::int64_t group = std::min<std::int64_t>(cfg_.mbstd_group, batch);
  if (batch % group != 0) {
    throw std::invalid_argument("discriminator: batch " + std::to_string(batch) + " not divisible by group " +
                                std::to_string(group));
  }
  h = ops::minibatch_stddev(h, group);
  h = ops::leaky_relu(ops::conv3x3(h, b.conv_w[last], b.conv_b[last]));
  h = ops::leaky_relu(ops::add_bias(ops::matmul(ops::flatten(h), b.fc1_w), b.fc1_b));
  Var logit = ops::add_bias(ops::matmul(h, b.fc2_w), b.fc2_b);
  return ops::reshape(logit, {batch});
}

std::vector<DiffTensor*> Discriminator::params() {
  std::vector<DiffTensor*> p;
  for (std::size_t i = 0; i < conv_w_.size(); ++i) {
    p.push_back(&conv_w_[i]);
    p.push_back(&conv_b_[i]);
  }
  p.push_back(&fc1_w_);
  p.push_back(&fc1_b_);
  p.push_back(&fc2_w_);
  p.push_back(&fc2_b_);
  return p;
}

void Discriminator::set_requires_grad(bool flag) {
  for (auto* t : params()) t->set_requires_grad(flag);
}

std::vector<NamedTensorRef> Discriminator::named_tensors() const {
  std::vector<NamedTensorRef> refs;
  for (std::size_t i = 0; i < conv_w_.size(); ++i) {
    refs.push_back({"disc.conv_w" + std::to_string(i), &conv_w_[i]});
    refs.push_back({"disc.conv_b" + std::to_string(i), &conv_b_[i]});
  }
  refs.push_back({"disc.fc1_w", &fc1_w_});
  refs.push_back({"disc.fc1_b", &fc1_b_});
  refs.push_back({"disc.fc2_w", &fc2_w_});
  refs.push_back({"disc.fc2_b", &fc2_b_});
  return refs;
}

void Discriminator::load_tensors(const std::vector<NamedTensor>& tensors) {
  auto refs = named_tensors();
  auto p = params();
  for (std::size_t i = 0; i < refs.size(); ++i) copy_named(*p[i], tensors, refs[i].name);
}

}  // namespace rafe
