// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/training/train.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "rafe/log.hpp"
#include "rafe/numerics/ops.hpp"
#include "rafe/numerics/rng.hpp"
#include "rafe/training/losses.hpp"

namespace rafe {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  for (double l : {lambda.geometry, lambda.adv, lambda.rec, lambda.r1, lambda.tv, lambda.dis, lambda.dreg}) {
    if (!(l >= 0.0)) fail("loss weights must be >= 0");
  }
  if (!(lr_g > 0.0) || !(lr_d > 0.0) || !(lr_coarse > 0.0)) fail("learning rates must be > 0");
  if (coarse_resolution < 2 || channels < 1) fail("coarse planes too small");
  if (decoder.feature_channels != channels) fail("decoder.feature_channels must equal channels");
  if (generator.channels != channels) fail("generator.channels must equal channels");
  if (coarse_iterations < 0 || iterations < 0) fail("iteration counts must be >= 0");
  if (coarse_patches < 1 || coarse_patch < 1) fail("coarse patch settings must be positive");
  if (batch < 1 || patch < 1 || rec_patches < 0) fail("batch and patch must be positive");
  if (discriminator.patch != patch) fail("discriminator.patch must equal patch");
  if (batch % std::min(batch, discriminator.mbstd_group) != 0) fail("batch must be divisible by the minibatch-std group");
  if (blur_sigma0 < 0.0 || blur_cut < 0.0) fail("blur schedule must be >= 0");
  if (!(beta_final > 0.0)) fail("beta_final must be > 0");
  generator.validate();
  discriminator.validate();
}

std::vector<double> crop_patch(const ImageBuffer& img, const PatchSpec& patch) {
  if (patch.px < 0 || patch.py < 0 || patch.px + patch.side > img.width || patch.py + patch.side > img.height) {
    throw std::out_of_range("crop_patch: patch outside the image");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(patch.side * patch.side * img.channels));
  for (int y = 0; y < patch.side; ++y)
    for (int x = 0; x < patch.side; ++x)
      for (int c = 0; c < img.channels; ++c) out.push_back(img.at(patch.px + x, patch.py + y, c));
  return out;
}

namespace {

// [1, H, W, C] parts -> [B, H, W, C]
Var stack_batch(const std::vector<Var>& parts) {
  const Shape one = parts.front().shape();
  const std::int64_t per = numel(one), n = static_cast<std::int64_t>(parts.size());
  Var total;
  for (std::int64_t b = 0; b < n; ++b) {
    const std::int64_t off = b * per;
    Var placed = ops::linear_map(
        "place_batch", ops::reshape(parts[static_cast<std::size_t>(b)], {per}), {n, one[1], one[2], one[3]},
        [off](std::span<const double> in, std::span<double> out) {
          for (std::size_t i = 0; i < in.size(); ++i) out[off + i] += in[i];
        },
        [off, per](std::span<const double> in, std::span<double> out) {
          for (std::int64_t i = 0; i < per; ++i) out[i] += in[off + i];
        });
    total = total.valid() ? ops::add(total, placed) : placed;
  }
  return total;
}

PlaneVars constant_planes(Tape& tape, const TriPlaneSet& tp) {
  PlaneVars pv;
  for (int k = 0; k < kPlaneCount; ++k) pv.planes[static_cast<std::size_t>(k)] = tape.constant(tp.plane(k));
  pv.resolution = tp.resolution();
  return pv;
}

std::vector<NamedTensorRef> field_refs(const TwoLevelField& f) {
  std::vector<NamedTensorRef> refs;
  for (int k = 0; k < kPlaneCount; ++k) refs.push_back({std::string("coarse.") + plane_name(k), &f.coarse.plane(k)});
  const Mlp& dm = f.decoder.density_mlp();
  const Mlp& cm = f.decoder.color_mlp();
  for (std::size_t i = 0; i < dm.layer_count(); ++i) {
    refs.push_back({"decoder.density.w" + std::to_string(i), &dm.weight(i)});
    refs.push_back({"decoder.density.b" + std::to_string(i), &dm.bias(i)});
  }
  for (std::size_t i = 0; i < cm.layer_count(); ++i) {
    refs.push_back({"decoder.color.w" + std::to_string(i), &cm.weight(i)});
    refs.push_back({"decoder.color.b" + std::to_string(i), &cm.bias(i)});
  }
  return refs;
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

TwoLevelField init_coarse(const TrainConfig& cfg, std::uint64_t seed) {
  TwoLevelField field;
  field.coarse = init_triplane(cfg.coarse_resolution, cfg.channels, cfg.coarse_init_scale, derive_seed(seed, {0x63}),
                               cfg.bounds);
  field.decoder = FieldDecoder(cfg.decoder, derive_seed(seed, {0x64}));
  field.use_viewdir = cfg.use_viewdir;
  return field;
}

TwoLevelField fit_coarse(const MultiViewSet& views, const TrainConfig& cfg, std::uint64_t seed,
                         std::vector<double>* losses) {
  cfg.validate();
  if (views.empty()) throw std::invalid_argument("fit_coarse: no views");
  TwoLevelField field = init_coarse(cfg, seed);
  field.coarse.set_requires_grad(true);
  field.decoder.set_requires_grad(true);

  std::vector<DiffTensor*> params = field.coarse.params();
  for (auto* p : field.decoder.params()) params.push_back(p);
  Adam adam(params, AdamConfig{.lr = cfg.lr_coarse, .beta1 = 0.9, .beta2 = 0.99, .eps = 1e-8});
  const PatchSchedule uniform_sched{.uniform = true};

  for (int it = 0; it < cfg.coarse_iterations; ++it) {
    Tape tape;
    const BoundField bf = bind_field(tape, field);
    Var rec, dis;
    for (int p = 0; p < cfg.coarse_patches; ++p) {
      Rng rng = make_rng(seed, {0x636f, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(p)});
      const int vi = static_cast<int>(rng() % views.size());
      const View& v = views.views[static_cast<std::size_t>(vi)];
      const int side = std::min({cfg.coarse_patch, v.image.width, v.image.height});
      PatchSpec ps = sample_patch_origin(v.image.width, v.image.height, side, 0.0, uniform_sched, rng);
      ps.camera = vi;
      const auto res = render_patch(bf, v.camera, ps, cfg.render, rng);
      Var target = tape.input({static_cast<std::int64_t>(side) * side, 3}, crop_patch(v.image, ps));
      Var r = ops::mse(res.rgb, target);
      rec = rec.valid() ? ops::add(rec, r) : r;
      if (cfg.lambda.dis > 0.0) {
        Var d = distortion_loss(res);
        dis = dis.valid() ? ops::add(dis, d) : d;
      }
    }
    Var loss = ops::scale(rec, cfg.lambda.rec / cfg.coarse_patches);
    if (cfg.lambda.tv > 0.0) loss = ops::add(loss, ops::scale(tv_loss(bf.coarse.planes), cfg.lambda.tv));
    if (dis.valid()) loss = ops::add(loss, ops::scale(dis, cfg.lambda.dis / cfg.coarse_patches));
    const double lv = loss.item();
    if (!finite(lv)) {
      if (!cfg.checkpoint_dir.empty()) {
        std::filesystem::create_directories(cfg.checkpoint_dir);
        save_checkpoint(cfg.checkpoint_dir / "coarse_nan_dump.ckpt", field_refs(field));
      }
      throw NumericError("fit_coarse: non-finite loss at iteration " + std::to_string(it));
    }
    if (losses) losses->push_back(lv);
    adam.zero_grad();
    tape.backward(loss);
    adam.step();
  }
  field.coarse.set_requires_grad(false);
  return field;
}

TwoLevelField RestorationModel::sample(std::span<const double> z) const {
  TwoLevelField f = field;
  f.fine = generator.sample(z, field.coarse.bounds());
  return f;
}

TwoLevelField RestorationModel::sample(std::uint64_t latent_seed) const {
  const auto z = sample_latent(generator.config().z_dim, latent_seed);
  return sample(z);
}

RestorationModel init_restoration(const TwoLevelField& coarse, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  coarse.validate();
  if (coarse.coarse.channels() != cfg.channels) throw std::invalid_argument("init_restoration: channel mismatch");
  RestorationModel m;
  if (cfg.use_residual_coarse) {
    m.field = coarse;
    m.field.fine.reset();
  } else {
    // Ablation: the generator output is added to a fresh random field.
    m.field.coarse = init_triplane(coarse.coarse.resolution(), cfg.channels, cfg.coarse_init_scale,
                                   derive_seed(seed, {0x72, 0x63}), coarse.coarse.bounds());
    m.field.decoder = FieldDecoder(cfg.decoder, derive_seed(seed, {0x72, 0x64}));
  }
  m.field.use_viewdir = cfg.use_viewdir;
  m.field.coarse.set_requires_grad(false);
  m.field.decoder.set_requires_grad(true);
  m.generator = Generator(cfg.generator, derive_seed(seed, {0x67}));
  m.discriminator = Discriminator(cfg.discriminator, derive_seed(seed, {0x64, 0x73}));
  return m;
}

namespace {

std::vector<NamedTensorRef> model_refs(const RestorationModel& m) {
  auto refs = m.generator.named_tensors();
  for (auto& r : m.discriminator.named_tensors()) refs.push_back(r);
  for (auto& r : field_refs(m.field)) refs.push_back(r);
  return refs;
}

}  // namespace

void save_restoration(const std::filesystem::path& dir, const RestorationModel& model) {
  std::filesystem::create_directories(dir);
  save_field(dir / "field.ckpt", model.field);
  const GeneratorConfig& g = model.generator.config();
  const DiscriminatorConfig& d = model.discriminator.config();
  DiffTensor gh({7}, {double(g.z_dim), double(g.w_dim), double(g.mapping_layers), double(g.base_channels),
                      double(g.resolution), double(g.channels), g.output_scale});
  DiffTensor dh({4}, {double(d.patch), double(d.channels), double(d.hidden), double(d.mbstd_group)});
  auto refs = model.generator.named_tensors();
  refs.insert(refs.begin(), {"gen.header", &gh});
  save_checkpoint(dir / "generator.ckpt", refs);
  auto drefs = model.discriminator.named_tensors();
  drefs.insert(drefs.begin(), {"disc.header", &dh});
  save_checkpoint(dir / "discriminator.ckpt", drefs);
}

RestorationModel load_restoration(const std::filesystem::path& dir) {
  RestorationModel m;
  m.field = load_field(dir / "field.ckpt");
  m.field.fine.reset();
  const auto gt = load_checkpoint(dir / "generator.ckpt");
  const auto gh = find_tensor(gt, "gen.header").values();
  if (gh.size() != 7) throw std::runtime_error("load_restoration: bad generator header");
  GeneratorConfig gc{.z_dim = int(gh[0]), .w_dim = int(gh[1]), .mapping_layers = int(gh[2]), .base_channels = int(gh[3]),
                     .resolution = int(gh[4]), .channels = int(gh[5]), .output_scale = gh[6]};
  m.generator = Generator(gc, 0);
  m.generator.load_tensors(gt);
  const auto dt = load_checkpoint(dir / "discriminator.ckpt");
  const auto dh = find_tensor(dt, "disc.header").values();
  if (dh.size() != 4) throw std::runtime_error("load_restoration: bad discriminator header");
  DiscriminatorConfig dc{.patch = int(dh[0]), .channels = int(dh[1]), .hidden = int(dh[2]), .mbstd_group = int(dh[3])};
  m.discriminator = Discriminator(dc, 0);
  m.discriminator.load_tensors(dt);
  m.field.coarse.set_requires_grad(false);
  return m;
}

RestorationTrainer::RestorationTrainer(RestorationModel& model, const MultiViewSet& restored,
                                       const MultiViewSet& degraded, const TrainConfig& cfg, std::uint64_t seed)
    : model_(model), restored_(restored), degraded_(degraded), cfg_(cfg), seed_(seed) {
  cfg_.validate();
  if (restored.empty()) throw std::invalid_argument("train_restoration: no restored views");
  if (cfg_.lambda.rec > 0.0 && cfg_.rec_patches > 0 && degraded.empty()) {
    throw std::invalid_argument("train_restoration: reconstruction needs degraded views");
  }
  for (const auto& v : restored.views) {
    if (v.image.width < cfg_.patch || v.image.height < cfg_.patch) {
      throw std::invalid_argument("train_restoration: restored view smaller than the patch");
    }
  }
  if (model_.generator.config().resolution < 1) throw std::invalid_argument("train_restoration: empty generator");
  model_.field.coarse.set_requires_grad(false);
  model_.field.decoder.set_requires_grad(true);
  model_.generator.set_requires_grad(true);
  model_.discriminator.set_requires_grad(true);
  std::vector<DiffTensor*> gp = model_.generator.params();
  for (auto* p : model_.field.decoder.params()) gp.push_back(p);
  adam_g_ = std::make_unique<Adam>(gp, AdamConfig{.lr = cfg_.lr_g, .beta1 = 0.0, .beta2 = 0.99, .eps = 1e-8});
  adam_d_ = std::make_unique<Adam>(model_.discriminator.params(),
                                   AdamConfig{.lr = cfg_.lr_d, .beta1 = 0.0, .beta2 = 0.99, .eps = 1e-8});
  if (!cfg_.log_path.empty()) {
    if (cfg_.log_path.has_parent_path()) std::filesystem::create_directories(cfg_.log_path.parent_path());
    log_file_.open(cfg_.log_path);
    if (!log_file_) throw std::runtime_error("train_restoration: cannot open log " + cfg_.log_path.string());
    log_file_ << "iteration,L_D,L_G,L_geometry,L_rec,R1,wall_time\n";
  }
  start_ = std::chrono::steady_clock::now();
}

double RestorationTrainer::progress(int iteration) const {
  return cfg_.iterations > 0 ? static_cast<double>(iteration) / cfg_.iterations : 1.0;
}

void RestorationTrainer::write_checkpoint(const std::filesystem::path& path) const {
  std::filesystem::create_directories(path.parent_path());
  save_checkpoint(path, model_refs(model_));
}

void RestorationTrainer::check_finite(double v, const char* what, int iteration) const {
  if (finite(v)) return;
  if (!cfg_.checkpoint_dir.empty()) write_checkpoint(cfg_.checkpoint_dir / "nan_dump.ckpt");
  throw NumericError(std::string("train_restoration: non-finite ") + what + " at iteration " +
                     std::to_string(iteration));
}

void RestorationTrainer::generator_step(int iteration) {
  const double t = progress(iteration);
  const int s = cfg_.patch;
  const PatchSchedule sched{.beta_final = cfg_.beta_final, .uniform = !cfg_.beta_sampling};
  Tape tape;
  const auto gb = model_.generator.bind(tape);
  const auto db = model_.field.decoder.bind(tape);
  const PlaneVars coarse = constant_planes(tape, model_.field.coarse);
  auto make_field = [&](std::optional<PlaneVars> fine) {
    BoundField bf;
    bf.coarse = coarse;
    bf.fine = std::move(fine);
    bf.decoder = db;
    bf.decoder_def = &model_.field.decoder;
    bf.bounds = model_.field.coarse.bounds();
    bf.channels = model_.field.coarse.channels();
    bf.use_viewdir = cfg_.use_viewdir;
    return bf;
  };

  std::vector<Var> fakes;
  std::vector<double> reals;
  Var dreg;
  for (int b = 0; b < cfg_.batch; ++b) {
    const auto it = static_cast<std::uint64_t>(iteration), slot = static_cast<std::uint64_t>(b);
    Rng rng = make_rng(seed_, {0x67, it, slot});
    const auto z = sample_latent(model_.generator.config().z_dim, derive_seed(seed_, {0x7a, it, slot}));
    const auto planes = model_.generator.synthesize(gb, z);
    const int vi = static_cast<int>(rng() % restored_.size());
    const View& v = restored_.views[static_cast<std::size_t>(vi)];
    PatchSpec ps = sample_patch_origin(v.image.width, v.image.height, s, t, sched, rng);
    ps.camera = vi;
    const BoundField bf = make_field(PlaneVars{planes, model_.generator.config().resolution});
    const auto res = render_patch(bf, v.camera, ps, cfg_.render, rng);
    fakes.push_back(ops::reshape(res.rgb, {1, s, s, 3}));
    const auto crop = crop_patch(v.image, ps);
    reals.insert(reals.end(), crop.begin(), crop.end());
    if (cfg_.lambda.dreg > 0.0) {
      Var d = density_reg(res.sigma);
      dreg = dreg.valid() ? ops::add(dreg, d) : d;
    }
  }
  Var fake = stack_batch(fakes);
  const Shape bshape{cfg_.batch, s, s, 3};
  Var real = tape.input(bshape, reals);

  Var geo = geometry_loss(fake, real);
  Var loss = ops::scale(geo, cfg_.lambda.geometry);
  current_.loss_geometry = geo.item();
  if (cfg_.lambda.adv > 0.0) {
    const auto dbound = model_.discriminator.bind_frozen(tape);
    DiscriminatorFn dfn = [&](Var x) {
      return model_.discriminator.forward(dbound, blur_anneal(x, t, cfg_.blur_sigma0, cfg_.blur_cut));
    };
    Var lg = generator_loss(dfn, fake);
    current_.loss_g = lg.item();
    loss = ops::add(loss, ops::scale(lg, cfg_.lambda.adv));
  } else {
    current_.loss_g = 0.0;
  }
  if (dreg.valid()) loss = ops::add(loss, ops::scale(dreg, cfg_.lambda.dreg / cfg_.batch));

  current_.loss_rec = 0.0;
  if (cfg_.lambda.rec > 0.0 && cfg_.rec_patches > 0) {
    const BoundField coarse_only = make_field(std::nullopt);
    Var rec;
    for (int p = 0; p < cfg_.rec_patches; ++p) {
      Rng rng = make_rng(seed_, {0x72, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(p)});
      const int vi = static_cast<int>(rng() % degraded_.size());
      const View& v = degraded_.views[static_cast<std::size_t>(vi)];
      const int side = std::min({s, v.image.width, v.image.height});
      PatchSpec ps = sample_patch_origin(v.image.width, v.image.height, side, t, sched, rng);
      ps.camera = vi;
      const auto res = render_patch(coarse_only, v.camera, ps, cfg_.render, rng);
      Var target = tape.input({static_cast<std::int64_t>(side) * side, 3}, crop_patch(v.image, ps));
      Var r = ops::mse(res.rgb, target);
      rec = rec.valid() ? ops::add(rec, r) : r;
    }
    rec = ops::scale(rec, 1.0 / cfg_.rec_patches);
    current_.loss_rec = rec.item();
    loss = ops::add(loss, ops::scale(rec, cfg_.lambda.rec));
  }

  check_finite(loss.item(), "generator loss", iteration);
  adam_g_->zero_grad();
  tape.backward(loss);
  adam_g_->step();
  fake_cache_.assign(fake.value().begin(), fake.value().end());
  real_cache_ = std::move(reals);
}

void RestorationTrainer::discriminator_step(int iteration) {
  if (fake_cache_.empty()) throw std::logic_error("discriminator_step: run generator_step first");
  const double t = progress(iteration);
  const Shape bshape{cfg_.batch, cfg_.patch, cfg_.patch, 3};
  Tape tape;
  const auto dbound = model_.discriminator.bind(tape);
  Var real = tape.input(bshape, real_cache_, cfg_.lambda.r1 > 0.0);
  Var fake = tape.input(bshape, fake_cache_);
  DiscriminatorFn dfn = [&](Var x) {
    return model_.discriminator.forward(dbound, blur_anneal(x, t, cfg_.blur_sigma0, cfg_.blur_cut));
  };
  Var r1;
  Var ld = discriminator_loss(dfn, real, fake, cfg_.lambda.r1, &r1);
  current_.loss_d = ld.item();
  current_.r1 = r1.item();
  check_finite(current_.loss_d, "discriminator loss", iteration);
  adam_d_->zero_grad();
  tape.backward(ld);
  adam_d_->step();
}

double RestorationTrainer::latent_patch_variance() const {
  const View& v = restored_.views.front();
  const int s = cfg_.patch;
  const PatchSpec ps{(v.image.width - s) / 2, (v.image.height - s) / 2, s, 0};
  RenderOptions opts = cfg_.render;
  opts.jitter = false;
  std::vector<std::vector<double>> renders;
  for (std::uint64_t k = 0; k < 2; ++k) {
    TwoLevelField f = model_.sample(derive_seed(seed_, {0x636f6c, k}));
    Tape tape;
    Tape::NoGradGuard ng(tape);
    const BoundField bf = bind_field(tape, f);
    Rng rng = make_rng(seed_, {0x636f6c});
    const auto res = render_patch(bf, v.camera, ps, opts, rng);
    renders.emplace_back(res.rgb.value().begin(), res.rgb.value().end());
  }
  double var = 0.0;
  for (std::size_t i = 0; i < renders[0].size(); ++i) {
    const double d = renders[0][i] - renders[1][i];
    var += 0.25 * d * d;  // variance of two samples about their mean
  }
  return var / static_cast<double>(renders[0].size());
}

void RestorationTrainer::iterate(int iteration) {
  current_ = TrainLogRow{};
  current_.iteration = iteration;
  generator_step(iteration);
  if (cfg_.lambda.adv > 0.0) discriminator_step(iteration);
  current_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const bool last = iteration + 1 == cfg_.iterations;
  if (cfg_.log_every > 0 && (iteration % cfg_.log_every == 0 || last)) {
    rows_.push_back(current_);
    if (log_file_) {
      char line[256];
      std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f\n", current_.iteration, current_.loss_d,
                    current_.loss_g, current_.loss_geometry, current_.loss_rec, current_.r1, current_.wall_time);
      log_file_ << line << std::flush;
    }
    if (cfg_.lambda.adv > 0.0 && iteration > 0) {
      const double var = latent_patch_variance();
      if (var < cfg_.collapse_threshold) {
        ++collapse_warnings_;
        log::warn("train: possible mode collapse at iteration " + std::to_string(iteration) +
                               ": latent patch variance " + std::to_string(var));
      }
    }
  }
  if (cfg_.checkpoint_every > 0 && !cfg_.checkpoint_dir.empty() && (iteration + 1) % cfg_.checkpoint_every == 0) {
    char name[64];
    std::snprintf(name, sizeof name, "step_%06d.ckpt", iteration + 1);
    write_checkpoint(cfg_.checkpoint_dir / name);
  }
}

void RestorationTrainer::run() {
  for (int it = 0; it < cfg_.iterations; ++it) iterate(it);
}

RestorationModel train_restoration(const TwoLevelField& coarse, const MultiViewSet& restored,
                                   const MultiViewSet& degraded, const TrainConfig& cfg, std::uint64_t seed) {
  RestorationModel m = init_restoration(coarse, cfg, seed);
  RestorationTrainer trainer(m, restored, degraded, cfg, seed);
  trainer.run();
  return m;
}

}  // namespace rafe
