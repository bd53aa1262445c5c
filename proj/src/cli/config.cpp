// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <toml.hpp>

namespace rafe {

namespace {

template <typename T>
struct is_double_array : std::false_type {};
template <std::size_t N>
struct is_double_array<std::array<double, N>> : std::true_type {};

// Reads keys out of one TOML table and remembers which were consumed.
class Reader {
 public:
  Reader(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  template <typename T>
  void get(std::string_view key, T& dst) {
    seen_.insert(std::string(key));
    if (!table_) return;
    const toml::node* node = table_->get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      dst = require(node->value<bool>(), key, "a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      const auto v = require(node->value_exact<std::int64_t>(), key, "an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v < 0) throw std::invalid_argument(where(key) + " must be >= 0");
      }
      dst = static_cast<T>(v);
    } else if constexpr (std::is_floating_point_v<T>) {
      dst = require(node->value<double>(), key, "a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      dst = require(node->value<std::string>(), key, "a string");
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      dst = require(node->value<std::string>(), key, "a string");
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      const toml::array* arr = node->as_array();
      if (!arr) throw std::invalid_argument(where(key) + " must be an array of strings");
      dst.clear();
      for (const auto& el : *arr) dst.push_back(require(el.value<std::string>(), key, "an array of strings"));
    } else if constexpr (is_double_array<T>::value) {
      const std::size_t n = dst.size();
      const std::string what = "an array of " + std::to_string(n) + " numbers";
      const toml::array* arr = node->as_array();
      if (!arr || arr->size() != n) throw std::invalid_argument(where(key) + " must be " + what);
      for (std::size_t i = 0; i < n; ++i) dst[i] = require((*arr)[i].value<double>(), key, what.c_str());
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  Reader sub(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::table* t = nullptr;
    if (table_) {
      if (const toml::node* n = table_->get(key)) {
        t = n->as_table();
        if (!t) throw std::invalid_argument(where(key) + " must be a table");
      }
    }
    return Reader(t, path_.empty() ? std::string(key) : path_ + "." + std::string(key));
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.count(std::string(k.str()))) throw std::invalid_argument("unknown config key " + where(k.str()));
    }
  }

 private:
  template <typename V>
  V require(std::optional<V> v, std::string_view key, const char* what) const {
    if (!v) throw std::invalid_argument(where(key) + " must be " + what);
    return *v;
  }
  std::string where(std::string_view key) const {
    return "'" + (path_.empty() ? std::string(key) : path_ + "." + std::string(key)) + "'";
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string kind_name(SceneKind k) { return k == SceneKind::Object ? "object" : "forward"; }

SceneKind parse_kind(const std::string& s) {
  if (s == "object") return SceneKind::Object;
  if (s == "forward") return SceneKind::ForwardFacing;
  throw std::invalid_argument("'rig.kind' must be \"object\" or \"forward\", got \"" + s + "\"");
}

toml::array string_array(const std::vector<std::string>& v) {
  toml::array a;
  for (const auto& s : v) a.push_back(s);
  return a;
}

toml::array color_array(const std::array<double, 3>& c) { return toml::array{c[0], c[1], c[2]}; }

toml::table to_table(const ExperimentConfig& c) {
  const TrainConfig& t = c.train;
  const DecoderConfig& d = t.decoder;
  return toml::table{
      {"name", c.name},
      {"seed", static_cast<std::int64_t>(c.seed)},
      {"scene", toml::table{{"preset", c.scene}, {"dataset", c.dataset.string()}, {"supersample", c.supersample}}},
      {"rig", toml::table{{"kind", kind_name(c.rig.kind)},
                          {"train", c.rig.train},
                          {"test", c.rig.test},
                          {"radius", c.rig.radius},
                          {"fov_x", c.rig.fov_x},
                          {"width", c.rig.width},
                          {"height", c.rig.height},
                          {"near", c.rig.near},
                          {"far", c.rig.far},
                          {"lateral", c.rig.lateral}}},
      {"degrade", toml::table{{"task", c.task},
                              {"stages", string_array(c.stages)},
                              {"shared_kernel", c.shared_kernel},
                              {"nerf_like_iterations", c.nerf_like_iterations}}},
      {"restore", toml::table{{"amplitude", c.restore_amplitude}, {"per_view", c.restorations_per_view}}},
      {"coarse", toml::table{{"resolution", t.coarse_resolution},
                             {"channels", t.channels},
                             {"init_scale", t.coarse_init_scale},
                             {"bounds", toml::array{t.bounds.lo, t.bounds.hi}},
                             {"iterations", t.coarse_iterations},
                             {"patches", t.coarse_patches},
                             {"patch", t.coarse_patch},
                             {"lr", t.lr_coarse}}},
      {"decoder", toml::table{{"color_feature", d.color_feature},
                              {"density_hidden", d.density_hidden},
                              {"density_layers", d.density_layers},
                              {"color_hidden", d.color_hidden},
                              {"color_layers", d.color_layers},
                              {"dir_frequencies", d.dir_frequencies}}},
      {"train", toml::table{{"iterations", t.iterations},
                            {"batch", t.batch},
                            {"patch", t.patch},
                            {"rec_patches", t.rec_patches},
                            {"lr_g", t.lr_g},
                            {"lr_d", t.lr_d},
                            {"blur_sigma0", t.blur_sigma0},
                            {"blur_cut", t.blur_cut},
                            {"beta_final", t.beta_final},
                            {"use_residual_coarse", t.use_residual_coarse},
                            {"use_viewdir", t.use_viewdir},
                            {"beta_sampling", t.beta_sampling},
                            {"n_strat", t.render.n_strat},
                            {"n_imp", t.render.n_imp},
                            {"background", color_array(t.render.background)},
                            {"log_every", t.log_every},
                            {"checkpoint_every", t.checkpoint_every},
                            {"collapse_threshold", t.collapse_threshold},
                            {"lambda", toml::table{{"geometry", t.lambda.geometry},
                                                   {"adv", t.lambda.adv},
                                                   {"rec", t.lambda.rec},
                                                   {"r1", t.lambda.r1},
                                                   {"tv", t.lambda.tv},
                                                   {"dis", t.lambda.dis},
                                                   {"dreg", t.lambda.dreg}}}}},
      {"generator", toml::table{{"z_dim", t.generator.z_dim},
                                {"w_dim", t.generator.w_dim},
                                {"mapping_layers", t.generator.mapping_layers},
                                {"base_channels", t.generator.base_channels},
                                {"resolution", t.generator.resolution},
                                {"output_scale", t.generator.output_scale}}},
      {"discriminator", toml::table{{"channels", t.discriminator.channels},
                                    {"hidden", t.discriminator.hidden},
                                    {"mbstd_group", t.discriminator.mbstd_group}}},
      {"eval", toml::table{{"samples", c.samples},
                           {"n_strat", c.eval_render.n_strat},
                           {"n_imp", c.eval_render.n_imp},
                           {"perframe", c.perframe},
                           {"metrics", string_array(c.metrics)}}},
  };
}

std::string dump(const toml::table& t) {
  std::ostringstream os;
  os << toml::toml_formatter(t, toml::format_flags::none);
  return os.str();
}

}  // namespace

DegradationConfig ExperimentConfig::degradation() const {
  if (task == "nerf_like") return {};
  DegradationConfig cfg;
  if (stages.empty()) {
    cfg = degradation_preset(task, rig.kind, derive_seed(seed, {0x646567}));
  } else {
    for (const auto& s : stages) cfg.stages.push_back(parse_stage(s));
  }
  cfg.shared_kernel = shared_kernel;
  return cfg;
}

void ExperimentConfig::validate() const {
  rig.validate();
  train.validate();
  if (supersample < 1) throw std::invalid_argument("'scene.supersample' must be >= 1");
  if (samples < 1) throw std::invalid_argument("'eval.samples' must be >= 1");
  if (restorations_per_view < 1) throw std::invalid_argument("'restore.per_view' must be >= 1");
  if (!(restore_amplitude >= 0.0)) throw std::invalid_argument("'restore.amplitude' must be >= 0");
  if (nerf_like_iterations < 0) throw std::invalid_argument("'degrade.nerf_like_iterations' must be >= 0");
  if (dataset.empty()) scene_preset(scene, seed).validate(train.bounds);
  for (const auto& m : metrics) {
    if (m != "psnr" && m != "ssim" && m != "proxy" && m != "hf_energy" && m != "diversity") {
      throw std::invalid_argument("'eval.metrics' has unknown metric \"" + m + "\"");
    }
  }
  degradation();
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw std::invalid_argument(os.str());
  }
  ExperimentConfig c;
  TrainConfig& t = c.train;
  Reader r(&root, "");
  r.get("name", c.name);
  r.get("seed", c.seed);

  Reader scene = r.sub("scene");
  scene.get("preset", c.scene);
  scene.get("dataset", c.dataset);
  scene.get("supersample", c.supersample);
  scene.finish();

  Reader rig = r.sub("rig");
  std::string kind = kind_name(c.rig.kind);
  rig.get("kind", kind);
  c.rig.kind = parse_kind(kind);
  rig.get("train", c.rig.train);
  rig.get("test", c.rig.test);
  rig.get("radius", c.rig.radius);
  rig.get("fov_x", c.rig.fov_x);
  rig.get("width", c.rig.width);
  rig.get("height", c.rig.height);
  rig.get("near", c.rig.near);
  rig.get("far", c.rig.far);
  rig.get("lateral", c.rig.lateral);
  rig.finish();

  Reader deg = r.sub("degrade");
  deg.get("task", c.task);
  deg.get("stages", c.stages);
  deg.get("shared_kernel", c.shared_kernel);
  deg.get("nerf_like_iterations", c.nerf_like_iterations);
  deg.finish();

  Reader res = r.sub("restore");
  res.get("amplitude", c.restore_amplitude);
  res.get("per_view", c.restorations_per_view);
  res.finish();

  Reader co = r.sub("coarse");
  co.get("resolution", t.coarse_resolution);
  co.get("channels", t.channels);
  co.get("init_scale", t.coarse_init_scale);
  std::array<double, 2> bounds{t.bounds.lo, t.bounds.hi};
  co.get("bounds", bounds);
  t.bounds = {bounds[0], bounds[1]};
  co.get("iterations", t.coarse_iterations);
  co.get("patches", t.coarse_patches);
  co.get("patch", t.coarse_patch);
  co.get("lr", t.lr_coarse);
  co.finish();

  Reader dec = r.sub("decoder");
  dec.get("color_feature", t.decoder.color_feature);
  dec.get("density_hidden", t.decoder.density_hidden);
  dec.get("density_layers", t.decoder.density_layers);
  dec.get("color_hidden", t.decoder.color_hidden);
  dec.get("color_layers", t.decoder.color_layers);
  dec.get("dir_frequencies", t.decoder.dir_frequencies);
  dec.finish();

  Reader tr = r.sub("train");
  tr.get("iterations", t.iterations);
  tr.get("batch", t.batch);
  tr.get("patch", t.patch);
  tr.get("rec_patches", t.rec_patches);
  tr.get("lr_g", t.lr_g);
  tr.get("lr_d", t.lr_d);
  tr.get("blur_sigma0", t.blur_sigma0);
  tr.get("blur_cut", t.blur_cut);
  tr.get("beta_final", t.beta_final);
  tr.get("use_residual_coarse", t.use_residual_coarse);
  tr.get("use_viewdir", t.use_viewdir);
  tr.get("beta_sampling", t.beta_sampling);
  tr.get("n_strat", t.render.n_strat);
  tr.get("n_imp", t.render.n_imp);
  tr.get("background", t.render.background);
  tr.get("log_every", t.log_every);
  tr.get("checkpoint_every", t.checkpoint_every);
  tr.get("collapse_threshold", t.collapse_threshold);
  Reader lam = tr.sub("lambda");
  lam.get("geometry", t.lambda.geometry);
  lam.get("adv", t.lambda.adv);
  lam.get("rec", t.lambda.rec);
  lam.get("r1", t.lambda.r1);
  lam.get("tv", t.lambda.tv);
  lam.get("dis", t.lambda.dis);
  lam.get("dreg", t.lambda.dreg);
  lam.finish();
  tr.finish();

  Reader gen = r.sub("generator");
  gen.get("z_dim", t.generator.z_dim);
  gen.get("w_dim", t.generator.w_dim);
  gen.get("mapping_layers", t.generator.mapping_layers);
  gen.get("base_channels", t.generator.base_channels);
  gen.get("resolution", t.generator.resolution);
  gen.get("output_scale", t.generator.output_scale);
  gen.finish();

  Reader dis = r.sub("discriminator");
  dis.get("channels", t.discriminator.channels);
  dis.get("hidden", t.discriminator.hidden);
  dis.get("mbstd_group", t.discriminator.mbstd_group);
  dis.finish();

  Reader ev = r.sub("eval");
  ev.get("samples", c.samples);
  ev.get("n_strat", c.eval_render.n_strat);
  ev.get("n_imp", c.eval_render.n_imp);
  ev.get("perframe", c.perframe);
  ev.get("metrics", c.metrics);
  ev.finish();
  r.finish();

  // Derived couplings.
  t.decoder.feature_channels = t.channels;
  t.generator.channels = t.channels;
  t.discriminator.patch = t.patch;
  c.eval_render.background = t.render.background;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string format_config(const ExperimentConfig& cfg) { return dump(to_table(cfg)) + "\n"; }

std::string format_section(const ExperimentConfig& cfg, std::string_view section) {
  const toml::table t = to_table(cfg);
  const toml::node* n = t.get(section);
  if (!n) throw std::invalid_argument("unknown config section '" + std::string(section) + "'");
  if (const toml::table* sub = n->as_table()) return dump(*sub);
  toml::table single;
  single.insert(section, *n);
  return dump(single);
}

}  // namespace rafe
