// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "rafe/cli/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rafe/cli/image_io.hpp"
#include "rafe/cli/scene.hpp"
#include "rafe/log.hpp"
#include "rafe/metrics/metrics.hpp"
#include "rafe/numerics/rng.hpp"
#include "rafe/training/train.hpp"

namespace rafe {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string view_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03zu.%s", i, ext);
  return buf;
}

// Fields of [train] that the coarse fits read.
std::string coarse_train_fields(const ExperimentConfig& c) {
  const TrainConfig& t = c.train;
  std::ostringstream os;
  os << "rec=" << num(t.lambda.rec) << " tv=" << num(t.lambda.tv) << " dis=" << num(t.lambda.dis)
     << " n_strat=" << t.render.n_strat << " n_imp=" << t.render.n_imp << " viewdir=" << t.use_viewdir << " bg="
     << num(t.render.background[0]) << "," << num(t.render.background[1]) << "," << num(t.render.background[2]);
  return os.str();
}

const std::map<std::string, std::vector<std::string>>& stage_deps() {
  static const std::map<std::string, std::vector<std::string>> deps{
      {"synth", {}},
      {"degrade", {"synth"}},
      {"restore-2d", {"degrade"}},
      {"fit-coarse", {"degrade"}},
      {"perframe", {"restore-2d"}},
      {"train", {"fit-coarse", "restore-2d"}},
      {"render", {"train", "perframe"}},
      {"eval", {"render", "restore-2d"}},
      {"report", {"eval"}},
  };
  return deps;
}

std::string stage_inputs(const ExperimentConfig& c, const std::string& stage) {
  std::string s = "stage=" + stage + "\n";
  auto add = [&](std::string_view section) { s += format_section(c, section) + "\n"; };
  if (stage == "synth") {
    s += "seed=" + std::to_string(c.seed) + "\n";
    add("scene");
    add("rig");
  } else if (stage == "degrade") {
    add("degrade");
    if (c.task == "nerf_like") {
      add("coarse");
      add("decoder");
      add("eval");
      s += coarse_train_fields(c) + "\n";
    }
  } else if (stage == "restore-2d") {
    add("restore");
  } else if (stage == "fit-coarse" || stage == "perframe") {
    add("coarse");
    add("decoder");
    s += coarse_train_fields(c) + "\n";
  } else if (stage == "train") {
    add("train");
    add("generator");
    add("discriminator");
  } else if (stage == "render") {
    add("eval");
  } else if (stage == "eval") {
    add("eval");
    s += "scene=" + c.scene + " task=" + c.task + "\n";
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return {};
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

TrainConfig stage_train_config(const ExperimentConfig& c) {
  TrainConfig t = c.train;
  t.log_path.clear();
  t.checkpoint_dir.clear();
  return t;
}

MultiViewSet render_views(TwoLevelField& field, const std::vector<Camera>& cams, const RenderOptions& opts,
                          std::uint64_t seed) {
  MultiViewSet out;
  for (std::size_t i = 0; i < cams.size(); ++i) {
    ImageBuffer img = render_image(field, cams[i], opts, derive_seed(seed, {i}));
    img.clamp01();
    out.views.push_back({std::move(img), cams[i]});
  }
  return out;
}

std::vector<Camera> cameras_of(const MultiViewSet& set) {
  std::vector<Camera> cams;
  for (const auto& v : set.views) cams.push_back(v.camera);
  return cams;
}

void save_renders(const fs::path& dir, const MultiViewSet& views) {
  save_views(dir, views, "raff");
  for (std::size_t i = 0; i < views.size(); ++i) write_png(dir / view_name(i, "png"), views.views[i].image);
}

// ---- stages ----

void stage_synth(const ExperimentConfig& c, const fs::path& dir) {
  if (!c.dataset.empty()) {
    save_views(dir / "train", load_views(c.dataset / "train"));
    save_views(dir / "test", load_views(c.dataset / "test"));
    return;
  }
  const SyntheticScene scene = scene_preset(c.scene, c.seed);
  scene.validate(c.train.bounds);
  const CameraSplit rig = make_rig(c.rig, c.seed);
  save_views(dir / "train", synth_scene(scene, rig.train, c.supersample));
  save_views(dir / "test", synth_scene(scene, rig.test, c.supersample));
}

void stage_degrade(const ExperimentConfig& c, const fs::path& out, const fs::path& dir) {
  const MultiViewSet train = load_views(out / "synth" / "train");
  const MultiViewSet test = load_views(out / "synth" / "test");
  if (c.task == "nerf_like") {
    TrainConfig t = stage_train_config(c);
    t.coarse_iterations = c.nerf_like_iterations;
    TwoLevelField f = fit_coarse(train, t, derive_seed(c.seed, {0x6e6c}));
    save_views(dir / "train", render_views(f, cameras_of(train), c.eval_render, derive_seed(c.seed, {0x6e6c, 1})));
    save_views(dir / "test", render_views(f, cameras_of(test), c.eval_render, derive_seed(c.seed, {0x6e6c, 2})));
    return;
  }
  const DegradationConfig dcfg = c.degradation();
  auto run = [&](const MultiViewSet& in, std::uint64_t offset) {
    MultiViewSet outv;
    for (std::size_t i = 0; i < in.size(); ++i) {
      Camera cam = in.views[i].camera;
      ImageBuffer img = apply_degradation(in.views[i].image, dcfg, offset + i, &cam);
      outv.views.push_back({std::move(img), cam});
    }
    return outv;
  };
  save_views(dir / "train", run(train, 0));
  save_views(dir / "test", run(test, 1000));
}

void stage_restore(const ExperimentConfig& c, const fs::path& out, const fs::path& dir) {
  auto run = [&](const char* split, int per_view, std::uint64_t tag) {
    const MultiViewSet clean = load_views(out / "synth" / split);
    const MultiViewSet degraded = load_views(out / "degrade" / split);
    if (clean.size() != degraded.size()) throw std::runtime_error(std::string("view count mismatch in ") + split);
    MultiViewSet restored;
    for (int r = 0; r < per_view; ++r) {
      for (std::size_t i = 0; i < clean.size(); ++i) {
        const ImageBuffer& cl = clean.views[i].image;
        const ImageBuffer deg = resize_nearest(degraded.views[i].image, cl.width, cl.height);
        const auto seed = derive_seed(c.seed, {0x7265, tag, i, static_cast<std::uint64_t>(r)});
        restored.views.push_back({oracle_restore(cl, deg, c.restore_amplitude, seed), clean.views[i].camera});
      }
    }
    save_views(dir / split, restored);
  };
  run("train", c.restorations_per_view, 0);
  run("test", 1, 1);
}

void stage_fit(const ExperimentConfig& c, const fs::path& views_dir, const fs::path& dir, std::uint64_t tag) {
  TrainConfig t = stage_train_config(c);
  t.checkpoint_dir = dir;
  std::vector<double> losses;
  const TwoLevelField f = fit_coarse(load_views(views_dir), t, derive_seed(c.seed, {tag}), &losses);
  save_field(dir / "field.ckpt", f);
  std::string csv = "iteration,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) csv += std::to_string(i) + "," + num(losses[i]) + "\n";
  write_text(dir / "loss.csv", csv);
}

void stage_train(const ExperimentConfig& c, const fs::path& out, const fs::path& dir) {
  TrainConfig t = stage_train_config(c);
  t.log_path = out / "logs" / "train.csv";
  if (t.checkpoint_every > 0) t.checkpoint_dir = dir / "ckpt";
  const TwoLevelField coarse = load_field(out / "fit-coarse" / "field.ckpt");
  const MultiViewSet restored = load_views(out / "restore-2d" / "train");
  const MultiViewSet degraded = load_views(out / "degrade" / "train");
  const RestorationModel m = train_restoration(coarse, restored, degraded, t, derive_seed(c.seed, {0x7472}));
  save_restoration(dir / "model", m);
}

void stage_render(const ExperimentConfig& c, const fs::path& out, const fs::path& dir) {
  const std::vector<Camera> cams = cameras_of(load_views(out / "synth" / "test"));
  const RestorationModel m = load_restoration(out / "train" / "model");
  for (int k = 0; k < c.samples; ++k) {
    TwoLevelField f = m.sample(derive_seed(c.seed, {0x7a, static_cast<std::uint64_t>(k)}));
    save_renders(dir / "rafe" / ("z" + std::to_string(k)),
                 render_views(f, cams, c.eval_render, derive_seed(c.seed, {0x726e, static_cast<std::uint64_t>(k)})));
  }
  if (c.perframe) {
    TwoLevelField f = load_field(out / "perframe" / "field.ckpt");
    save_renders(dir / "perframe", render_views(f, cams, c.eval_render, derive_seed(c.seed, {0x726e, 0x7066})));
  }
}

struct MethodScores {
  std::vector<double> psnr, ssim, proxy, hf;
};

void stage_eval(const ExperimentConfig& c, const fs::path& out, const fs::path& dir) {
  const MultiViewSet clean = load_views(out / "synth" / "test");
  std::map<std::string, MultiViewSet> methods;
  methods["degraded"] = load_views(out / "degrade" / "test");
  methods["restored2d"] = load_views(out / "restore-2d" / "test");
  if (c.perframe) methods["perframe"] = load_views(out / "render" / "perframe");
  std::vector<MultiViewSet> samples;
  for (int k = 0; k < c.samples; ++k) samples.push_back(load_views(out / "render" / "rafe" / ("z" + std::to_string(k))));
  methods["rafe"] = samples.front();

  auto wants = [&](const char* m) { return std::find(c.metrics.begin(), c.metrics.end(), m) != c.metrics.end(); };
  std::string per_view = "method,view,sample,psnr,ssim,proxy,hf_energy\n";
  std::map<std::string, MethodScores> scores;
  auto score = [&](const std::string& name, const MultiViewSet& set, int sample) {
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const ImageBuffer& ref = clean.views[i].image;
      const ImageBuffer img = resize_nearest(set.views[i].image, ref.width, ref.height);
      const double p = psnr(img, ref), s = ssim(img, ref), d = perceptual_proxy(img, ref), h = hf_energy(img);
      MethodScores& ms = scores[name];
      ms.psnr.push_back(p);
      ms.ssim.push_back(s);
      ms.proxy.push_back(d);
      ms.hf.push_back(h);
      per_view += name + "," + std::to_string(i) + "," + std::to_string(sample) + "," + num(p) + "," + num(s) + "," +
                  num(d) + "," + num(h) + "\n";
    }
  };
  for (const auto& [name, set] : methods) {
    if (name == "rafe") continue;
    score(name, set, 0);
  }
  for (int k = 0; k < c.samples; ++k) score("rafe", samples[static_cast<std::size_t>(k)], k);

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  std::string csv = "scene,task,metric,value\n";
  auto row = [&](const std::string& metric, double v) { csv += c.scene + "," + c.task + "," + metric + "," + num(v) + "\n"; };
  for (const auto& [name, ms] : scores) {
    if (wants("psnr")) row(name + ".psnr", mean(ms.psnr));
    if (wants("ssim")) row(name + ".ssim", mean(ms.ssim));
    if (wants("proxy")) row(name + ".proxy", mean(ms.proxy));
    if (wants("hf_energy")) row(name + ".hf_energy", mean(ms.hf));
  }
  if (wants("diversity") && c.samples >= 2) {
    double div = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      std::vector<ImageBuffer> set;
      for (const auto& s : samples) set.push_back(s.views[i].image);
      div += diversity_score(set, proxy_distance());
    }
    row("rafe.diversity", div / static_cast<double>(clean.size()));
  }
  write_text(dir / "metrics.csv", csv);
  write_text(dir / "per_view.csv", per_view);
}

void execute(const ExperimentConfig& c, const fs::path& out, const std::string& stage, const fs::path& dir) {
  if (stage == "synth") return stage_synth(c, dir);
  if (stage == "degrade") return stage_degrade(c, out, dir);
  if (stage == "restore-2d") return stage_restore(c, out, dir);
  if (stage == "fit-coarse") return stage_fit(c, out / "degrade" / "train", dir, 0x6663);
  if (stage == "perframe") {
    if (c.perframe) stage_fit(c, out / "restore-2d" / "train", dir, 0x7066);
    return;
  }
  if (stage == "train") return stage_train(c, out, dir);
  if (stage == "render") return stage_render(c, out, dir);
  if (stage == "eval") return stage_eval(c, out, dir);
  if (stage == "report") {
    write_report(out);
    return;
  }
  throw std::invalid_argument("unknown stage '" + stage + "'");
}

}  // namespace

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> stages{"synth", "degrade", "restore-2d", "fit-coarse", "perframe",
                                               "train", "render",  "eval",       "report"};
  return stages;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string stage_key(const ExperimentConfig& cfg, std::string_view stage) {
  const auto& deps = stage_deps();
  const auto it = deps.find(std::string(stage));
  if (it == deps.end()) throw std::invalid_argument("unknown stage '" + std::string(stage) + "'");
  std::string text = stage_inputs(cfg, it->first);
  for (const auto& d : it->second) text += "dep " + d + "=" + stage_key(cfg, d) + "\n";
  return hex64(fnv1a64(text));
}

bool run_stage(const ExperimentConfig& cfg, const fs::path& out, std::string_view stage, const StageOptions& opts) {
  const std::string name(stage);
  try {
    const std::string key = stage_key(cfg, name);
    const fs::path dir = out / name;
    const fs::path key_file = dir / "stage.key";
    if (!opts.force && read_text(key_file) == key + "\n") {
      log::info(name + ": cached (" + key + ")");
      return false;
    }
    log::info(name + ": running");
    fs::remove_all(dir);
    fs::create_directories(dir);
    execute(cfg, out, name, dir);
    write_text(key_file, key + "\n");
    return true;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void run_pipeline(const ExperimentConfig& cfg, const fs::path& out, const StageOptions& opts) {
  try {
    cfg.validate();
    fs::create_directories(out);
    write_text(out / "config.toml", format_config(cfg));
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  std::set<std::string> ran;
  for (const auto& s : pipeline_stages()) {
    StageOptions o = opts;
    for (const auto& d : stage_deps().at(s)) o.force = o.force || ran.count(d) > 0;
    if (run_stage(cfg, out, s, o)) ran.insert(s);
  }
}

ImageBuffer resize_nearest(const ImageBuffer& img, int width, int height) {
  if (img.width == width && img.height == height) return img;
  if (img.width < 1 || img.height < 1) throw std::invalid_argument("resize_nearest: empty image");
  ImageBuffer out(width, height, img.channels);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(img.height - 1, static_cast<int>(static_cast<long>(y) * img.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(img.width - 1, static_cast<int>(static_cast<long>(x) * img.width / width));
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

std::string write_report(const fs::path& out) {
  const fs::path dir = out / "report";
  fs::create_directories(dir / "strips");
  std::vector<std::string> missing;

  // Metric table: rows are methods, columns metrics.
  const std::vector<std::string> methods{"degraded", "restored2d", "perframe", "rafe"};
  const std::vector<std::string> metric_cols{"psnr", "ssim", "proxy", "hf_energy", "diversity"};
  std::map<std::string, std::string> values;
  std::string scene = "-", task = "-";
  const fs::path metrics_csv = out / "eval" / "metrics.csv";
  std::ifstream is(metrics_csv);
  if (!is) {
    missing.push_back(metrics_csv.lexically_relative(out).string());
  } else {
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      if (f.size() != 4) continue;
      scene = f[0];
      task = f[1];
      values[f[2]] = f[3];
    }
  }

  std::ostringstream md;
  md << "# Restoration report\n\n";
  md << "Scene: " << scene << "  \nTask: " << task << "\n\n";
  md << "| method |";
  for (const auto& m : metric_cols) md << " " << m << " |";
  md << "\n|---|";
  for (std::size_t i = 0; i < metric_cols.size(); ++i) md << "---|";
  md << "\n";
  for (const auto& method : methods) {
    bool any = false;
    std::ostringstream row;
    row << "| " << method << " |";
    for (const auto& m : metric_cols) {
      const auto it = values.find(method + "." + m);
      if (it != values.end()) any = true;
      row << " " << (it != values.end() ? it->second : "-") << " |";
    }
    if (any) {
      md << row.str() << "\n";
    } else {
      md << "| " << method << " |";
      for (std::size_t i = 0; i < metric_cols.size(); ++i) md << " no data |";
      md << "\n";
    }
  }

  // Comparison strips.
  int samples = 0;
  while (fs::exists(out / "render" / "rafe" / ("z" + std::to_string(samples)) / "transforms.json")) ++samples;
  std::size_t views = 0;
  const fs::path clean_dir = out / "synth" / "test";
  MultiViewSet clean, degraded, restored, perframe;
  std::vector<MultiViewSet> rafe;
  auto try_load = [&](const fs::path& d, MultiViewSet& dst) {
    try {
      dst = load_views(d);
    } catch (const std::exception&) {
      missing.push_back(d.lexically_relative(out).string());
    }
  };
  try_load(clean_dir, clean);
  try_load(out / "degrade" / "test", degraded);
  try_load(out / "restore-2d" / "test", restored);
  if (fs::exists(out / "render" / "perframe")) try_load(out / "render" / "perframe", perframe);
  for (int k = 0; k < samples; ++k) {
    rafe.emplace_back();
    try_load(out / "render" / "rafe" / ("z" + std::to_string(k)), rafe.back());
  }
  if (samples == 0) missing.push_back("render/rafe");
  views = clean.size();

  md << "\n## Comparison strips\n\n";
  std::string columns = "clean | degraded | restored-2D";
  if (!perframe.empty()) columns += " | perframe";
  for (int k = 0; k < samples; ++k) columns += " | z" + std::to_string(k);
  md << "Columns: " << columns << "\n\n";
  for (std::size_t i = 0; i < views; ++i) {
    const ImageBuffer& ref = clean.views[i].image;
    std::vector<ImageBuffer> row{ref};
    auto push = [&](const MultiViewSet& s) {
      if (i < s.size()) row.push_back(resize_nearest(s.views[i].image, ref.width, ref.height));
    };
    push(degraded);
    push(restored);
    push(perframe);
    for (const auto& s : rafe) push(s);
    const std::string name = view_name(i, "png");
    write_png(dir / "strips" / name, hstack(row));
    md << "![view " << i << "](strips/" << name << ")\n";
  }
  if (views == 0) md << "no data\n";

  if (!missing.empty()) {
    md << "\n## Missing inputs\n\n";
    for (const auto& m : missing) md << "- " << m << "\n";
  }
  const std::string text = md.str();
  write_text(dir / "report.md", text);
  return text;
}

}  // namespace rafe
