// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "image_fixtures.hpp"
#include "rafe/cli/config.hpp"
#include "rafe/cli/image_io.hpp"
#include "rafe/cli/pipeline.hpp"
#include "rafe/cli/scene.hpp"
#include "rafe/log.hpp"
#include "rafe/metrics/metrics.hpp"
#include "tree_fixtures.hpp"

using namespace rafe;
namespace fs = std::filesystem;

namespace {

struct QuietLog {
  log::Level prev = log::level();
  QuietLog() { log::set_level(log::Level::Off); }
  ~QuietLog() { log::set_level(prev); }
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rafe_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small enough that a full pipeline run takes a couple of seconds.
constexpr const char* kTinyConfig = R"(
name = "tiny"
seed = 3
[scene]
preset = "two_primitive"
supersample = 1
[rig]
train = 4
test = 2
width = 16
height = 16
[degrade]
task = "mixed"
[coarse]
resolution = 8
channels = 4
iterations = 4
patches = 2
patch = 4
[decoder]
color_feature = 3
density_hidden = 8
color_hidden = 8
[train]
iterations = 2
batch = 2
patch = 8
n_strat = 8
n_imp = 0
[generator]
z_dim = 4
w_dim = 4
mapping_layers = 1
base_channels = 4
resolution = 8
[discriminator]
channels = 4
hidden = 8
mbstd_group = 2
[eval]
samples = 3
n_strat = 8
n_imp = 4
)";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_metrics(const fs::path& out) {
  std::map<std::string, std::string> m;
  std::ifstream is(out / "eval" / "metrics.csv");
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() == 4) m[f[2]] = f[3];
  }
  return m;
}

}  // namespace

TEST_CASE("white sphere silhouette matches the projected disc") {
  const SyntheticScene scene = scene_preset("white_sphere", 0);
  const double d = 4.0, r = scene.primitives[0].size.x();
  const Camera cam = look_at({0, 0, d}, {0, 0, 0}, {0, 1, 0}, 0.6911112070083618, 128, 128);
  const ImageBuffer img = trace_scene(scene, cam, 1);
  long covered = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) covered += img.at(x, y, 0) > 0.0 ? 1 : 0;
  const double rho = cam.focal() * r / std::sqrt(d * d - r * r);
  const double disc = M_PI * rho * rho;
  CHECK(std::abs(covered - disc) / disc < 0.01);
}

TEST_CASE("scene synthesis is deterministic and validates") {
  const RigConfig rig{.train = 3, .test = 1, .width = 16, .height = 16};
  const CameraSplit a = make_rig(rig, 9), b = make_rig(rig, 9);
  const MultiViewSet va = synth_scene(scene_preset("desk", 9), a.train);
  const MultiViewSet vb = synth_scene(scene_preset("desk", 9), b.train);
  REQUIRE(va.size() == 3);
  for (std::size_t i = 0; i < va.size(); ++i) CHECK(va.views[i].image.data == vb.views[i].image.data);
  const MultiViewSet vc = synth_scene(scene_preset("desk", 10), a.train);
  CHECK(vc.views[0].image.data != va.views[0].image.data);

  CHECK_THROWS_AS(SyntheticScene{}.validate(), std::invalid_argument);
  SyntheticScene far = scene_preset("white_sphere", 0);
  far.primitives[0].center = Vec3(5, 0, 0);
  CHECK_THROWS_AS(far.validate(), std::invalid_argument);
  CHECK_THROWS_AS(scene_preset("nope", 0), std::invalid_argument);
}

TEST_CASE("lambertian scene ignores the specular exponent") {
  SyntheticScene scene = scene_preset("two_primitive", 4);
  for (auto& p : scene.primitives) p.specular = 0.0;
  const Camera cam = make_rig(RigConfig{.width = 24, .height = 24}, 4).train[2];
  const ImageBuffer base = trace_scene(scene, cam, 1);
  for (auto& p : scene.primitives) p.shininess = 3.0;
  CHECK(trace_scene(scene, cam, 1).data == base.data);
  for (auto& p : scene.primitives) p.specular = 0.8;
  CHECK(trace_scene(scene, cam, 1).data != base.data);
}

TEST_CASE("camera rigs") {
  const CameraSplit obj = make_rig(RigConfig{}, 1);
  CHECK(obj.train.size() == 20);
  CHECK(obj.test.size() == 5);
  for (const auto& c : obj.train) {
    CHECK(c.position().norm() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(c.position().y() > 0.0);
  }
  const CameraSplit fwd = make_rig(RigConfig{.kind = SceneKind::ForwardFacing, .train = 12, .test = 3}, 1);
  CHECK(fwd.train.size() == 12);
  CHECK(fwd.test.size() == 3);
  for (const auto& c : fwd.train) CHECK(c.ndc);
}

TEST_CASE("png quantization and round trip") {
  CHECK(quantize8(0.5) == 128);
  CHECK(quantize8(0.0) == 0);
  CHECK(quantize8(1.0) == 255);
  CHECK(quantize8(-3.0) == 0);
  CHECK(quantize8(7.0) == 255);
  CHECK(quantize8(127.5 / 255.0) == 128);

  const fs::path dir = scratch("png");
  ImageBuffer img = testutil::random_image(13, 7, 2);
  for (auto& v : img.data) v = quantize8(v) / 255.0;
  write_png(dir / "a.png", img);
  const ImageBuffer back = read_png(dir / "a.png");
  CHECK(back.width == 13);
  CHECK(back.height == 7);
  CHECK(back.data == img.data);

  ImageBuffer half(1, 1, 1, 0.5);
  write_png(dir / "half.png", half);
  CHECK(read_png(dir / "half.png").at(0, 0, 0) == 128.0 / 255.0);
}

TEST_CASE("raff round trip and errors") {
  const fs::path dir = scratch("raff");
  const ImageBuffer img = testutil::random_image(9, 5, 3);
  save_image(dir / "a.raff", img);
  const ImageBuffer back = load_image(dir / "a.raff");
  REQUIRE(back.data.size() == img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == static_cast<double>(static_cast<float>(img.data[i])));

  const std::string bytes = slurp(dir / "a.raff");
  CHECK(bytes.substr(0, 4) == "RAFF");
  CHECK(bytes.size() == 16 + 9 * 5 * 3 * 4);
  {
    std::ofstream os(dir / "cut.raff", std::ios::binary);
    os << bytes.substr(0, bytes.size() - 3);
  }
  CHECK_THROWS(load_image(dir / "cut.raff"));
  {
    std::ofstream os(dir / "bad.raff", std::ios::binary);
    os << "NOPE" << bytes.substr(4);
  }
  CHECK_THROWS(load_image(dir / "bad.raff"));
  CHECK_THROWS(save_image(dir / "a.bmp", img));
  CHECK_THROWS(load_image(dir / "missing.png"));
}

TEST_CASE("view sets round trip with cameras") {
  const fs::path dir = scratch("views");
  const CameraSplit rig = make_rig(RigConfig{.train = 3, .test = 1, .width = 8, .height = 8}, 2);
  MultiViewSet set;
  for (std::size_t i = 0; i < rig.train.size(); ++i) set.views.push_back({testutil::random_image(8, 8, i), rig.train[i]});
  save_views(dir, set);
  const MultiViewSet back = load_views(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((back.views[i].camera.c2w - set.views[i].camera.c2w).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.views[i].camera.width == 8);
  }
}

TEST_CASE("config parsing") {
  const ExperimentConfig def = parse_config("");
  CHECK(def.scene == "desk");
  CHECK(def.rig.train == 20);
  CHECK(def.samples == 3);

  const ExperimentConfig c = parse_config(kTinyConfig);
  CHECK(c.seed == 3);
  CHECK(c.rig.width == 16);
  CHECK(c.train.coarse_resolution == 8);
  CHECK(c.train.generator.channels == c.train.channels);
  CHECK(c.train.discriminator.patch == c.train.patch);
  c.validate();

  // Canonical text parses back to the same canonical text.
  const std::string text = format_config(c);
  CHECK(format_config(parse_config(text)) == text);

  auto throws_naming = [](const std::string& text, const std::string& key) {
    try {
      parse_config(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what()).find(key) != std::string::npos;
    }
    return false;
  };
  CHECK(throws_naming("[train]\nitterations = 5\n", "itterations"));
  CHECK(throws_naming("[bogus]\nx = 1\n", "bogus"));
  CHECK(throws_naming("[rig]\nwidth = \"wide\"\n", "width"));
  CHECK(throws_naming("seed = [", "config"));
  CHECK_THROWS_AS(parse_config("[rig]\nkind = \"sideways\"\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("[eval]\nmetrics = [\"lpips\"]\n").validate(), std::invalid_argument);
}

TEST_CASE("task presets") {
  ExperimentConfig c;
  c.task = "mixed";
  const DegradationConfig obj = c.degradation();
  REQUIRE(obj.stages.size() == 3);
  CHECK(obj.stages[0].kind == DegradationStage::Kind::GaussianBlur);
  CHECK(obj.stages[0].radius == 7);
  CHECK(obj.stages[1].kind == DegradationStage::Kind::ShotReadNoise);
  CHECK(obj.stages[1].read == doctest::Approx(25.0 / 255.0).epsilon(1e-15));
  CHECK(obj.stages[1].shot == 0.0);
  CHECK(obj.stages[2].kind == DegradationStage::Kind::Jpeg);
  CHECK(obj.stages[2].quality == 50);
  c.rig.kind = SceneKind::ForwardFacing;
  CHECK(c.degradation().stages[0].radius == 3);

  c.stages = {"jpeg:quality=80"};
  REQUIRE(c.degradation().stages.size() == 1);
  CHECK(c.degradation().stages[0].quality == 80);

  c.task = "nerf_like";
  c.stages.clear();
  CHECK(c.degradation().stages.empty());
}

TEST_CASE("nerf-like degradation renders a field fit on clean views") {
  QuietLog quiet;
  const fs::path out = scratch("nerf_like");
  ExperimentConfig c = parse_config(kTinyConfig);
  c.task = "nerf_like";
  c.nerf_like_iterations = 30;
  run_stage(c, out, "synth");
  run_stage(c, out, "degrade");
  for (const char* split : {"train", "test"}) {
    const MultiViewSet clean = load_views(out / "synth" / split);
    const MultiViewSet deg = load_views(out / "degrade" / split);
    REQUIRE(deg.size() == clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
      CHECK(deg.views[i].camera.c2w == clean.views[i].camera.c2w);
      CHECK(deg.views[i].image.same_extent(clean.views[i].image));
      CHECK(deg.views[i].image.data != clean.views[i].image.data);
      // A real reconstruction, not noise: closer to the view than a flat gray guess.
      const ImageBuffer gray(clean.views[i].image.width, clean.views[i].image.height, 3, 0.5);
      CHECK(psnr(deg.views[i].image, clean.views[i].image) > psnr(gray, clean.views[i].image));
    }
  }
}

TEST_CASE("report with no inputs") {
  const fs::path out = scratch("report_empty");
  const std::string md = write_report(out);
  CHECK(fs::exists(out / "report" / "report.md"));
  for (const char* m : {"degraded", "restored2d", "perframe", "rafe"}) {
    CHECK(md.find(std::string("| ") + m + " | no data | no data | no data | no data | no data |") != std::string::npos);
  }
  CHECK(md.find("Missing inputs") != std::string::npos);
  CHECK(md.find("eval/metrics.csv") != std::string::npos);
}

TEST_CASE("pipeline artifacts, caching and determinism") {
  QuietLog quiet;
  const fs::path root = scratch("pipeline");
  const ExperimentConfig c = parse_config(kTinyConfig);
  run_pipeline(c, root / "a");
  run_pipeline(c, root / "b");
  const fs::path a = root / "a";

  SUBCASE("determinism") {
    const auto diff = testutil::compare_trees(a, root / "b", {"logs"});
    CHECK(diff.files > 20);
    CHECK_MESSAGE(diff.mismatches.empty(), (diff.mismatches.empty() ? "" : diff.mismatches.front()));
  }

  SUBCASE("report layout") {
    const std::string md = slurp(a / "report" / "report.md");
    CHECK(md.find("clean | degraded | restored-2D | perframe | z0 | z1 | z2") != std::string::npos);
    CHECK(md.find("no data") == std::string::npos);
    CHECK(md.find("Missing inputs") == std::string::npos);
    const ImageBuffer strip = read_png(a / "report" / "strips" / "view_000.png");
    CHECK(strip.height == 16);
    CHECK(strip.width == 7 * 16 + 6 * 2);
  }

  SUBCASE("diversity row recomputes from the rendered samples") {
    const auto m = read_metrics(a);
    REQUIRE(m.count("rafe.diversity"));
    const MultiViewSet clean = load_views(a / "synth" / "test");
    double div = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      std::vector<ImageBuffer> set;
      for (int k = 0; k < 3; ++k) set.push_back(load_image(a / "render" / "rafe" / ("z" + std::to_string(k)) / ("view_00" + std::to_string(i) + ".raff")));
      div += diversity_score(set, proxy_distance());
    }
    div /= static_cast<double>(clean.size());
    CHECK(std::stod(m.at("rafe.diversity")) == doctest::Approx(div).epsilon(1e-9));
    CHECK(div > 0.0);
  }

  SUBCASE("a downstream change leaves upstream stages cached") {
    std::map<std::string, fs::file_time_type> before;
    for (const auto& s : pipeline_stages()) before[s] = fs::last_write_time(a / s / "stage.key");
    ExperimentConfig d = c;
    d.samples = 2;
    run_pipeline(d, a);
    for (const char* s : {"synth", "degrade", "restore-2d", "fit-coarse", "perframe", "train"}) {
      CHECK_MESSAGE(fs::last_write_time(a / s / "stage.key") == before[s], s);
    }
    for (const char* s : {"render", "eval", "report"}) {
      CHECK_MESSAGE(fs::last_write_time(a / s / "stage.key") != before[s], s);
    }
    CHECK_FALSE(fs::exists(a / "render" / "rafe" / "z2"));

    // An upstream change reruns everything after it.
    d.train.coarse_iterations = 5;
    run_pipeline(d, a);
    CHECK(fs::last_write_time(a / "synth" / "stage.key") == before["synth"]);
    CHECK(fs::last_write_time(a / "fit-coarse" / "stage.key") != before["fit-coarse"]);
    CHECK(fs::last_write_time(a / "train" / "stage.key") != before["train"]);
  }

  SUBCASE("stage errors name the stage and keep partial state") {
    fs::remove_all(a / "restore-2d" / "train");
    fs::remove(a / "restore-2d" / "stage.key");
    fs::remove_all(a / "degrade" / "train");
    try {
      run_stage(c, a, "restore-2d");
      FAIL("expected a StageError");
    } catch (const StageError& e) {
      CHECK(e.stage() == "restore-2d");
      CHECK(std::string(e.what()).rfind("restore-2d: ", 0) == 0);
    }
    CHECK(fs::exists(a / "restore-2d"));
    CHECK_FALSE(fs::exists(a / "restore-2d" / "stage.key"));
  }
}
