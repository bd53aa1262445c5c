// Copyright 2026 The RaFE-Desk Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: one subcommand per pipeline stage, plus `pipeline`.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rafe/cli/config.hpp"
#include "rafe/cli/pipeline.hpp"
#include "rafe/log.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
};

void add_common(CLI::App* sub, Common& c, bool needs_config = true) {
  auto* opt = sub->add_option("--config", c.config, "Experiment config (TOML)");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Global seed (overrides the config)");
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_flag("--force", c.force, "Ignore cached stage results");
}

rafe::ExperimentConfig load(const Common& c) {
  rafe::ExperimentConfig cfg = rafe::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative radiance-field restoration at desk scale"};
  app.require_subcommand(1);
  app.add_flag_callback("-v,--verbose", [] { rafe::log::set_level(rafe::log::Level::Debug); }, "Debug logging")
      ->trigger_on_parse();
  app.add_flag_callback("-q,--quiet", [] { rafe::log::set_level(rafe::log::Level::Warn); }, "Warnings and errors only")
      ->trigger_on_parse();

  Common common;
  std::string current = "cli";
  for (const std::string& stage : rafe::pipeline_stages()) {
    auto* sub = app.add_subcommand(stage, "Run the " + stage + " stage");
    add_common(sub, common, stage != "report");
    sub->callback([&, stage] {
      current = stage;
      if (stage == "report") {
        std::cout << rafe::write_report(common.out);
        return;
      }
      rafe::ExperimentConfig cfg;
      try {
        cfg = load(common);
      } catch (const std::exception& e) {
        throw rafe::StageError(stage, std::string("config: ") + e.what());
      }
      rafe::run_stage(cfg, common.out, stage, {.force = common.force});
    });
  }
  auto* pipe = app.add_subcommand("pipeline", "Run every stage in order, reusing cached results");
  add_common(pipe, common);
  pipe->callback([&] {
    current = "pipeline";
    rafe::ExperimentConfig cfg;
    try {
      cfg = load(common);
    } catch (const std::exception& e) {
      throw rafe::StageError("config", e.what());
    }
    rafe::run_pipeline(cfg, common.out, {.force = common.force});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const rafe::StageError& e) {
    std::cerr << "error: stage " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: stage " << current << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
