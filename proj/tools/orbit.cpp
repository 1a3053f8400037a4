// Copyright 2026 The ORBIT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "orbit/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string band;
  std::optional<double> tau_s;
  std::optional<double> tau_r;
  std::optional<int> n_rollout;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "pipeline config file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--band", band, "moderate-difficulty band LOW:HIGH");
    cmd->add_option("--tau-s", tau_s, "satisfaction threshold");
    cmd->add_option("--tau-r", tau_r, "rubric pass-rate threshold");
    cmd->add_option("--n-rollout", n_rollout, "rollouts per query");
    cmd->add_option("--seed", seed, "global seed");
  }

  orbit::PipelineConfig load() const {
    orbit::ConfigOverrides o{std::nullopt, tau_s, tau_r, n_rollout, seed};
    if (!band.empty()) o.band = orbit::parse_band(band);
    return orbit::load_pipeline_config(config, orbit::process_env(), o);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbit: rubric generation, filtering and GRPO toy training"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  CommonFlags flags;

  auto* build_db = app.add_subcommand("build-db", "embed seed dialogues and rubrics into a diagnostic database");
  flags.attach(build_db);

  std::string queries, rubricsets, scorematrix, scored, out;
  int k = 0;

  auto* gen = app.add_subcommand("gen", "generate rubric sets for new queries");
  flags.attach(gen);
  gen->add_option("--queries", queries, "queries JSONL")->required();

  auto* rollout = app.add_subcommand("rollout-score", "sample policy rollouts and score them against rubric sets");
  flags.attach(rollout);
  rollout->add_option("--queries", queries, "queries JSONL")->required();
  rollout->add_option("--rubricsets", rubricsets, "rubric sets JSONL")->required();

  auto* filter = app.add_subcommand("filter", "select moderate-difficulty queries and discriminative rubrics");
  flags.attach(filter);
  filter->add_option("--scorematrix", scorematrix, "score matrix JSONL")->required();
  filter->add_option("--rubricsets", rubricsets, "rubric sets JSONL")->required();
  filter->add_option("--queries", queries, "queries JSONL to subset");

  auto* train = app.add_subcommand("train-toy", "train the tabular toy policy with GRPO");
  flags.attach(train);
  train->add_option("--rubricsets", rubricsets, "rubric sets JSONL (synthetic environment when absent)");

  auto* eval = app.add_subcommand("eval", "score distribution report");
  flags.attach(eval);
  eval->add_option("--scored", scored, "scored rollouts JSONL")->required();
  eval->add_option("--k", k, "rollouts per query");
  eval->add_option("--out", out, "report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  auto opt_path = [](const std::string& s) -> std::optional<orbit::fs::path> {
    if (s.empty()) return std::nullopt;
    return orbit::fs::path(s);
  };

  try {
    const auto cfg = flags.load();
    if (build_db->parsed()) {
      const auto s = orbit::cmd_build_db(cfg);
      std::cout << "cases=" << s.cases << " rubric_entries=" << s.rubric_entries << "\n";
    } else if (gen->parsed()) {
      const auto s = orbit::cmd_gen(cfg, queries);
      std::cout << "succeeded=" << s.succeeded << " failed=" << s.failed << " out=" << s.rubricsets.string() << "\n";
    } else if (rollout->parsed()) {
      const auto s = orbit::cmd_rollout_score(cfg, queries, rubricsets);
      std::cout << "queries=" << s.queries << " failed=" << s.failed << " out=" << s.scored.string() << "\n";
    } else if (filter->parsed()) {
      const auto s = orbit::cmd_filter(cfg, scorematrix, rubricsets, opt_path(queries));
      std::cout << "retained=" << s.retained << " dropped=" << s.dropped << " degenerate=" << s.degenerate << "\n";
    } else if (train->parsed()) {
      const auto s = orbit::cmd_train_toy(cfg, opt_path(rubricsets));
      std::cout << "steps=" << s.steps << " baseline_reward_norm=" << s.baseline_mean_reward_norm
                << " final_reward_norm=" << s.final_mean_reward_norm << "\n";
    } else if (eval->parsed()) {
      const auto path = orbit::cmd_eval(cfg, scored, k > 0 ? k : cfg.eval_k, opt_path(out));
      std::cout << "report=" << path.string() << "\n";
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return orbit::exit_code_for(e);
  }
  return 0;
}
