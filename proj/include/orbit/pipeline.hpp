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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "orbit/core.hpp"
#include "orbit/gateway.hpp"
#include "orbit/grpo.hpp"
#include "orbit/jsonio.hpp"
#include "orbit/rubricgen.hpp"

namespace orbit {

namespace fs = std::filesystem;

struct PipelinePaths {
  fs::path dialogues;
  fs::path rubrics;
  fs::path db_dir;
  fs::path work_dir;
  /// Optional rubric-generation templates; the built-in pair is used when unset.
  fs::path system_template;
  fs::path task_template;
};

struct PipelineConfig {
  PipelinePaths paths;
  BackendConfig embedder;
  BackendConfig generator;
  BackendConfig policy;
  BackendConfig judge;
  BackendConfig reranker;
  FilterConfig filter;
  RubricGenConfig rubricgen;
  ToyEnvSpec toy;
  TrainConfig train;
  int eval_k = 8;
  int embed_batch_size = 64;
  std::optional<std::uint64_t> seed;

  std::uint64_t require_seed() const;
  void validate() const;
};

/// Command-line overrides; they win over environment and file.
struct ConfigOverrides {
  std::optional<std::pair<double, double>> band;
  std::optional<double> tau_s;
  std::optional<double> tau_r;
  std::optional<int> n_rollout;
  std::optional<std::uint64_t> seed;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Replaces ${NAME} in every string value. Unknown names raise ConfigError.
Json interpolate_env(const Json& j, const EnvLookup& env);

/// File, then ORBIT_* environment variables, then overrides. Relative paths resolve against the
/// config file's directory.
PipelineConfig load_pipeline_config(const fs::path& file, const EnvLookup& env = process_env(),
                                    const ConfigOverrides& overrides = {});
PipelineConfig pipeline_config_from_json(const Json& j, const fs::path& base_dir, const EnvLookup& env,
                                         const ConfigOverrides& overrides);

/// "LOW:HIGH" as used by --band.
std::pair<double, double> parse_band(const std::string& text);

Gateway make_gateway(const PipelineConfig& cfg);

/// Exclusive lock on a work directory; stale locks from dead processes are reclaimed.
class WorkDirLock {
 public:
  explicit WorkDirLock(const fs::path& work_dir);
  ~WorkDirLock();
  WorkDirLock(const WorkDirLock&) = delete;
  WorkDirLock& operator=(const WorkDirLock&) = delete;

 private:
  fs::path path_;
};

struct BuildDbSummary {
  std::size_t cases = 0;
  std::size_t rubric_entries = 0;
};

struct GenSummary {
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  fs::path rubricsets;
  fs::path failures;
};

struct RolloutSummary {
  std::size_t queries = 0;
  std::size_t failed = 0;
  fs::path scored;
  fs::path scorematrix;
};

struct FilterSummary {
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::size_t degenerate = 0;
  fs::path report;
  fs::path rubricsets;
  fs::path queries;
};

struct TrainSummary {
  std::size_t steps = 0;
  double final_mean_reward_norm = 0.0;
  double baseline_mean_reward_norm = 0.0;
  fs::path metrics;
  fs::path checkpoints;
};

BuildDbSummary cmd_build_db(const PipelineConfig& cfg);
GenSummary cmd_gen(const PipelineConfig& cfg, const fs::path& queries);
RolloutSummary cmd_rollout_score(const PipelineConfig& cfg, const fs::path& queries, const fs::path& rubricsets);
FilterSummary cmd_filter(const PipelineConfig& cfg, const fs::path& scorematrix, const fs::path& rubricsets,
                         const std::optional<fs::path>& queries = std::nullopt);
/// Trains on the synthetic toy environment, or on `rubricsets` when given.
TrainSummary cmd_train_toy(const PipelineConfig& cfg, const std::optional<fs::path>& rubricsets = std::nullopt);
/// Writes the distribution report; returns its path.
fs::path cmd_eval(const PipelineConfig& cfg, const fs::path& scored, int k,
                  const std::optional<fs::path>& out = std::nullopt);

/// 0 success, 1 user/config error, 2 backend error, 3 internal error.
int exit_code_for(const std::exception& e);

}  // namespace orbit
