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

#include <functional>
#include <string>
#include <vector>

#include "orbit/core.hpp"
#include "orbit/gateway.hpp"
#include "orbit/jsonio.hpp"

namespace orbit {

struct ScoredRollout {
  std::string query_id;
  int rollout_idx = 0;
  std::string response;
  std::vector<JudgeVerdict> verdicts;
  /// Rubric weights aligned with `verdicts`.
  std::vector<double> weights;
  double reward_raw = 0.0;
  double reward_norm = 0.0;

  bool operator==(const ScoredRollout&) const = default;
};

enum class Normalization {
  kFloored,  // max(0, raw) / total positive weight
  kSigned,   // raw / total positive weight
};

/// Signed sum of the weights of satisfied rubrics. Unscored verdicts count as unsatisfied.
double raw_reward(const std::vector<JudgeVerdict>& verdicts, const RubricSet& rubrics);
double normalize_reward(double raw, const RubricSet& rubrics, Normalization mode = Normalization::kFloored);

using VerdictFn = std::function<JudgeVerdict(const Rubric&)>;

/// Scores one response with one verdict per rubric. Raises RolloutScoringError when at least
/// half of the verdicts are unscored.
ScoredRollout score_rollout(const std::string& query_id, int rollout_idx, const std::string& response,
                            const RubricSet& rubrics, const VerdictFn& verdict_of,
                            Normalization mode = Normalization::kFloored);

/// Same, judging through the gateway with the per-rubric calls fanned out.
ScoredRollout score_rollout(const std::string& query_id, int rollout_idx, const std::string& response,
                            const RubricSet& rubrics, Gateway& gateway, double tau_s,
                            Normalization mode = Normalization::kFloored);

/// Same, judging in-process and sequentially.
ScoredRollout score_rollout(const std::string& query_id, int rollout_idx, const std::string& response,
                            const RubricSet& rubrics, Judge& judge, double tau_s,
                            Normalization mode = Normalization::kFloored);

struct QueryMetrics {
  std::string query_id;
  double avg_norm = 0.0;
  double max_norm = 0.0;
};

struct RubricMetrics {
  std::string query_id;
  std::string rubric_id;
  double weight = 0.0;
  double pass_rate = 0.0;
  /// 1 when satisfied at least once; for deductions, when avoided at least once.
  int hit = 0;
};

struct BatchMetrics {
  std::vector<QueryMetrics> queries;
  std::vector<RubricMetrics> rubrics;
};

/// Groups must each hold exactly K rollouts over the same rubric list.
BatchMetrics batch_metrics(const std::vector<std::vector<ScoredRollout>>& groups, int k);

/// Groups rollouts by query_id, keeping first-appearance order of queries and file order within one.
std::vector<std::vector<ScoredRollout>> group_by_query(const std::vector<ScoredRollout>& rollouts);

/// Counts over `bins` equal-width bins on [0, 1]; the last bin is closed.
std::vector<int> histogram(const std::vector<double>& values, int bins = 10);
double median(std::vector<double> values);

Json to_json(const ScoredRollout& r);
ScoredRollout scored_rollout_from_json(const Json& j);
/// Report mirroring the distribution analysis: per-query avg/best-of-K, per-rubric pass and hit rates.
Json metrics_report(const BatchMetrics& metrics, int k);

}  // namespace orbit
