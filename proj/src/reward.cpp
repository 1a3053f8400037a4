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

#include "orbit/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace orbit {

double raw_reward(const std::vector<JudgeVerdict>& verdicts, const RubricSet& rubrics) {
  if (verdicts.size() != rubrics.size()) {
    throw AlignmentError("got " + std::to_string(verdicts.size()) + " verdicts for " + std::to_string(rubrics.size()) +
                         " rubrics");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < verdicts.size(); ++j) {
    const auto& v = verdicts[j];
    if (!v.rubric_id.empty() && v.rubric_id != rubrics[j].id) {
      throw AlignmentError("verdict for '" + v.rubric_id + "' sits at rubric '" + rubrics[j].id + "'");
    }
    if (v.scored && v.satisfied) total += rubrics[j].weight;
  }
  return total;
}

double normalize_reward(double raw, const RubricSet& rubrics, Normalization mode) {
  const double achieved = mode == Normalization::kFloored ? std::max(0.0, raw) : raw;
  return achieved / rubrics.total_positive_weight();
}

ScoredRollout score_rollout(const std::string& query_id, int rollout_idx, const std::string& response,
                            const RubricSet& rubrics, const VerdictFn& verdict_of, Normalization mode) {
  if (response.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw PreconditionError("cannot score an empty response");
  }
  ScoredRollout out{query_id, rollout_idx, response, {}, {}, 0.0, 0.0};
  std::size_t unscored = 0;
  for (const auto& r : rubrics.rubrics()) {
    out.verdicts.push_back(verdict_of(r));
    out.weights.push_back(r.weight);
    if (!out.verdicts.back().scored) ++unscored;
  }
  if (2 * unscored >= rubrics.size()) {
    throw RolloutScoringError("query '" + query_id + "' rollout " + std::to_string(rollout_idx) + ": " +
                              std::to_string(unscored) + " of " + std::to_string(rubrics.size()) +
                              " judgments unscored");
  }
  out.reward_raw = raw_reward(out.verdicts, rubrics);
  out.reward_norm = normalize_reward(out.reward_raw, rubrics, mode);
  return out;
}

ScoredRollout score_rollout(const std::string& query_id, int rollout_idx, const std::string& response,
                            const RubricSet& rubrics, Gateway& gateway, double tau_s, Normalization mode) {
  std::vector<JudgeVerdict> verdicts(rubrics.size());
  parallel_for(rubrics.size(), gateway.judge_concurrency(), [&](std::size_t j) {
    const auto& r = rubrics[j];
    try {
      verdicts[j] = gateway.judge(response, r.criterion, r.id, tau_s);
    } catch (const JudgeParseError& e) {
      verdicts[j] = unscored_verdict(r.id, e.what());
    }
  });
  std::size_t next = 0;
  return score_rollout(query_id, rollout_idx, response, rubrics, [&](const Rubric&) { return verdicts[next++]; }, mode);
}

ScoredRollout score_rollout(const std::string& query_id, int rollout_idx, const std::string& response,
                            const RubricSet& rubrics, Judge& judge, double tau_s, Normalization mode) {
  return score_rollout(
      query_id, rollout_idx, response, rubrics,
      [&](const Rubric& r) {
        try {
          auto reading = judge.assess(response, r.criterion);
          return make_verdict(r.id, reading.s, tau_s, std::move(reading.raw_reply));
        } catch (const JudgeParseError& e) {
          return unscored_verdict(r.id, e.what());
        }
      },
      mode);
}

BatchMetrics batch_metrics(const std::vector<std::vector<ScoredRollout>>& groups, int k) {
  if (k < 1) throw PreconditionError("K must be positive");
  BatchMetrics out;
  for (const auto& group : groups) {
    const std::string qid = group.empty() ? std::string("?") : group.front().query_id;
    if (static_cast<int>(group.size()) != k) {
      throw AlignmentError("query '" + qid + "' has " + std::to_string(group.size()) + " rollouts, expected " +
                           std::to_string(k));
    }
    const auto& first = group.front();
    Vector<double> norms(k);
    for (int i = 0; i < k; ++i) {
      const auto& r = group[static_cast<std::size_t>(i)];
      if (r.query_id != qid || r.verdicts.size() != first.verdicts.size() || r.weights.size() != r.verdicts.size()) {
        throw AlignmentError("query '" + qid + "' has rollouts over different rubric lists");
      }
      for (std::size_t j = 0; j < r.verdicts.size(); ++j) {
        if (r.verdicts[j].rubric_id != first.verdicts[j].rubric_id) {
          throw AlignmentError("query '" + qid + "' has rollouts over different rubric lists");
        }
      }
      norms[i] = r.reward_norm;
    }
    out.queries.push_back({qid, norms.mean(), norms.maxCoeff()});

    for (std::size_t j = 0; j < first.verdicts.size(); ++j) {
      int satisfied = 0;
      for (const auto& r : group) satisfied += (r.verdicts[j].scored && r.verdicts[j].satisfied) ? 1 : 0;
      const double weight = first.weights[j];
      const bool hit = weight < 0 ? satisfied < k : satisfied > 0;
      out.rubrics.push_back({qid, first.verdicts[j].rubric_id, weight,
                             static_cast<double>(satisfied) / static_cast<double>(k), hit ? 1 : 0});
    }
  }
  return out;
}

std::vector<std::vector<ScoredRollout>> group_by_query(const std::vector<ScoredRollout>& rollouts) {
  std::vector<std::vector<ScoredRollout>> groups;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& r : rollouts) {
    auto [it, fresh] = slot.emplace(r.query_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  return groups;
}

std::vector<int> histogram(const std::vector<double>& values, int bins) {
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    const int b = std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  return counts;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Json to_json(const ScoredRollout& r) {
  Json verdicts = Json::array();
  for (std::size_t j = 0; j < r.verdicts.size(); ++j) {
    const auto& v = r.verdicts[j];
    Json item{{"rubric_id", v.rubric_id}, {"s", v.s}, {"satisfied", v.satisfied}};
    if (!v.scored) item["scored"] = false;
    if (j < r.weights.size()) item["weight"] = r.weights[j];
    verdicts.push_back(std::move(item));
  }
  return Json{{"query_id", r.query_id},   {"rollout_idx", r.rollout_idx}, {"response", r.response},
              {"verdicts", verdicts},     {"reward_raw", r.reward_raw},   {"reward_norm", r.reward_norm}};
}

ScoredRollout scored_rollout_from_json(const Json& j) {
  ScoredRollout r;
  r.query_id = j.at("query_id").get<std::string>();
  r.rollout_idx = j.at("rollout_idx").get<int>();
  r.response = j.at("response").get<std::string>();
  for (const auto& v : j.at("verdicts")) {
    JudgeVerdict verdict;
    verdict.rubric_id = v.at("rubric_id").get<std::string>();
    verdict.s = v.at("s").get<double>();
    verdict.satisfied = v.at("satisfied").get<bool>();
    verdict.scored = v.value("scored", true);
    r.verdicts.push_back(std::move(verdict));
    r.weights.push_back(v.value("weight", 1.0));
  }
  r.reward_raw = j.at("reward_raw").get<double>();
  r.reward_norm = j.at("reward_norm").get<double>();
  return r;
}

Json metrics_report(const BatchMetrics& m, int k) {
  std::vector<double> avg, best, pass, hit;
  Json per_query = Json::array();
  for (const auto& q : m.queries) {
    avg.push_back(q.avg_norm);
    best.push_back(q.max_norm);
    per_query.push_back(Json{{"query_id", q.query_id}, {"avg_norm", q.avg_norm}, {"max_norm", q.max_norm}});
  }
  Json per_rubric = Json::array();
  for (const auto& r : m.rubrics) {
    pass.push_back(r.pass_rate);
    hit.push_back(r.hit);
    per_rubric.push_back(Json{{"query_id", r.query_id}, {"rubric_id", r.rubric_id}, {"weight", r.weight},
                              {"pass_rate", r.pass_rate}, {"hit", r.hit}});
  }
  auto summary = [](const std::vector<double>& v) {
    const double mean = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return Json{{"count", v.size()}, {"mean", mean}, {"median", median(v)}, {"histogram", histogram(v)}};
  };
  return Json{{"k", k},
              {"queries", m.queries.size()},
              {"rubrics", m.rubrics.size()},
              {"avg_norm", summary(avg)},
              {"max_norm", summary(best)},
              {"rubric_pass_rate", summary(pass)},
              {"rubric_hit_rate", summary(hit)},
              {"per_query", std::move(per_query)},
              {"per_rubric", std::move(per_rubric)}};
}

}  // namespace orbit
