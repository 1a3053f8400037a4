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

#include "orbit/filter.hpp"

#include <algorithm>
#include <unordered_set>

namespace orbit {

void ScoreMatrix::validate() const {
  if (s.rows() < 1) throw ValidationError("score matrix for '" + query_id + "' has no rollouts");
  if (s.cols() < 1) throw ValidationError("score matrix for '" + query_id + "' has no rubrics");
  if (static_cast<Eigen::Index>(rubric_ids.size()) != s.cols()) {
    throw ValidationError("score matrix for '" + query_id + "' has mismatched rubric ids");
  }
  if (!s.allFinite() || s.minCoeff() < 0.0 || s.maxCoeff() > 1.0) {
    throw ValidationError("score matrix for '" + query_id + "' has entries outside [0, 1]");
  }
}

double mean_score(const ScoreMatrix& m) {
  m.validate();
  return mean_score(m.s);
}

double rubric_pass_rate(std::span<const double> column, double tau_s) {
  return rubric_pass_rate(Eigen::Map<const Vector<double>>(column.data(), static_cast<Eigen::Index>(column.size())),
                          tau_s);
}

SampleFilterResult filter_samples(const std::vector<ScoreMatrix>& matrices, const FilterConfig& cfg) {
  cfg.validate();
  SampleFilterResult out;
  for (const auto& m : matrices) {
    const double s = mean_score(m);
    out.scores.push_back(s);
    if (cfg.tau_q_low <= s && s <= cfg.tau_q_high) {
      out.retained.push_back(m.query_id);
    } else {
      out.dropped.emplace_back(m.query_id, s);
    }
  }
  return out;
}

RubricFilterResult filter_rubrics(const ScoreMatrix& m, const FilterConfig& cfg, const RubricSet* rubrics) {
  cfg.validate();
  m.validate();
  RubricFilterResult out;
  out.pass_rates.resize(m.s.cols());
  for (Eigen::Index c = 0; c < m.s.cols(); ++c) {
    out.pass_rates[c] = rubric_pass_rate(m.s.col(c), cfg.tau_s);
    auto& bucket = out.pass_rates[c] < cfg.tau_r ? out.kept : out.dropped;
    bucket.push_back(m.rubric_ids[static_cast<std::size_t>(c)]);
  }
  if (rubrics) {
    const std::unordered_set<std::string> kept(out.kept.begin(), out.kept.end());
    out.degenerate = std::none_of(rubrics->rubrics().begin(), rubrics->rubrics().end(),
                                  [&](const Rubric& r) { return r.weight > 0 && kept.count(r.id); });
  } else {
    out.degenerate = out.kept.empty();
  }
  return out;
}

std::optional<RubricSet> apply_rubric_filter(const RubricSet& set, const RubricFilterResult& result) {
  if (result.degenerate) return std::nullopt;
  const std::unordered_set<std::string> kept(result.kept.begin(), result.kept.end());
  std::vector<Rubric> rubrics;
  for (const auto& r : set.rubrics()) {
    if (kept.count(r.id)) rubrics.push_back(r);
  }
  if (std::none_of(rubrics.begin(), rubrics.end(), [](const Rubric& r) { return r.weight > 0; })) return std::nullopt;
  return RubricSet(set.query_id(), std::move(rubrics));
}

Json to_json(const ScoreMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.s.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.s.cols(); ++c) row.push_back(m.s(i, c));
    rows.push_back(std::move(row));
  }
  return Json{{"query_id", m.query_id}, {"rubric_ids", m.rubric_ids}, {"s", std::move(rows)}};
}

ScoreMatrix score_matrix_from_json(const Json& j) {
  ScoreMatrix m;
  m.query_id = j.at("query_id").get<std::string>();
  m.rubric_ids = j.at("rubric_ids").get<std::vector<std::string>>();
  const auto& rows = j.at("s");
  const auto cols = static_cast<Eigen::Index>(m.rubric_ids.size());
  m.s.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw FormatError("ragged score matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) m.s(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)].get<double>();
  }
  m.validate();
  return m;
}

}  // namespace orbit
