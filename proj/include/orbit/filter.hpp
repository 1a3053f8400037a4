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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "orbit/core.hpp"
#include "orbit/jsonio.hpp"

namespace orbit {

/// Judge satisfaction scores for one query: rows are rollouts, columns are rubrics.
struct ScoreMatrix {
  std::string query_id;
  std::vector<std::string> rubric_ids;
  Matrix<double> s;

  Eigen::Index n() const noexcept { return s.rows(); }
  void validate() const;
};

/// Average satisfaction over every (rollout, rubric) cell.
template <typename Derived>
typename Derived::Scalar mean_score(const Eigen::MatrixBase<Derived>& s) {
  return s.sum() / static_cast<typename Derived::Scalar>(s.size());
}

/// Fraction of entries at or above tau_s.
template <typename Derived>
typename Derived::Scalar rubric_pass_rate(const Eigen::MatrixBase<Derived>& column, typename Derived::Scalar tau_s) {
  using Scalar = typename Derived::Scalar;
  if (column.size() == 0) throw EmptyInputError("pass rate of an empty column");
  return static_cast<Scalar>((column.array() >= tau_s).count()) / static_cast<Scalar>(column.size());
}

double mean_score(const ScoreMatrix& m);
double rubric_pass_rate(std::span<const double> column, double tau_s);

struct SampleFilterResult {
  std::vector<std::string> retained;
  std::vector<std::pair<std::string, double>> dropped;
  /// mean_score per input matrix, in input order.
  std::vector<double> scores;
};

/// Keeps queries with tau_q_low <= mean score <= tau_q_high, in input order.
SampleFilterResult filter_samples(const std::vector<ScoreMatrix>& matrices, const FilterConfig& cfg);

struct RubricFilterResult {
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  Vector<double> pass_rates;
  /// No positive-weight rubric survived; the query must not be trained on.
  bool degenerate = false;
};

/// Keeps rubrics with pass rate strictly below tau_r. With `rubrics` supplied, degeneracy is judged
/// on positive weights; otherwise an empty kept list is degenerate.
RubricFilterResult filter_rubrics(const ScoreMatrix& m, const FilterConfig& cfg, const RubricSet* rubrics = nullptr);

/// The subset of `set` named by `result.kept`, or nothing when degenerate.
std::optional<RubricSet> apply_rubric_filter(const RubricSet& set, const RubricFilterResult& result);

Json to_json(const ScoreMatrix& m);
ScoreMatrix score_matrix_from_json(const Json& j);

}  // namespace orbit
