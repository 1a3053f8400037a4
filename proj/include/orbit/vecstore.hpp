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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "orbit/core.hpp"

namespace orbit {

/// Cosine similarity, clamped into [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size()) {
    throw DimensionError("cosine of vectors with dims " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  }
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (!(nu > Scalar(0)) || !(nv > Scalar(0))) throw DegenerateVectorError("cosine of a zero vector");
  return std::clamp<Scalar>(u.dot(v) / (nu * nv), Scalar(-1), Scalar(1));
}

/// Component-wise sum, then L2-normalized.
EmbeddingVector aggregate_rubric_embedding(std::span<const EmbeddingVector> embeddings);

struct CaseRecord {
  std::string case_id;
  std::string dialogue_ref;
  /// Rendered dialogue history; shown to the generator as an in-context example.
  std::string query_text;
  RubricSet rubric_set;
  EmbeddingVector case_embedding;
  EmbeddingVector rubric_sum_embedding;

  bool operator==(const CaseRecord&) const = default;
};

struct RubricEntry {
  Rubric rubric;
  EmbeddingVector embedding;

  bool operator==(const RubricEntry&) const = default;
};

struct DatabaseMeta {
  std::string embedding_backend;
  std::string timestamp;

  bool operator==(const DatabaseMeta&) const = default;
};

struct SearchHit {
  std::string id;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

/// The case–rubric pair pool and the rubric pool. Immutable once constructed.
class DiagnosticDatabase {
 public:
  DiagnosticDatabase(int dim, std::vector<CaseRecord> cases, std::vector<RubricEntry> rubric_entries,
                     DatabaseMeta meta);

  int dim() const noexcept { return dim_; }
  const std::vector<CaseRecord>& cases() const noexcept { return cases_; }
  const std::vector<RubricEntry>& rubric_entries() const noexcept { return rubric_entries_; }
  const DatabaseMeta& meta() const noexcept { return meta_; }

  /// Row i holds the embedding of cases()[i] (resp. rubric_entries()[i]).
  const RowMatrix<double>& case_matrix() const noexcept { return case_matrix_; }
  const RowMatrix<double>& rubric_sum_matrix() const noexcept { return rubric_sum_matrix_; }
  const RowMatrix<double>& rubric_matrix() const noexcept { return rubric_matrix_; }

  const CaseRecord* find_case(const std::string& case_id) const;
  const RubricEntry* find_rubric(const std::string& rubric_id) const;

  bool operator==(const DiagnosticDatabase& other) const {
    return dim_ == other.dim_ && cases_ == other.cases_ && rubric_entries_ == other.rubric_entries_ &&
           meta_ == other.meta_;
  }

 private:
  int dim_;
  std::vector<CaseRecord> cases_;
  std::vector<RubricEntry> rubric_entries_;
  DatabaseMeta meta_;
  RowMatrix<double> case_matrix_;
  RowMatrix<double> rubric_sum_matrix_;
  RowMatrix<double> rubric_matrix_;
  std::unordered_map<std::string, std::size_t> case_index_;
  std::unordered_map<std::string, std::size_t> rubric_index_;
};

using EmbedFn = std::function<std::vector<EmbeddingVector>(const std::vector<std::string>&)>;

/// One case per dialogue, one rubric entry per distinct criterion string (first occurrence wins).
DiagnosticDatabase build_database(const std::vector<Dialogue>& dialogues, const std::vector<RubricSet>& rubric_sets,
                                  const EmbedFn& embed, DatabaseMeta meta = {});

/// Exact top-k over the blended score alpha*cos(q, case) + (1-alpha)*cos(q, rubric_sum).
/// Ties go to the smaller id.
std::vector<SearchHit> search_cases(const DiagnosticDatabase& db, const EmbeddingVector& query, int t_cases,
                                    double alpha = 1.0);
std::vector<SearchHit> search_rubrics(const DiagnosticDatabase& db, const EmbeddingVector& query, int t_rubrics);

/// Writes meta.json, cases.jsonl and rubric_entries.jsonl under `dir`, replacing it atomically.
void persist(const DiagnosticDatabase& db, const std::filesystem::path& dir);
DiagnosticDatabase load_database(const std::filesystem::path& dir);

inline constexpr const char* kDatabaseMagic = "ORBITDB";
inline constexpr int kDatabaseVersion = 1;

}  // namespace orbit
