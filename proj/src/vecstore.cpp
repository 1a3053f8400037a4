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

#include "orbit/vecstore.hpp"

#include <numeric>
#include <unistd.h>
#include <unordered_set>

#include "orbit/jsonio.hpp"

namespace orbit {

namespace {

RowMatrix<double> stack_rows(const std::vector<const EmbeddingVector*>& rows, int dim) {
  RowMatrix<double> m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
  return m;
}

void check_vector(const EmbeddingVector& v, int dim, const std::string& what) {
  if (v.size() != dim) {
    throw DimensionError(what + " has dim " + std::to_string(v.size()) + ", expected " + std::to_string(dim));
  }
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitNormTolerance) {
    throw ValidationError(what + " is not a finite unit vector");
  }
}

template <typename Id>
std::vector<SearchHit> top_k(const Vector<double>& scores, int k, Id id_of) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return id_of(a) < id_of(b);
                    });
  std::vector<SearchHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) hits.push_back({id_of(order[i]), scores[order[i]]});
  return hits;
}

EmbeddingVector prepared_query(const DiagnosticDatabase& db, const EmbeddingVector& query, int t) {
  if (t < 1) throw PreconditionError("search depth must be at least 1");
  if (query.size() != db.dim()) {
    throw DimensionError("query dim " + std::to_string(query.size()) + " does not match database dim " +
                         std::to_string(db.dim()));
  }
  return normalized(query);
}

Json case_to_json(const CaseRecord& c) {
  return Json{{"case_id", c.case_id},
              {"dialogue_ref", c.dialogue_ref},
              {"query_text", c.query_text},
              {"rubric_set", to_json(c.rubric_set)},
              {"case_embedding", to_json(c.case_embedding)},
              {"rubric_sum_embedding", to_json(c.rubric_sum_embedding)}};
}

CaseRecord case_from_json(const Json& j) {
  return CaseRecord{j.at("case_id").get<std::string>(),
                    j.at("dialogue_ref").get<std::string>(),
                    j.at("query_text").get<std::string>(),
                    rubric_set_from_json(j.at("rubric_set")),
                    embedding_from_json(j.at("case_embedding")),
                    embedding_from_json(j.at("rubric_sum_embedding"))};
}

}  // namespace

EmbeddingVector aggregate_rubric_embedding(std::span<const EmbeddingVector> embeddings) {
  if (embeddings.empty()) throw EmptyInputError("no rubric embeddings to aggregate");
  EmbeddingVector sum = embeddings.front();
  for (std::size_t i = 1; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != sum.size()) throw DimensionError("rubric embeddings disagree on dim");
    sum += embeddings[i];
  }
  return normalized(sum);
}

DiagnosticDatabase::DiagnosticDatabase(int dim, std::vector<CaseRecord> cases,
                                       std::vector<RubricEntry> rubric_entries, DatabaseMeta meta)
    : dim_(dim), cases_(std::move(cases)), rubric_entries_(std::move(rubric_entries)), meta_(std::move(meta)) {
  if (dim_ < 1) throw ValidationError("database dim must be positive");
  std::vector<const EmbeddingVector*> case_rows, sum_rows, rubric_rows;
  for (std::size_t i = 0; i < cases_.size(); ++i) {
    const auto& c = cases_[i];
    if (c.rubric_set.size() == 0) throw ValidationError("case '" + c.case_id + "' has no rubrics");
    check_vector(c.case_embedding, dim_, "case '" + c.case_id + "' embedding");
    check_vector(c.rubric_sum_embedding, dim_, "case '" + c.case_id + "' rubric sum");
    if (!case_index_.emplace(c.case_id, i).second) throw ValidationError("duplicate case id '" + c.case_id + "'");
    case_rows.push_back(&c.case_embedding);
    sum_rows.push_back(&c.rubric_sum_embedding);
  }
  std::unordered_set<std::string> criteria;
  for (std::size_t i = 0; i < rubric_entries_.size(); ++i) {
    const auto& e = rubric_entries_[i];
    check_vector(e.embedding, dim_, "rubric '" + e.rubric.id + "' embedding");
    if (!criteria.insert(e.rubric.criterion).second) {
      throw ValidationError("duplicate rubric criterion '" + e.rubric.criterion + "'");
    }
    if (!rubric_index_.emplace(e.rubric.id, i).second) {
      throw ValidationError("duplicate rubric id '" + e.rubric.id + "'");
    }
    rubric_rows.push_back(&e.embedding);
  }
  case_matrix_ = stack_rows(case_rows, dim_);
  rubric_sum_matrix_ = stack_rows(sum_rows, dim_);
  rubric_matrix_ = stack_rows(rubric_rows, dim_);
}

const CaseRecord* DiagnosticDatabase::find_case(const std::string& case_id) const {
  auto it = case_index_.find(case_id);
  return it == case_index_.end() ? nullptr : &cases_[it->second];
}

const RubricEntry* DiagnosticDatabase::find_rubric(const std::string& rubric_id) const {
  auto it = rubric_index_.find(rubric_id);
  return it == rubric_index_.end() ? nullptr : &rubric_entries_[it->second];
}

DiagnosticDatabase build_database(const std::vector<Dialogue>& dialogues, const std::vector<RubricSet>& rubric_sets,
                                  const EmbedFn& embed, DatabaseMeta meta) {
  validate_dataset(dialogues);
  std::unordered_map<std::string, const RubricSet*> set_of;
  for (const auto& set : rubric_sets) {
    const bool known = std::any_of(dialogues.begin(), dialogues.end(),
                                   [&](const Dialogue& d) { return d.id == set.query_id(); });
    if (!known) throw ReferentialIntegrityError("rubric set references unknown dialogue '" + set.query_id() + "'");
    if (!set_of.emplace(set.query_id(), &set).second) {
      throw ReferentialIntegrityError("dialogue '" + set.query_id() + "' has more than one rubric set");
    }
  }

  // One embedding batch for dialogues, one for every rubric occurrence.
  std::vector<std::string> dialogue_texts;
  std::vector<std::string> rubric_texts;
  for (const auto& d : dialogues) {
    auto it = set_of.find(d.id);
    if (it == set_of.end()) throw ReferentialIntegrityError("dialogue '" + d.id + "' has no rubric set");
    dialogue_texts.push_back(format_turns(d, d.turns.size()));
    for (const auto& r : it->second->rubrics()) rubric_texts.push_back(r.criterion);
  }
  const auto dialogue_vecs = embed(dialogue_texts);
  const auto rubric_vecs = embed(rubric_texts);
  if (dialogue_vecs.size() != dialogue_texts.size() || rubric_vecs.size() != rubric_texts.size()) {
    throw BackendError("embedder returned the wrong number of vectors", false);
  }
  const int dim = dialogue_vecs.empty() ? 0 : static_cast<int>(dialogue_vecs.front().size());
  if (dim < 1) throw EmptyInputError("no dialogues to index");

  std::vector<CaseRecord> cases;
  std::vector<RubricEntry> entries;
  std::unordered_set<std::string> seen_criteria;
  std::size_t k = 0;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    const auto& d = dialogues[i];
    const auto& set = *set_of.at(d.id);
    std::vector<EmbeddingVector> own;
    for (const auto& r : set.rubrics()) {
      auto v = normalized(rubric_vecs[k++]);
      if (v.size() != dim) throw BackendError("embedder dim drift within a batch", false);
      if (seen_criteria.insert(r.criterion).second) entries.push_back({r, v});
      own.push_back(std::move(v));
    }
    if (dialogue_vecs[i].size() != dim) throw BackendError("embedder dim drift within a batch", false);
    cases.push_back(CaseRecord{d.id, d.id, dialogue_texts[i], set, normalized(dialogue_vecs[i]),
                               aggregate_rubric_embedding(own)});
  }
  return DiagnosticDatabase(dim, std::move(cases), std::move(entries), std::move(meta));
}

std::vector<SearchHit> search_cases(const DiagnosticDatabase& db, const EmbeddingVector& query, int t_cases,
                                    double alpha) {
  if (db.cases().empty()) throw EmptyDatabaseError("case pool is empty");
  const auto q = prepared_query(db, query, t_cases);
  Vector<double> scores = (db.case_matrix() * q).cwiseMax(-1.0).cwiseMin(1.0);
  if (alpha != 1.0) {
    scores = alpha * scores + (1.0 - alpha) * (db.rubric_sum_matrix() * q).cwiseMax(-1.0).cwiseMin(1.0);
  }
  return top_k(scores, t_cases, [&](Eigen::Index i) { return db.cases()[static_cast<std::size_t>(i)].case_id; });
}

std::vector<SearchHit> search_rubrics(const DiagnosticDatabase& db, const EmbeddingVector& query, int t_rubrics) {
  if (db.rubric_entries().empty()) throw EmptyDatabaseError("rubric pool is empty");
  const auto q = prepared_query(db, query, t_rubrics);
  const Vector<double> scores = (db.rubric_matrix() * q).cwiseMax(-1.0).cwiseMin(1.0);
  return top_k(scores, t_rubrics,
               [&](Eigen::Index i) { return db.rubric_entries()[static_cast<std::size_t>(i)].rubric.id; });
}

void persist(const DiagnosticDatabase& db, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto pid = std::to_string(::getpid());
  auto staging = dir;
  staging += ".tmp." + pid;
  fs::remove_all(staging);
  fs::create_directories(staging);

  Json meta{{"magic", kDatabaseMagic},
            {"version", kDatabaseVersion},
            {"dim", db.dim()},
            {"counts", Json{{"cases", db.cases().size()}, {"rubric_entries", db.rubric_entries().size()}}},
            {"embedding_backend", db.meta().embedding_backend},
            {"timestamp", db.meta().timestamp}};
  std::vector<Json> case_rows, entry_rows;
  for (const auto& c : db.cases()) case_rows.push_back(case_to_json(c));
  for (const auto& e : db.rubric_entries()) {
    entry_rows.push_back(Json{{"rubric", to_json(e.rubric)}, {"embedding", to_json(e.embedding)}});
  }
  write_file_atomic(staging / "meta.json", meta.dump(2) + "\n");
  write_file_atomic(staging / "cases.jsonl", to_jsonl(case_rows));
  write_file_atomic(staging / "rubric_entries.jsonl", to_jsonl(entry_rows));

  auto retired = dir;
  retired += ".old." + pid;
  const bool existed = fs::exists(dir);
  if (existed) fs::rename(dir, retired);
  fs::rename(staging, dir);
  if (existed) fs::remove_all(retired);
}

DiagnosticDatabase load_database(const std::filesystem::path& dir) {
  Json meta;
  try {
    meta = Json::parse(read_file(dir / "meta.json"));
  } catch (const Json::exception& e) {
    throw FormatError("corrupt database header: " + std::string(e.what()));
  }
  if (!meta.is_object() || meta.value("magic", std::string{}) != kDatabaseMagic) {
    throw FormatError("'" + dir.string() + "' is not an ORBITDB database (bad magic)");
  }
  if (meta.value("version", -1) != kDatabaseVersion) {
    throw FormatError("unsupported database version " + meta.value("version", Json{}).dump());
  }
  try {
    const int dim = meta.at("dim").get<int>();
    const auto n_cases = meta.at("counts").at("cases").get<std::size_t>();
    const auto n_entries = meta.at("counts").at("rubric_entries").get<std::size_t>();

    auto cases = read_jsonl_as<CaseRecord>(dir / "cases.jsonl", case_from_json);
    auto entries = read_jsonl_as<RubricEntry>(dir / "rubric_entries.jsonl", [](const Json& j) {
      return RubricEntry{rubric_from_json(j.at("rubric")), embedding_from_json(j.at("embedding"))};
    });
    if (cases.size() != n_cases || entries.size() != n_entries) {
      throw FormatError("record counts do not match the database header (truncated file?)");
    }
    return DiagnosticDatabase(dim, std::move(cases), std::move(entries),
                              DatabaseMeta{meta.value("embedding_backend", std::string{}),
                                           meta.value("timestamp", std::string{})});
  } catch (const FormatError&) {
    throw;
  } catch (const Json::exception& e) {
    throw FormatError("corrupt database header: " + std::string(e.what()));
  } catch (const Error& e) {
    throw FormatError("inconsistent database: " + std::string(e.what()));
  }
}

}  // namespace orbit
