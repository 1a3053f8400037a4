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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "orbit/gateway.hpp"
#include "orbit/jsonio.hpp"
#include "orbit/vecstore.hpp"

using namespace orbit;
using orbit::test::dialogue;
using orbit::test::rubric;
using orbit::test::vec;

namespace {

EmbedFn hash_embed(int dim = 64) {
  return [dim](const std::vector<std::string>& texts) {
    HashEmbedder e(dim);
    std::vector<EmbeddingVector> out;
    for (const auto& t : texts) out.push_back(normalized(e.embed_one(t)));
    return out;
  };
}

std::vector<std::string> brute_force(const std::vector<std::pair<std::string, EmbeddingVector>>& pool,
                                     const EmbeddingVector& q, int k) {
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& [id, e] : pool) scored.emplace_back(-q.dot(e) / (q.norm() * e.norm()), id);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> ids;
  for (int i = 0; i < k && i < static_cast<int>(scored.size()); ++i) ids.push_back(scored[i].second);
  return ids;
}

DiagnosticDatabase random_db(Rng& rng, int n_cases, int n_rubrics, int dim) {
  std::vector<CaseRecord> cases;
  std::vector<RubricEntry> entries;
  for (int i = 0; i < n_cases; ++i) {
    const std::string id = "c" + std::to_string(i);
    cases.push_back({id, id, "", RubricSet(id, {rubric(id + "-r", "crit " + id, 1, id)}),
                     orbit::test::random_unit(rng, dim), orbit::test::random_unit(rng, dim)});
  }
  for (int i = 0; i < n_rubrics; ++i) {
    entries.push_back({rubric("r" + std::to_string(i), "criterion " + std::to_string(i), 1, "c0"),
                       orbit::test::random_unit(rng, dim)});
  }
  return DiagnosticDatabase(dim, std::move(cases), std::move(entries), {"test", "t"});
}

}  // namespace

TEST_CASE("cosine") {
  CHECK(cosine(vec({0.6, 0.8}), vec({0.6, 0.8})) == doctest::Approx(1.0));
  CHECK(cosine(vec({1, 0}), vec({0, 1})) == 0.0);
  CHECK(cosine(vec({1, 1}) / std::sqrt(2.0), vec({1, 0})) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK_THROWS_AS(cosine(vec({1, 0}), vec({1, 0, 0})), DimensionError);
  CHECK_THROWS_AS(cosine(vec({0, 0}), vec({1, 0})), DegenerateVectorError);
  const Eigen::Vector2f f(1.0f, 0.0f);
  CHECK(cosine(f, f) == 1.0f);
}

TEST_CASE("aggregate rubric embedding") {
  const std::vector<EmbeddingVector> one{vec({1, 0})};
  CHECK(aggregate_rubric_embedding(one) == vec({1, 0}));
  const std::vector<EmbeddingVector> two{vec({1, 0}), vec({0, 1})};
  const auto agg = aggregate_rubric_embedding(two);
  CHECK(agg[0] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(agg[1] == doctest::Approx(0.70711).epsilon(1e-5));
  const std::vector<EmbeddingVector> cancel{vec({1, 0}), vec({-1, 0})};
  CHECK_THROWS_AS(aggregate_rubric_embedding(cancel), DegenerateVectorError);
  CHECK_THROWS_AS(aggregate_rubric_embedding({}), EmptyInputError);
}

TEST_CASE("build_database counts and deduplicates") {
  const auto d1 = dialogue("d1", {{Role::kPatient, "I have a fever"}});
  const auto d2 = dialogue("d2", {{Role::kPatient, "My cough is bad"}});
  SUBCASE("one dialogue, two rubrics") {
    const auto db = build_database({d1}, {RubricSet("d1", {rubric("a", "x", 1, "d1"), rubric("b", "y", 1, "d1")})},
                                   hash_embed());
    CHECK(db.cases().size() == 1);
    CHECK(db.rubric_entries().size() == 2);
    CHECK(db.cases()[0].rubric_set.size() == 2);
  }
  SUBCASE("shared criterion is stored once") {
    const auto db = build_database(
        {d1, d2},
        {RubricSet("d1", {rubric("a", "advise rest", 1, "d1"), rubric("b", "y", 1, "d1")}),
         RubricSet("d2", {rubric("c", "advise rest", 2, "d2")})},
        hash_embed());
    CHECK(db.cases().size() == 2);
    std::set<std::string> criteria;
    for (const auto& e : db.rubric_entries()) criteria.insert(e.rubric.criterion);
    CHECK(db.rubric_entries().size() == criteria.size());
    CHECK(db.rubric_entries().size() == 2);
    CHECK(db.find_rubric("a") != nullptr);
    CHECK(db.find_rubric("c") == nullptr);
  }
  SUBCASE("rubric sum embedding is the renormalized sum") {
    const auto embed = hash_embed();
    const auto db = build_database({d1}, {RubricSet("d1", {rubric("a", "x y", 1, "d1"), rubric("b", "z w", 1, "d1")})},
                                   embed);
    const auto e = embed({"x y", "z w"});
    const EmbeddingVector expected = (e[0] + e[1]).normalized();
    CHECK((db.cases()[0].rubric_sum_embedding - expected).norm() < 1e-12);
    CHECK(db.cases()[0].case_embedding.norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("unknown dialogue id") {
    CHECK_THROWS_AS(build_database({d1}, {RubricSet("zz", {rubric("a", "x", 1, "zz")})}, hash_embed()),
                    ReferentialIntegrityError);
  }
}

TEST_CASE("search_cases") {
  Rng rng(11);
  SUBCASE("undersized pool") {
    const auto db = random_db(rng, 1, 1, 8);
    const auto hits = search_cases(db, orbit::test::random_unit(rng, 8), 3);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == "c0");
  }
  SUBCASE("identity query ranks first at 1.0") {
    const auto db = random_db(rng, 20, 5, 8);
    const auto hits = search_cases(db, db.cases()[7].case_embedding, 3);
    CHECK(hits[0].id == "c7");
    CHECK(hits[0].score == doctest::Approx(1.0));
  }
  SUBCASE("matches brute force on 1000 vectors") {
    const auto db = random_db(rng, 1000, 1, 16);
    std::vector<std::pair<std::string, EmbeddingVector>> pool;
    for (const auto& c : db.cases()) pool.emplace_back(c.case_id, c.case_embedding);
    for (int q = 0; q < 5; ++q) {
      const auto query = orbit::test::random_unit(rng, 16);
      std::vector<std::string> got;
      for (const auto& h : search_cases(db, query, 10)) got.push_back(h.id);
      CHECK(got == brute_force(pool, query, 10));
    }
  }
  SUBCASE("alpha blends in the rubric sum") {
    const auto db = random_db(rng, 30, 1, 8);
    const auto& target = db.cases()[4].rubric_sum_embedding;
    CHECK(search_cases(db, target, 1, 0.0)[0].id == "c4");
    const auto hit = search_cases(db, target, 1, 0.5)[0];
    const auto* rec = db.find_case(hit.id);
    CHECK(hit.score == doctest::Approx(0.5 * rec->case_embedding.dot(target) + 0.5 * rec->rubric_sum_embedding.dot(target)));
  }
  SUBCASE("ties break on ascending id") {
    const EmbeddingVector e = vec({1, 0});
    std::vector<CaseRecord> cases;
    for (const std::string id : {"b", "a", "c"}) cases.push_back({id, id, "", RubricSet(id, {rubric(id + "r", id, 1, id)}), e, e});
    const DiagnosticDatabase db(2, cases, {}, {});
    std::vector<std::string> ids;
    for (const auto& h : search_cases(db, e, 3)) ids.push_back(h.id);
    CHECK(ids == std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("dimension mismatch") {
    const auto db = random_db(rng, 3, 1, 8);
    CHECK_THROWS_AS(search_cases(db, vec({1, 0}), 1), DimensionError);
  }
}

TEST_CASE("search_rubrics") {
  Rng rng(12);
  const auto db = random_db(rng, 2, 500, 16);
  CHECK(search_rubrics(db, db.rubric_entries()[42].embedding, 5)[0].id == "r42");
  CHECK(search_rubrics(db, db.rubric_entries()[42].embedding, 5)[0].score == doctest::Approx(1.0));
  std::vector<std::pair<std::string, EmbeddingVector>> pool;
  for (const auto& e : db.rubric_entries()) pool.emplace_back(e.rubric.id, e.embedding);
  const auto query = orbit::test::random_unit(rng, 16);
  std::vector<std::string> got;
  for (const auto& h : search_rubrics(db, query, 20)) got.push_back(h.id);
  CHECK(got == brute_force(pool, query, 20));

  const auto empty = random_db(rng, 2, 0, 16);
  CHECK_THROWS_AS(search_rubrics(empty, query, 3), EmptyDatabaseError);
  const DiagnosticDatabase nothing(16, {}, {}, {});
  CHECK_THROWS_AS(search_cases(nothing, query, 3), EmptyDatabaseError);
}

TEST_CASE("database invariants are enforced on construction") {
  Rng rng(13);
  const EmbeddingVector unit = vec({1, 0});
  const RubricSet set("a", {rubric("r", "x", 1, "a")});
  CHECK_THROWS_AS(DiagnosticDatabase(2, {{"a", "a", "", set, vec({2, 0}), unit}}, {}, {}), ValidationError);
  CHECK_THROWS_AS(DiagnosticDatabase(3, {{"a", "a", "", set, unit, unit}}, {}, {}), DimensionError);
  CHECK_THROWS_AS(DiagnosticDatabase(2, {{"a", "a", "", set, unit, unit}, {"a", "a", "", set, unit, unit}}, {}, {}),
                  ValidationError);
}

TEST_CASE("persist and load") {
  orbit::test::TempDir dir("db");
  const auto db = build_database(
      {dialogue("d1", {{Role::kPatient, "fever"}}), dialogue("d2", {{Role::kPatient, "cough"}})},
      {RubricSet("d1", {rubric("a", "MUST mention: rest", 2, "d1")}),
       RubricSet("d2", {rubric("b", "MUST NOT mention: cure", -1, "d2"), rubric("c", "MUST mention: tea", 1, "d2")})},
      hash_embed(), {"mock-hash3-64", "1970-01-01T00:00:00Z"});
  const auto path = dir / "db";
  persist(db, path);
  CHECK(load_database(path) == db);

  SUBCASE("re-persisting is byte-identical") {
    persist(load_database(path), dir / "db2");
    for (const char* f : {"meta.json", "cases.jsonl", "rubric_entries.jsonl"}) {
      CHECK(orbit::test::slurp(path / f) == orbit::test::slurp(dir / "db2" / f));
    }
  }
  SUBCASE("truncated records") {
    auto text = orbit::test::slurp(path / "cases.jsonl");
    orbit::test::spit(path / "cases.jsonl", text.substr(0, text.find('\n') + 1));
    CHECK_THROWS_AS(load_database(path), FormatError);
  }
  SUBCASE("truncated mid-line") {
    auto text = orbit::test::slurp(path / "rubric_entries.jsonl");
    orbit::test::spit(path / "rubric_entries.jsonl", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_database(path), FormatError);
  }
  SUBCASE("wrong magic") {
    auto meta = Json::parse(orbit::test::slurp(path / "meta.json"));
    meta["magic"] = "NOTADB";
    orbit::test::spit(path / "meta.json", meta.dump());
    CHECK_THROWS_AS(load_database(path), FormatError);
  }
  SUBCASE("dim mismatch against header") {
    auto meta = Json::parse(orbit::test::slurp(path / "meta.json"));
    meta["dim"] = 32;
    orbit::test::spit(path / "meta.json", meta.dump());
    CHECK_THROWS_AS(load_database(path), FormatError);
  }
  SUBCASE("corrupt header") {
    orbit::test::spit(path / "meta.json", "{not json");
    CHECK_THROWS_AS(load_database(path), FormatError);
  }
}
