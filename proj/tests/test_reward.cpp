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

#include "helpers.hpp"
#include "orbit/gateway.hpp"
#include "orbit/reward.hpp"

using namespace orbit;
using orbit::test::rubric;

namespace {

std::vector<JudgeVerdict> verdicts(const RubricSet& set, std::initializer_list<bool> satisfied) {
  std::vector<JudgeVerdict> out;
  auto it = satisfied.begin();
  for (const auto& r : set.rubrics()) out.push_back(make_verdict(r.id, *it++ ? 1.0 : 0.0, 0.5, ""));
  return out;
}

ScoredRollout rollout(const std::string& q, int idx, const RubricSet& set, std::initializer_list<bool> satisfied) {
  auto v = verdicts(set, satisfied);
  const double raw = raw_reward(v, set);
  const Vector<double> w = set.weights();
  return ScoredRollout{q, idx, "", v, std::vector<double>(w.data(), w.data() + w.size()), raw, normalize_reward(raw, set)};
}

}  // namespace

TEST_CASE("raw and normalized reward") {
  const RubricSet set("q", {rubric("a", "x", 5), rubric("b", "y", 3), rubric("c", "z", -2)});
  CHECK(raw_reward(verdicts(set, {true, false, true}), set) == 3.0);
  CHECK(normalize_reward(3.0, set) == 0.375);
  CHECK(raw_reward(verdicts(set, {false, false, false}), set) == 0.0);
  CHECK(normalize_reward(8.0, set) == 1.0);
  CHECK(normalize_reward(-2.0, set) == 0.0);
  CHECK(normalize_reward(-2.0, set, Normalization::kSigned) == -0.25);
  const RubricSet ones("q", {rubric("a", "x", 1), rubric("b", "y", 1)});
  CHECK(raw_reward(verdicts(ones, {true, true}), ones) == 2.0);
}

TEST_CASE("raw reward checks alignment") {
  const RubricSet set("q", {rubric("a", "x", 1), rubric("b", "y", 1)});
  CHECK_THROWS_AS(raw_reward({make_verdict("a", 1, 0.5, "")}, set), AlignmentError);
  CHECK_THROWS_AS(raw_reward({make_verdict("a", 1, 0.5, ""), make_verdict("z", 1, 0.5, "")}, set), AlignmentError);
}

TEST_CASE("unscored verdicts never count") {
  const RubricSet set("q", {rubric("a", "x", 1), rubric("b", "y", 1)});
  CHECK(raw_reward({unscored_verdict("a", "bad reply"), make_verdict("b", 1, 0.5, "")}, set) == 1.0);
}

TEST_CASE("score_rollout with the keyword judge") {
  KeywordJudge judge;
  const RubricSet rest("q", {rubric("r", "MUST mention: rest", 2)});
  auto a = score_rollout("q", 0, "please rest", rest, judge, 0.5);
  CHECK(a.reward_raw == 2.0);
  CHECK(a.reward_norm == 1.0);
  auto b = score_rollout("q", 0, "take ibuprofen", rest, judge, 0.5);
  CHECK(b.reward_raw == 0.0);
  CHECK(b.reward_norm == 0.0);
  const RubricSet mixed("q", {rubric("r", "MUST mention: rest", 2), rubric("n", "MUST NOT mention: cure", -1)});
  auto c = score_rollout("q", 0, "rest, no cure", mixed, judge, 0.5);
  CHECK(c.reward_raw == 1.0);
  CHECK(c.reward_norm == 0.5);
  CHECK(c.verdicts[1].satisfied);
}

TEST_CASE("score_rollout rejects mostly unscored rollouts") {
  const RubricSet set("q", {rubric("a", "x", 1), rubric("b", "y", 1), rubric("c", "z", 1), rubric("d", "w", 1)});
  int calls = 0;
  auto half_bad = [&](const Rubric& r) {
    return calls++ % 2 == 0 ? unscored_verdict(r.id, "garbled") : make_verdict(r.id, 1.0, 0.5, "{}");
  };
  CHECK_THROWS_AS(score_rollout("q", 0, "resp", set, half_bad), RolloutScoringError);
  calls = 1;
  int n = 0;
  auto one_bad = [&](const Rubric& r) {
    return n++ == 0 ? unscored_verdict(r.id, "garbled") : make_verdict(r.id, 1.0, 0.5, "{}");
  };
  const auto ok = score_rollout("q", 0, "resp", set, one_bad);
  CHECK(ok.reward_raw == 3.0);
}

TEST_CASE("batch metrics") {
  const RubricSet set("q", {rubric("p", "x", 1), rubric("n", "y", -1)});
  SUBCASE("avg and best of K") {
    // Norms 0.2 and 0.8 via a five-point rubric set.
    const RubricSet five("q", {rubric("a", "a", 1), rubric("b", "b", 3), rubric("c", "c", 1)});
    auto r0 = rollout("q", 0, five, {true, false, false});
    auto r1 = rollout("q", 1, five, {true, true, false});
    CHECK(r0.reward_norm == doctest::Approx(0.2));
    CHECK(r1.reward_norm == doctest::Approx(0.8));
    const auto m = batch_metrics({{r0, r1}}, 2);
    CHECK(m.queries[0].avg_norm == doctest::Approx(0.5));
    CHECK(m.queries[0].max_norm == doctest::Approx(0.8));
    CHECK(m.rubrics[0].pass_rate == 1.0);
    CHECK(m.rubrics[1].pass_rate == 0.5);
    CHECK(m.rubrics[2].pass_rate == 0.0);
    CHECK(m.rubrics[2].hit == 0);
  }
  SUBCASE("negative rubric hit means avoided at least once") {
    const auto m = batch_metrics({{rollout("q", 0, set, {true, true}), rollout("q", 1, set, {true, false})}}, 2);
    CHECK(m.rubrics[1].hit == 1);
    const auto always = batch_metrics({{rollout("q", 0, set, {true, true}), rollout("q", 1, set, {true, true})}}, 2);
    CHECK(always.rubrics[1].hit == 0);
  }
  SUBCASE("ragged group names the query") {
    try {
      batch_metrics({{rollout("lonely", 0, set, {true, false})}}, 2);
      FAIL("expected AlignmentError");
    } catch (const AlignmentError& e) {
      CHECK(std::string(e.what()).find("lonely") != std::string::npos);
    }
  }
}

TEST_CASE("grouping, histogram and median") {
  const RubricSet set("q", {rubric("p", "x", 1)});
  const auto groups = group_by_query({rollout("b", 0, set, {true}), rollout("a", 0, set, {true}),
                                      rollout("b", 1, set, {false})});
  REQUIRE(groups.size() == 2);
  CHECK(groups[0][0].query_id == "b");
  CHECK(groups[0][1].rollout_idx == 1);
  CHECK(histogram({0.0, 0.05, 0.1, 0.95, 1.0}) == std::vector<int>{2, 1, 0, 0, 0, 0, 0, 0, 0, 2});
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("metrics report carries the distribution quantities") {
  const RubricSet set("q", {rubric("p", "x", 1), rubric("n", "y", -1)});
  const auto m = batch_metrics({{rollout("q", 0, set, {true, false}), rollout("q", 1, set, {false, false})}}, 2);
  const Json report = metrics_report(m, 2);
  CHECK(report.at("k") == 2);
  CHECK(report.at("avg_norm").at("mean").get<double>() == doctest::Approx(0.5));
  CHECK(report.at("max_norm").at("mean").get<double>() == doctest::Approx(1.0));
  CHECK(report.at("rubric_hit_rate").at("histogram").at(9) == 2);
}
