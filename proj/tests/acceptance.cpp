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

// Acceptance suite: one PASS/FAIL line per criterion; exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "orbit/filter.hpp"
#include "orbit/grpo.hpp"
#include "orbit/pipeline.hpp"
#include "orbit/random.hpp"
#include "orbit/reward.hpp"
#include "orbit/rubricgen.hpp"
#include "orbit/vecstore.hpp"

#ifndef ORBIT_SOURCE_DIR
#define ORBIT_SOURCE_DIR "."
#endif

using namespace orbit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector<double> uniform_vector(Rng& rng, int n) {
  Vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform01(rng);
  return v;
}

Vector<double> gaussian_unit(Rng& rng, int dim) {
  std::normal_distribution<double> normal;
  Vector<double> v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v / v.norm();
}

// ---------------------------------------------------------------- 1

Outcome advantage_normalization() {
  const auto t0 = Clock::now();
  Rng rng(101);
  const double eps = 1e-9;
  const double floor = GrpoConfig{}.sigma_floor;
  double worst_mean = 0.0, worst_std = 0.0;
  bool shift_exact = true;
  int groups = 0;
  while (groups < 1000) {
    const Vector<double> r = uniform_vector(rng, 8);
    const double mu = r.mean();
    const double sigma = std::sqrt((r.array() - mu).square().sum() / 8.0);
    if (sigma < floor) continue;
    ++groups;
    const Vector<double> a = group_advantages(r, eps, floor);
    const double am = a.mean();
    const double as = std::sqrt((a.array() - am).square().sum() / 8.0);
    worst_mean = std::max(worst_mean, std::abs(am));
    worst_std = std::max(worst_std, std::abs(as - 1.0));
    // Dyadic shifts keep the centered rewards bit-identical.
    const Vector<double> shifted = (r.array() + 4.0).matrix();
    const Vector<double> back = (shifted.array() - 4.0).matrix();
    if (back == r && group_advantages(shifted, eps, floor) != group_advantages(back, eps, floor)) shift_exact = false;
    if (group_advantages(r, eps, floor) != a) shift_exact = false;
  }
  const Vector<double> base = (Vector<double>(4) << 0.25, 0.5, 0.75, 1.0).finished();
  const Vector<double> up = (base.array() + 2.0).matrix();
  if (group_advantages(base, eps, floor) != group_advantages(up, eps, floor)) shift_exact = false;
  const double secs = seconds_since(t0);
  const bool pass = worst_mean <= 1e-9 && worst_std <= 1e-6 && shift_exact && secs < 1.0;
  return {pass, fmt::format("groups=1000 eps={} max|mean|={:.2e} max|std-1|={:.2e} shift_exact={} runtime={:.3f}s",
                            eps, worst_mean, worst_std, shift_exact, secs)};
}

// ---------------------------------------------------------------- 2

Outcome variance_mask_gate() {
  GrpoConfig cfg;
  Rng rng(202);
  ToyPolicy policy(6, 3, 2);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < policy.logits().size(); ++i) policy.logits().data()[i] = normal(rng);
  bool all_ok = true;
  int checked = 0;
  for (double c : {0.0, 0.3, 1.0, -2.5}) {
    std::vector<RolloutGroup> groups;
    for (int ctx = 0; ctx < 2; ++ctx) {
      auto seqs = sample_group(policy, ctx, cfg.group_size, 1.0, derive_seed(7, static_cast<std::uint64_t>(ctx)));
      Vector<double> rewards = Vector<double>::Constant(cfg.group_size, c);
      groups.push_back(make_group("q" + std::to_string(ctx), ctx, std::move(seqs), {}, rewards, cfg));
    }
    for (const auto& g : groups) all_ok = all_ok && !g.mask && g.advantages.isZero(0.0);
    const ToyPolicy old = policy;
    const auto step = grpo_step(policy, old, groups, cfg, 10.0);
    const bool unchanged = step.policy == policy &&
                           std::memcmp(step.policy.logits().data(), policy.logits().data(),
                                       sizeof(double) * static_cast<std::size_t>(policy.logits().size())) == 0;
    const bool zero_grad = surrogate_gradient(policy, old, groups, cfg).isZero(0.0);
    all_ok = all_ok && unchanged && zero_grad && step.stats.valid_groups == 0;
    ++checked;
  }
  const Vector<double> at_delta = (Vector<double>(3) << 0.0, cfg.delta_mask, 0.0).finished();
  const Vector<double> dyadic = (Vector<double>(2) << 0.25, 0.375).finished();
  const Vector<double> above = (Vector<double>(2) << 0.0, std::nextafter(cfg.delta_mask, 1.0)).finished();
  const bool exact_delta_false = !variance_mask(at_delta, cfg.delta_mask) && !variance_mask(dyadic, 0.125);
  const bool above_true = variance_mask(above, cfg.delta_mask);
  const bool pass = all_ok && exact_delta_false && above_true;
  return {pass, fmt::format("constant_groups={} masked_out_and_bit_unchanged={} spread==delta->false={} "
                            "spread>delta->true={}",
                            checked, all_ok, exact_delta_false, above_true)};
}

// ---------------------------------------------------------------- 3

Outcome temperature_schedule() {
  const std::vector<double> expected{1.0, 1.2, 1.44, 1.5, 1.5, 1.5};
  std::vector<double> got{1.0};
  while (got.size() < expected.size()) got.push_back(next_temperature(got.back(), 1.2, 1.5));
  bool match = true, monotone = true;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    match = match && std::abs(got[i] - expected[i]) <= 1e-12;
    if (i > 0) monotone = monotone && got[i] >= got[i - 1];
  }
  double t = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double next = next_temperature(t, 1.2, 1.5);
    monotone = monotone && next >= t && next <= 1.5;
    t = next;
  }
  std::string seq;
  for (double v : got) seq += fmt::format("{}{:.4g}", seq.empty() ? "" : ",", v);
  return {match && monotone, fmt::format("sequence=[{}] monotone_capped={}", seq, monotone)};
}

// ---------------------------------------------------------------- 4

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(404);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> vocab_dist(2, 8), length_dist(1, 4), ctx_dist(1, 3);
  double worst = 0.0;
  int instances = 0;
  while (instances < 20) {
    const int vocab = vocab_dist(rng), length = length_dist(rng), contexts = ctx_dist(rng);
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.kl_coeff = 0.05 * (instances % 3);
    ToyPolicy old(vocab, length, contexts, 0.7 + 0.6 * uniform01(rng));
    for (Eigen::Index i = 0; i < old.logits().size(); ++i) old.logits().data()[i] = normal(rng);
    ToyPolicy policy = old;
    for (Eigen::Index i = 0; i < policy.logits().size(); ++i) policy.logits().data()[i] += 0.15 * normal(rng);
    std::vector<RolloutGroup> groups;
    for (int ctx = 0; ctx < contexts; ++ctx) {
      auto seqs = sample_group(old, ctx, 4, old.temperature(), rng());
      groups.push_back(make_group("q", ctx, std::move(seqs), {}, uniform_vector(rng, 4), cfg));
    }
    // Finite differences are meaningless at a clip kink; skip instances that sit near one.
    const RowMatrix<double> logp = row_log_softmax(policy.logits(), policy.temperature());
    const RowMatrix<double> logq = row_log_softmax(old.logits(), old.temperature());
    bool near_kink = false;
    for (const auto& g : groups) {
      for (const auto& s : g.sequences) {
        for (int pos = 0; pos < length; ++pos) {
          const auto r = policy.row(g.context, pos);
          const double ratio = std::exp(logp(r, s[pos]) - logq(r, s[pos]));
          near_kink = near_kink || std::abs(ratio - 0.8) < 1e-3 || std::abs(ratio - 1.2) < 1e-3;
        }
      }
    }
    if (near_kink) continue;
    ++instances;
    const RowMatrix<double> analytic = surrogate_gradient(policy, old, groups, cfg);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < policy.logits().size(); ++i) {
      ToyPolicy plus = policy, minus = policy;
      plus.logits().data()[i] += h;
      minus.logits().data()[i] -= h;
      const double fd = (surrogate_objective(plus, old, groups, cfg) - surrogate_objective(minus, old, groups, cfg)) / (2 * h);
      const double a = analytic.data()[i];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 10.0,
          fmt::format("instances=20 h=1e-5 max_rel_err={:.2e} runtime={:.3f}s", worst, secs)};
}

// ---------------------------------------------------------------- 5 and 6

struct ToyRun {
  std::vector<std::vector<ScoredRollout>> baseline;
  std::vector<std::vector<ScoredRollout>> trained;
  int steps = 0;
  double seconds = 0.0;
};

double mean_norm(const std::vector<std::vector<ScoredRollout>>& groups) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (const auto& r : g) {
      sum += r.reward_norm;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

const ToyRun& toy_run() {
  static const ToyRun run = [] {
    ToyRun out;
    const auto t0 = Clock::now();
    const ToyEnvironment env = ToyEnvironment::synthetic(ToyEnvSpec{});
    TrainConfig cfg;
    cfg.stages = 1;
    cfg.steps_per_stage = 1000;
    cfg.seed = 42;
    const ToyPolicy initial = env.initial_policy(cfg.grpo.t_init);
    out.baseline = evaluate_policy(initial, env, 8, initial.temperature(), cfg.tau_s, 4242);
    const auto result = train(env, cfg, initial);
    out.steps = static_cast<int>(result.log.size());
    out.trained = evaluate_policy(result.policy, env, 8, result.policy.temperature(), cfg.tau_s, 4242);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return run;
}

Outcome toy_convergence() {
  const auto& run = toy_run();
  const double before = mean_norm(run.baseline);
  const double after = mean_norm(run.trained);
  const bool pass = before < 0.3 && after >= 0.9 && run.steps <= 1000 && run.seconds < 120.0;
  return {pass, fmt::format("queries=8 V=16 L=6 G=8 steps={} baseline_mean_reward_norm={:.4f} "
                            "trained_mean_reward_norm={:.4f} runtime={:.2f}s",
                            run.steps, before, after, run.seconds)};
}

Outcome distribution_shift() {
  const auto& run = toy_run();
  const auto m0 = batch_metrics(run.baseline, 8);
  const auto m1 = batch_metrics(run.trained, 8);
  auto best = [](const BatchMetrics& m) {
    std::vector<double> v;
    for (const auto& q : m.queries) v.push_back(q.max_norm);
    return median(v);
  };
  auto mass_at_one = [](const BatchMetrics& m) {
    std::vector<double> v;
    for (const auto& r : m.rubrics) v.push_back(static_cast<double>(r.hit));
    const auto h = histogram(v);
    return static_cast<double>(h.back()) / static_cast<double>(v.size());
  };
  const double b0 = best(m0), b1 = best(m1);
  const double h0 = mass_at_one(m0), h1 = mass_at_one(m1);
  return {b1 > b0 && h1 > h0,
          fmt::format("K=8 median_best_of_K {:.4f} -> {:.4f}; hit_rate_mass_at_1.0 {:.4f} -> {:.4f}", b0, b1, h0, h1)};
}

// ---------------------------------------------------------------- 7

Outcome filter_arithmetic() {
  Rng rng(707);
  std::uniform_int_distribution<int> dim(1, 9);
  bool agree = true;
  for (int trial = 0; trial < 100; ++trial) {
    FilterConfig cfg;
    cfg.tau_q_low = std::floor(uniform01(rng) * 4) / 8.0;
    cfg.tau_q_high = cfg.tau_q_low + std::floor(uniform01(rng) * 5) / 8.0;
    cfg.tau_s = std::floor(uniform01(rng) * 5) / 4.0;
    cfg.tau_r = std::floor(uniform01(rng) * 4 + 1) / 4.0;
    std::vector<ScoreMatrix> ms;
    const int nq = dim(rng);
    for (int q = 0; q < nq; ++q) {
      const int n = dim(rng), m = dim(rng);
      ScoreMatrix sm{"q" + std::to_string(q), {}, Matrix<double>(n, m)};
      for (int j = 0; j < m; ++j) sm.rubric_ids.push_back("r" + std::to_string(j));
      // Quarter steps hit the band and threshold boundaries often.
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) sm.s(i, j) = std::floor(uniform01(rng) * 5) / 4.0;
      ms.push_back(sm);
    }
    std::vector<std::string> expected;
    for (const auto& sm : ms) {
      double total = 0.0;
      for (int i = 0; i < sm.s.rows(); ++i)
        for (int j = 0; j < sm.s.cols(); ++j) total += sm.s(i, j);
      const double mean = total / static_cast<double>(sm.s.rows() * sm.s.cols());
      if (cfg.tau_q_low <= mean && mean <= cfg.tau_q_high) expected.push_back(sm.query_id);

      std::vector<std::string> keep;
      for (int j = 0; j < sm.s.cols(); ++j) {
        int passes = 0;
        for (int i = 0; i < sm.s.rows(); ++i) passes += sm.s(i, j) >= cfg.tau_s ? 1 : 0;
        if (static_cast<double>(passes) / static_cast<double>(sm.s.rows()) < cfg.tau_r) keep.push_back(sm.rubric_ids[j]);
      }
      agree = agree && filter_rubrics(sm, cfg).kept == keep;
    }
    agree = agree && filter_samples(ms, cfg).retained == expected;
  }

  FilterConfig cfg;
  auto single = [](double mean) {
    return ScoreMatrix{"q", {"r"}, Matrix<double>::Constant(1, 1, mean)};
  };
  ScoreMatrix at_rate{"q", {"a", "b"}, Matrix<double>(4, 2)};
  at_rate.s << 1, 1, 1, 0, 1, 0, 0, 0;
  const bool inclusive_band = filter_samples({single(0.75)}, cfg).retained.size() == 1;
  const std::vector<double> col{0.5};
  const bool inclusive_tau_s = rubric_pass_rate(std::span<const double>(col), 0.5) == 1.0;
  const auto strict = filter_rubrics(at_rate, cfg);
  const bool strict_tau_r = strict.pass_rates[0] == 0.75 && strict.kept == std::vector<std::string>{"b"};
  const bool pass = agree && inclusive_band && inclusive_tau_s && strict_tau_r;
  return {pass, fmt::format("random_matrices=100 brute_force_agree={} band_inclusive={} tau_s_inclusive={} "
                            "tau_r_strict={}",
                            agree, inclusive_band, inclusive_tau_s, strict_tau_r)};
}

// ---------------------------------------------------------------- 8

Outcome retrieval_exactness() {
  const auto t0 = Clock::now();
  Rng rng(808);
  const int n = 10000, dim = 32;
  std::vector<CaseRecord> cases;
  std::vector<RubricEntry> rubrics;
  cases.reserve(n);
  rubrics.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::string id = fmt::format("c{:05d}", i);
    Rubric r{fmt::format("r{:05d}", i), id, fmt::format("criterion {}", i), 1.0, {}};
    cases.push_back({id, id, "", RubricSet(id, {r}), gaussian_unit(rng, dim), gaussian_unit(rng, dim)});
    rubrics.push_back({r, gaussian_unit(rng, dim)});
  }
  const DiagnosticDatabase db(dim, cases, rubrics, {});
  const double build_secs = seconds_since(t0);
  const auto t1 = Clock::now();
  bool equal = true;
  const int queries = 20;
  for (int q = 0; q < queries; ++q) {
    const EmbeddingVector query = gaussian_unit(rng, dim);
    for (int pool = 0; pool < 2; ++pool) {
      std::vector<std::pair<double, std::string>> scan;
      for (int i = 0; i < n; ++i) {
        const EmbeddingVector& e = pool == 0 ? cases[i].case_embedding : rubrics[i].embedding;
        double dot = 0.0;
        for (int d = 0; d < dim; ++d) dot += query[d] * e[d];
        scan.emplace_back(-(dot / (query.norm() * e.norm())), pool == 0 ? cases[i].case_id : rubrics[i].rubric.id);
      }
      std::sort(scan.begin(), scan.end());
      const auto hits = pool == 0 ? search_cases(db, query, 10) : search_rubrics(db, query, 10);
      std::vector<std::string> got, want;
      for (const auto& h : hits) got.push_back(h.id);
      for (int i = 0; i < 10; ++i) want.push_back(scan[i].second);
      equal = equal && got == want;
    }
  }
  const double secs = seconds_since(t1);
  return {equal && secs < 5.0, fmt::format("vectors={} dim={} queries={} top=10 exact_id_lists={} "
                                           "build={:.3f}s search={:.3f}s",
                                           n, dim, queries * 2, equal, build_secs, secs)};
}

// ---------------------------------------------------------------- 9

Outcome contamination_guard() {
  Rng rng(909);
  const std::vector<std::string> words{"assess", "hydration", "advise", "fever", "urgent", "care", "mention",
                                       "dose",   "child",     "weight", "avoid", "aspirin", "refer", "emergency",
                                       "warn",   "symptoms",  "rest",   "sleep", "ask",     "history"};
  HashEmbedder embedder(64);
  const EmbedFn embed = [&](const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    for (const auto& t : texts) out.push_back(normalized(embedder.embed_one(t)));
    return out;
  };
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<int> len(1, 14);
  auto sentence = [&] {
    std::string s;
    const int k = len(rng);
    for (int i = 0; i < k; ++i) s += (i ? " " : "") + words[pick(rng)];
    return s;
  };
  int escapes = 0, pairings = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Dialogue> dialogues;
    std::vector<RubricSet> sets;
    std::set<std::string> seen;
    std::vector<std::string> seeds;
    for (int c = 0; c < 3; ++c) {
      const std::string id = fmt::format("seed{}", c);
      dialogues.push_back({id, {{Role::kPatient, sentence()}}, "", {}});
      std::vector<Rubric> rs;
      for (int r = 0; r < 4; ++r) {
        std::string crit = sentence();
        if (!seen.insert(crit).second) continue;
        seeds.push_back(crit);
        rs.push_back({fmt::format("{}-r{}", id, r), id, crit, r == 3 ? -1.0 : 1.0 + r, {}});
      }
      if (rs.empty()) rs.push_back({id + "-rx", id, id + " unique criterion", 1.0, {}});
      sets.emplace_back(id, rs);
    }
    const auto db = build_database(dialogues, sets, embed);
    std::vector<Rubric> candidates;
    for (int k = 0; k < 10; ++k) {
      std::uniform_int_distribution<std::size_t> which(0, seeds.size() - 1);
      candidates.push_back({fmt::format("cand{}", k), "", seeds[which(rng)], static_cast<double>(k % 5 + 1), {}});
    }
    const auto result = contamination_filter(candidates, db, 0.6, 0.95, embed, 8);
    pairings += static_cast<int>(candidates.size());
    escapes += static_cast<int>(result.kept.size());
  }
  return {escapes == 0 && pairings >= 1000, fmt::format("pairings={} escapes={}", pairings, escapes)};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::pair<std::string, std::string>> run_pipeline(const fs::path& work) {
  fs::remove_all(work);
  const fs::path sample = fs::path(ORBIT_SOURCE_DIR) / "data" / "sample";
  Json raw = Json::parse(slurp(sample / "config.json"));
  raw["paths"]["work_dir"] = work.string();
  raw["paths"]["db_dir"] = (work / "db").string();
  const EnvLookup no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  ConfigOverrides overrides;
  overrides.seed = 42;
  const PipelineConfig cfg = pipeline_config_from_json(raw, sample, no_env, overrides);
  cmd_build_db(cfg);
  const auto gen = cmd_gen(cfg, sample / "queries.jsonl");
  const auto roll = cmd_rollout_score(cfg, sample / "queries.jsonl", gen.rubricsets);
  const auto filt = cmd_filter(cfg, roll.scorematrix, gen.rubricsets, sample / "queries.jsonl");
  const auto train = cmd_train_toy(cfg);
  std::vector<std::pair<std::string, std::string>> files;
  for (const fs::path& p : {gen.rubricsets, roll.scored, roll.scorematrix, filt.report, filt.rubricsets, train.metrics}) {
    files.emplace_back(fs::relative(p, work).string(), slurp(p));
  }
  std::vector<fs::path> ckpts;
  for (const auto& e : fs::directory_iterator(train.checkpoints)) ckpts.push_back(e.path());
  std::sort(ckpts.begin(), ckpts.end());
  for (const auto& p : ckpts) files.emplace_back(fs::relative(p, work).string(), slurp(p));
  for (const auto& p : {work / "db" / "meta.json", work / "db" / "cases.jsonl"}) {
    files.emplace_back(fs::relative(p, work).string(), slurp(p));
  }
  return files;
}

Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("orbit-acceptance-{}", ::getpid());
  const auto a = run_pipeline(root / "a");
  const auto b = run_pipeline(root / "b");
  bool identical = a.size() == b.size();
  std::size_t bytes = 0;
  std::string differing;
  for (std::size_t i = 0; identical && i < a.size(); ++i) {
    bytes += a[i].second.size();
    if (a[i] != b[i]) {
      identical = false;
      differing = a[i].first;
    }
  }
  bool nonempty = true;
  for (const auto& [name, content] : a) nonempty = nonempty && !content.empty();
  fs::remove_all(root);
  return {identical && nonempty, fmt::format("seed=42 files={} bytes={} byte_identical={}{}", a.size(), bytes, identical,
                                             differing.empty() ? "" : " first_diff=" + differing)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"advantage normalization", advantage_normalization},
      {"variance mask", variance_mask_gate},
      {"temperature schedule", temperature_schedule},
      {"gradient correctness", gradient_check},
      {"toy convergence", toy_convergence},
      {"distribution shift", distribution_shift},
      {"filter arithmetic", filter_arithmetic},
      {"retrieval exactness", retrieval_exactness},
      {"contamination guard", contamination_guard},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %zu: %s | %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures;
}
