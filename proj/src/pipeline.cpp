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

#include "orbit/pipeline.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <fcntl.h>
#include <unistd.h>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "orbit/filter.hpp"
#include "orbit/reward.hpp"
#include "orbit/vecstore.hpp"

namespace orbit {

namespace {

BackendConfig backend_from_json(const Json& j, BackendConfig b) {
  if (j.is_null()) return b;
  b.kind = j.value("kind", b.kind);
  b.base_url = j.value("base_url", b.base_url);
  b.api_key = j.value("api_key", b.api_key);
  b.model_name = j.value("model", b.model_name);
  b.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<std::int64_t>(b.timeout.count())));
  b.max_retries = j.value("max_retries", b.max_retries);
  b.max_concurrency = j.value("max_concurrency", b.max_concurrency);
  b.temperature = j.value("temperature", b.temperature);
  b.top_p = j.value("top_p", b.top_p);
  b.max_tokens = j.value("max_tokens", b.max_tokens);
  b.embed_dim = j.value("embed_dim", b.embed_dim);
  b.response_length = j.value("response_length", b.response_length);
  b.rubrics_per_reply = j.value("rubrics_per_reply", b.rubrics_per_reply);
  if (j.contains("script")) b.script = j.at("script").get<std::vector<std::string>>();
  return b;
}

fs::path resolve(const fs::path& base, const Json& j, const char* key, const fs::path& fallback = {}) {
  if (!j.contains(key)) return fallback.empty() ? fallback : (fallback.is_absolute() ? fallback : base / fallback);
  fs::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

bool is_mock(const BackendConfig& b) { return b.kind == "mock" || b.kind == "scripted"; }

std::string build_timestamp(const PipelineConfig& cfg, const EnvLookup& env) {
  std::time_t t = 0;
  if (auto epoch = env("SOURCE_DATE_EPOCH"); epoch && !epoch->empty()) {
    t = static_cast<std::time_t>(std::stoll(*epoch));
  } else if (!is_mock(cfg.embedder)) {
    t = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path work_file(const PipelineConfig& cfg, const std::string& name) { return cfg.paths.work_dir / name; }

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty() || !fs::exists(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

Json failure_row(const std::string& query_id, const std::exception& e, const std::vector<std::string>& reasons = {}) {
  Json row{{"query_id", query_id}, {"error", e.what()}, {"exit_class", exit_code_for(e)}};
  if (!reasons.empty()) row["reasons"] = reasons;
  return row;
}

}  // namespace

std::uint64_t PipelineConfig::require_seed() const {
  if (!seed) throw ConfigError("a global seed is required");
  return *seed;
}

void PipelineConfig::validate() const {
  for (const auto* b : {&embedder, &generator, &policy, &judge, &reranker}) b->validate();
  filter.validate();
  train.validate();
  if (eval_k < 1) throw ConfigError("eval.k must be positive");
  if (embed_batch_size < 1) throw ConfigError("embed_batch_size must be positive");
  if (!seed && (is_mock(embedder) || is_mock(generator) || is_mock(policy) || is_mock(judge))) {
    throw ConfigError("mock backends need a global seed");
  }
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

Json interpolate_env(const Json& j, const EnvLookup& env) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto open = s.find("${", pos);
      if (open == std::string::npos) {
        out.append(s, pos, std::string::npos);
        break;
      }
      const auto close = s.find('}', open + 2);
      if (close == std::string::npos) throw ConfigError("unterminated ${ in config value '" + s + "'");
      out.append(s, pos, open - pos);
      const std::string name = s.substr(open + 2, close - open - 2);
      auto value = env(name);
      if (!value) throw ConfigError("config references unset environment variable " + name);
      out += *value;
      pos = close + 1;
    }
    return out;
  }
  if (j.is_object() || j.is_array()) {
    Json copy = j;
    for (auto& item : copy) item = interpolate_env(item, env);
    return copy;
  }
  return j;
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("band must look like LOW:HIGH, got '" + text + "'");
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError("band must look like LOW:HIGH, got '" + text + "'");
  }
}

PipelineConfig pipeline_config_from_json(const Json& raw, const fs::path& base_dir, const EnvLookup& env,
                                         const ConfigOverrides& overrides) {
  PipelineConfig cfg;
  try {
    const Json j = interpolate_env(raw, env);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

    const Json paths = j.value("paths", Json::object());
    cfg.paths.dialogues = resolve(base_dir, paths, "dialogues");
    cfg.paths.rubrics = resolve(base_dir, paths, "rubrics");
    cfg.paths.work_dir = resolve(base_dir, paths, "work_dir", "work");
    cfg.paths.db_dir = resolve(base_dir, paths, "db_dir", cfg.paths.work_dir / "db");
    cfg.paths.system_template = resolve(base_dir, paths, "system_template");
    cfg.paths.task_template = resolve(base_dir, paths, "task_template");

    const Json backends = j.value("backends", Json::object());
    BackendConfig policy_default;
    policy_default.temperature = 1.0;
    BackendConfig reranker_default;
    reranker_default.kind = "passthrough";
    cfg.embedder = backend_from_json(backends.value("embedder", Json()), {});
    cfg.generator = backend_from_json(backends.value("generator", Json()), {});
    cfg.policy = backend_from_json(backends.value("policy", Json()), policy_default);
    cfg.judge = backend_from_json(backends.value("judge", Json()), {});
    cfg.reranker = backend_from_json(backends.value("reranker", Json()), reranker_default);

    cfg.filter = filter_config_from_json(j.value("filter", Json::object()));
    cfg.train.grpo = grpo_config_from_json(j.value("grpo", Json::object()));

    const Json rg = j.value("rubricgen", Json::object());
    cfg.rubricgen.t_cases = rg.value("t_cases", cfg.rubricgen.t_cases);
    cfg.rubricgen.t_rubrics = rg.value("t_rubrics", cfg.rubricgen.t_rubrics);
    cfg.rubricgen.m_g = rg.value("m_g", cfg.rubricgen.m_g);
    cfg.rubricgen.tau_lex = rg.value("tau_lex", cfg.rubricgen.tau_lex);
    cfg.rubricgen.tau_sem = rg.value("tau_sem", cfg.rubricgen.tau_sem);
    cfg.rubricgen.alpha = rg.value("alpha", cfg.rubricgen.alpha);
    cfg.rubricgen.max_retries = rg.value("max_retries", cfg.rubricgen.max_retries);

    const Json toy = j.value("toy", Json::object());
    cfg.toy.queries = toy.value("queries", cfg.toy.queries);
    cfg.toy.vocab = toy.value("vocab", cfg.toy.vocab);
    cfg.toy.length = toy.value("length", cfg.toy.length);
    cfg.toy.positives = toy.value("positives", cfg.toy.positives);
    cfg.toy.negatives = toy.value("negatives", cfg.toy.negatives);

    const Json tr = j.value("train", Json::object());
    cfg.train.stages = tr.value("stages", cfg.train.stages);
    cfg.train.steps_per_stage = tr.value("steps_per_stage", cfg.train.steps_per_stage);
    cfg.train.learning_rate = tr.value("learning_rate", cfg.train.learning_rate);
    cfg.train.use_raw_reward = tr.value("use_raw_reward", cfg.train.use_raw_reward);
    if (tr.value("signed_normalization", false)) cfg.train.normalization = Normalization::kSigned;

    cfg.eval_k = j.value("eval", Json::object()).value("k", cfg.eval_k);
    cfg.embed_batch_size = j.value("embed_batch_size", cfg.embed_batch_size);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }

  // Environment beats file.
  auto set = [&](const char* name) -> std::optional<std::string> { return env(name); };
  if (auto base = set("ORBIT_API_BASE"); base && !base->empty()) {
    for (auto* b : {&cfg.embedder, &cfg.generator, &cfg.policy, &cfg.judge, &cfg.reranker}) b->base_url = *base;
  }
  if (auto key = set("ORBIT_API_KEY"); key && !key->empty()) {
    for (auto* b : {&cfg.embedder, &cfg.generator, &cfg.policy, &cfg.judge, &cfg.reranker}) b->api_key = *key;
  }
  for (auto [name, backend] : {std::pair{"ORBIT_EMBED_MODEL", &cfg.embedder}, std::pair{"ORBIT_GEN_MODEL", &cfg.generator},
                               std::pair{"ORBIT_JUDGE_MODEL", &cfg.judge}}) {
    if (auto model = set(name); model && !model->empty()) {
      backend->kind = "openai";
      backend->model_name = *model;
    }
  }
  if (auto model = set("ORBIT_RERANK_MODEL")) {
    cfg.reranker.kind = model->empty() ? "passthrough" : "openai";
    cfg.reranker.model_name = *model;
  }

  // Flags beat environment.
  if (overrides.band) {
    cfg.filter.tau_q_low = overrides.band->first;
    cfg.filter.tau_q_high = overrides.band->second;
  }
  if (overrides.tau_s) cfg.filter.tau_s = *overrides.tau_s;
  if (overrides.tau_r) cfg.filter.tau_r = *overrides.tau_r;
  if (overrides.n_rollout) cfg.filter.n_rollout = *overrides.n_rollout;
  if (overrides.seed) cfg.seed = *overrides.seed;

  if (cfg.seed) {
    const auto seed = *cfg.seed;
    cfg.embedder.seed = derive_seed(seed, std::string_view("embedder"));
    cfg.generator.seed = derive_seed(seed, std::string_view("generator"));
    cfg.policy.seed = derive_seed(seed, std::string_view("policy"));
    cfg.judge.seed = derive_seed(seed, std::string_view("judge"));
    cfg.reranker.seed = derive_seed(seed, std::string_view("reranker"));
    cfg.toy.seed = derive_seed(seed, std::string_view("toy-env"));
    cfg.train.seed = derive_seed(seed, std::string_view("train-toy"));
  }
  cfg.train.tau_s = cfg.filter.tau_s;
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& file, const EnvLookup& env, const ConfigOverrides& overrides) {
  Json raw;
  try {
    raw = Json::parse(read_file(file));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + file.string() + "' is not valid JSON: " + e.what());
  }
  return pipeline_config_from_json(raw, fs::absolute(file).parent_path(), env, overrides);
}

Gateway make_gateway(const PipelineConfig& cfg) {
  GatewayBackends backends{make_embedder(cfg.embedder), make_generator(cfg.generator), make_policy(cfg.policy),
                           make_judge(cfg.judge), make_reranker(cfg.reranker)};
  GatewayLimits limits{cfg.embedder.max_concurrency, cfg.generator.max_concurrency, cfg.judge.max_concurrency,
                       cfg.reranker.max_concurrency, cfg.embed_batch_size};
  // Mock judging is in-process string matching; threads only add overhead.
  if (cfg.judge.kind == "mock") limits.judge_concurrency = 1;
  return Gateway(std::move(backends), limits);
}

WorkDirLock::WorkDirLock(const fs::path& work_dir) : path_(work_dir / ".orbit.lock") {
  fs::create_directories(work_dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const auto pid = std::to_string(::getpid());
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw ConfigError("cannot create lock file '" + path_.string() + "'");
    long holder = 0;
    try {
      holder = std::stol(read_file(path_));
    } catch (const std::exception&) {
    }
    if (holder > 0 && (::kill(static_cast<pid_t>(holder), 0) == 0 || errno == EPERM)) {
      throw ConfigError("work dir '" + work_dir.string() + "' is locked by pid " + std::to_string(holder));
    }
    spdlog::warn("reclaiming stale lock {}", path_.string());
    fs::remove(path_);
  }
  throw ConfigError("cannot acquire lock '" + path_.string() + "'");
}

WorkDirLock::~WorkDirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ---------------------------------------------------------------- build-db

BuildDbSummary cmd_build_db(const PipelineConfig& cfg) {
  require_file(cfg.paths.dialogues, "dialogues file");
  require_file(cfg.paths.rubrics, "rubrics file");
  WorkDirLock lock(cfg.paths.work_dir);

  const auto dialogues = read_dialogues(cfg.paths.dialogues);
  std::unordered_set<std::string> known;
  for (const auto& d : dialogues) known.insert(d.id);

  std::unordered_map<std::string, std::vector<Rubric>> by_case;
  for (const auto& row : read_jsonl(cfg.paths.rubrics)) {
    const std::string where = cfg.paths.rubrics.string() + ":" + std::to_string(row.line);
    Rubric r;
    try {
      r = rubric_from_json(row.value);
    } catch (const Json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!known.count(r.case_id)) {
      throw ReferentialIntegrityError(where + ": rubric '" + r.id + "' references unknown case_id '" + r.case_id + "'");
    }
    by_case[r.case_id].push_back(std::move(r));
  }
  std::vector<RubricSet> sets;
  for (const auto& d : dialogues) {
    auto it = by_case.find(d.id);
    if (it == by_case.end()) throw ReferentialIntegrityError("dialogue '" + d.id + "' has no rubrics");
    sets.emplace_back(d.id, std::move(it->second));
  }

  Gateway gateway = make_gateway(cfg);
  const auto db = build_database(dialogues, sets, gateway.embed_fn(),
                                 DatabaseMeta{gateway.embedder_id(), build_timestamp(cfg, process_env())});
  persist(db, cfg.paths.db_dir);
  spdlog::info("built database with {} cases and {} rubric entries at {}", db.cases().size(),
               db.rubric_entries().size(), cfg.paths.db_dir.string());
  return {db.cases().size(), db.rubric_entries().size()};
}

// ---------------------------------------------------------------- gen

GenSummary cmd_gen(const PipelineConfig& cfg, const fs::path& queries_path) {
  require_file(queries_path, "queries file");
  cfg.rubricgen.validate();
  WorkDirLock lock(cfg.paths.work_dir);
  const auto db = load_database(cfg.paths.db_dir);
  const auto queries = read_dialogues(queries_path);
  const PromptTemplate tmpl = cfg.paths.task_template.empty()
                                  ? PromptTemplate::builtin()
                                  : PromptTemplate::load(cfg.paths.system_template, cfg.paths.task_template);
  Gateway gateway = make_gateway(cfg);

  std::vector<std::optional<RubricSet>> results(queries.size());
  std::vector<Json> failures(queries.size());
  std::vector<int> failure_class(queries.size(), 0);
  parallel_for(queries.size(), cfg.generator.max_concurrency, [&](std::size_t i) {
    try {
      results[i] = generate_rubric_set(queries[i], db, gateway, cfg.rubricgen, tmpl);
    } catch (const GenerationFailedError& e) {
      failures[i] = failure_row(queries[i].id, e, e.reasons());
      failure_class[i] = exit_code_for(e);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInternal) throw;
      failures[i] = failure_row(queries[i].id, e);
      failure_class[i] = exit_code_for(e);
    }
  });

  std::vector<Json> ok_rows, fail_rows;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (results[i]) {
      ok_rows.push_back(to_json(*results[i]));
    } else {
      fail_rows.push_back(failures[i]);
      spdlog::warn("rubric generation failed for {}: {}", queries[i].id, failures[i].at("error").get<std::string>());
    }
  }
  GenSummary summary{ok_rows.size(), fail_rows.size(), work_file(cfg, "rubricsets.jsonl"),
                     work_file(cfg, "failures.jsonl")};
  write_file_atomic(summary.rubricsets, to_jsonl(ok_rows));
  write_file_atomic(summary.failures, to_jsonl(fail_rows));
  if (!queries.empty() && ok_rows.empty()) {
    const int cls = *std::max_element(failure_class.begin(), failure_class.end());
    const std::string msg = "rubric generation failed for all " + std::to_string(queries.size()) + " queries";
    if (cls == 1) throw ValidationError(msg);
    throw GenerationFailedError(msg, {});
  }
  return summary;
}

// ---------------------------------------------------------------- rollout-score

RolloutSummary cmd_rollout_score(const PipelineConfig& cfg, const fs::path& queries_path, const fs::path& sets_path) {
  require_file(queries_path, "queries file");
  require_file(sets_path, "rubric sets file");
  WorkDirLock lock(cfg.paths.work_dir);
  const auto queries = read_dialogues(queries_path);
  std::unordered_map<std::string, RubricSet> sets;
  for (auto& s : read_rubric_sets(sets_path)) sets.emplace(s.query_id(), std::move(s));
  Gateway gateway = make_gateway(cfg);

  std::vector<Json> scored_rows, matrix_rows, failure_rows;
  RolloutSummary summary;
  for (const auto& q : queries) {
    auto it = sets.find(q.id);
    if (it == sets.end()) continue;
    const RubricSet& set = it->second;
    ++summary.queries;
    try {
      const auto responses = gateway.sample_policy(render_query(q), cfg.filter.n_rollout);
      std::vector<ScoredRollout> rollouts;
      for (std::size_t i = 0; i < responses.size(); ++i) {
        rollouts.push_back(score_rollout(q.id, static_cast<int>(i), responses[i], set, gateway, cfg.filter.tau_s));
      }
      ScoreMatrix m{q.id, {}, Matrix<double>(static_cast<Eigen::Index>(rollouts.size()), static_cast<Eigen::Index>(set.size()))};
      for (const auto& r : set.rubrics()) m.rubric_ids.push_back(r.id);
      for (std::size_t i = 0; i < rollouts.size(); ++i) {
        for (std::size_t j = 0; j < set.size(); ++j) {
          const auto& v = rollouts[i].verdicts[j];
          m.s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v.scored ? v.s : 0.0;
        }
        scored_rows.push_back(to_json(rollouts[i]));
      }
      matrix_rows.push_back(to_json(m));
    } catch (const RolloutScoringError& e) {
      failure_rows.push_back(failure_row(q.id, e));
    } catch (const EmptyCompletionError& e) {
      failure_rows.push_back(failure_row(q.id, e));
    } catch (const NoQueryTurnError& e) {
      failure_rows.push_back(failure_row(q.id, e));
    }
  }
  for (const auto& f : failure_rows) spdlog::warn("rollout scoring skipped {}: {}", f.at("query_id").get<std::string>(), f.at("error").get<std::string>());
  summary.failed = failure_rows.size();
  summary.scored = work_file(cfg, "scored.jsonl");
  summary.scorematrix = work_file(cfg, "scorematrix.jsonl");
  write_file_atomic(summary.scored, to_jsonl(scored_rows));
  write_file_atomic(summary.scorematrix, to_jsonl(matrix_rows));
  write_file_atomic(work_file(cfg, "rollout_failures.jsonl"), to_jsonl(failure_rows));
  return summary;
}

// ---------------------------------------------------------------- filter

FilterSummary cmd_filter(const PipelineConfig& cfg, const fs::path& matrix_path, const fs::path& sets_path,
                         const std::optional<fs::path>& queries_path) {
  require_file(matrix_path, "score matrix file");
  require_file(sets_path, "rubric sets file");
  WorkDirLock lock(cfg.paths.work_dir);
  const auto matrices = read_jsonl_as<ScoreMatrix>(matrix_path, score_matrix_from_json);
  std::unordered_map<std::string, RubricSet> sets;
  for (auto& s : read_rubric_sets(sets_path)) sets.emplace(s.query_id(), std::move(s));

  const auto samples = filter_samples(matrices, cfg.filter);
  const std::unordered_set<std::string> retained(samples.retained.begin(), samples.retained.end());

  FilterSummary summary;
  Json per_query = Json::array();
  std::vector<Json> set_rows;
  std::unordered_set<std::string> usable;
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const auto& m = matrices[i];
    auto it = sets.find(m.query_id);
    const RubricSet* set = it == sets.end() ? nullptr : &it->second;
    const auto rubrics = filter_rubrics(m, cfg.filter, set);
    const bool kept_query = retained.count(m.query_id) > 0;
    Json rubric_rows = Json::array();
    const std::unordered_set<std::string> kept(rubrics.kept.begin(), rubrics.kept.end());
    for (std::size_t c = 0; c < m.rubric_ids.size(); ++c) {
      rubric_rows.push_back(Json{{"rubric_id", m.rubric_ids[c]},
                                 {"pass_rate", rubrics.pass_rates[static_cast<Eigen::Index>(c)]},
                                 {"kept", kept.count(m.rubric_ids[c]) > 0}});
    }
    per_query.push_back(Json{{"query_id", m.query_id},
                             {"mean_score", samples.scores[i]},
                             {"retained", kept_query},
                             {"degenerate", rubrics.degenerate},
                             {"rubrics", std::move(rubric_rows)}});
    if (!kept_query) {
      ++summary.dropped;
      continue;
    }
    if (rubrics.degenerate || !set) {
      ++summary.degenerate;
      continue;
    }
    if (auto filtered = apply_rubric_filter(*set, rubrics)) {
      set_rows.push_back(to_json(*filtered));
      usable.insert(m.query_id);
      ++summary.retained;
    } else {
      ++summary.degenerate;
    }
  }

  std::vector<Json> query_rows;
  if (queries_path) {
    for (const auto& d : read_dialogues(*queries_path)) {
      if (usable.count(d.id)) query_rows.push_back(to_json(d));
    }
  } else {
    for (const auto& m : matrices) {
      if (usable.count(m.query_id)) query_rows.push_back(Json{{"query_id", m.query_id}});
    }
  }

  Json report{{"config", to_json(cfg.filter)},
              {"summary", Json{{"queries", matrices.size()},
                               {"retained", summary.retained},
                               {"dropped", summary.dropped},
                               {"degenerate", summary.degenerate}}},
              {"queries", std::move(per_query)}};
  summary.report = work_file(cfg, "filter_report.json");
  summary.rubricsets = work_file(cfg, "filtered_rubricsets.jsonl");
  summary.queries = work_file(cfg, "filtered_queries.jsonl");
  write_file_atomic(summary.report, report.dump(2) + "\n");
  write_file_atomic(summary.rubricsets, to_jsonl(set_rows));
  write_file_atomic(summary.queries, to_jsonl(query_rows));
  return summary;
}

// ---------------------------------------------------------------- train-toy

TrainSummary cmd_train_toy(const PipelineConfig& cfg, const std::optional<fs::path>& sets_path) {
  const auto seed = cfg.require_seed();
  WorkDirLock lock(cfg.paths.work_dir);
  ToyEnvironment env = [&] {
    if (!sets_path) return ToyEnvironment::synthetic(cfg.toy);
    require_file(*sets_path, "rubric sets file");
    return ToyEnvironment::from_rubric_sets(read_rubric_sets(*sets_path), cfg.toy.vocab, cfg.toy.length);
  }();

  const fs::path dir = cfg.paths.work_dir / "train";
  const fs::path ckpt_dir = dir / "checkpoints";
  const std::uint64_t eval_seed = derive_seed(seed, std::string_view("eval"));
  const ToyPolicy initial = env.initial_policy(cfg.train.grpo.t_init);

  std::vector<Json> metric_rows;
  TrainResult result = train(env, cfg.train, initial, [&](const StepMetrics& m) { metric_rows.push_back(to_json(m)); });

  const auto baseline = evaluate_policy(initial, env, cfg.eval_k, initial.temperature(), cfg.train.tau_s, eval_seed);
  const auto trained = evaluate_policy(result.policy, env, cfg.eval_k, result.policy.temperature(), cfg.train.tau_s, eval_seed);
  auto flatten = [](const std::vector<std::vector<ScoredRollout>>& groups, double& mean) {
    std::vector<Json> rows;
    double sum = 0.0;
    for (const auto& g : groups) {
      for (const auto& r : g) {
        rows.push_back(to_json(r));
        sum += r.reward_norm;
      }
    }
    mean = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
    return rows;
  };

  TrainSummary summary;
  summary.steps = result.log.size();
  summary.metrics = dir / "metrics.jsonl";
  summary.checkpoints = ckpt_dir;
  write_file_atomic(summary.metrics, to_jsonl(metric_rows));
  for (const auto& st : result.stages) {
    write_file_atomic(ckpt_dir / fmt::format("stage_{}.json", st.stage), checkpoint_json(st.best_checkpoint, st.stage).dump() + "\n");
  }
  write_file_atomic(ckpt_dir / "final.json", checkpoint_json(result.policy, cfg.train.stages - 1).dump() + "\n");
  write_file_atomic(dir / "baseline_scored.jsonl", to_jsonl(flatten(baseline, summary.baseline_mean_reward_norm)));
  write_file_atomic(dir / "trained_scored.jsonl", to_jsonl(flatten(trained, summary.final_mean_reward_norm)));
  spdlog::info("trained {} steps: mean reward_norm {:.3f} -> {:.3f}", summary.steps, summary.baseline_mean_reward_norm,
               summary.final_mean_reward_norm);
  return summary;
}

// ---------------------------------------------------------------- eval

fs::path cmd_eval(const PipelineConfig& cfg, const fs::path& scored_path, int k, const std::optional<fs::path>& out) {
  require_file(scored_path, "scored file");
  if (k < 1) throw ConfigError("K must be positive");
  WorkDirLock lock(cfg.paths.work_dir);
  const auto rollouts = read_jsonl_as<ScoredRollout>(scored_path, scored_rollout_from_json);
  const auto metrics = batch_metrics(group_by_query(rollouts), k);
  const fs::path target = out.value_or(work_file(cfg, "report.json"));
  write_file_atomic(target, metrics_report(metrics, k).dump(2) + "\n");
  return target;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kUser: return 1;
      case ErrorKind::kBackend: return 2;
      case ErrorKind::kInternal: return 3;
    }
  }
  if (dynamic_cast<const Json::exception*>(&e)) return 1;
  return 3;
}

}  // namespace orbit
