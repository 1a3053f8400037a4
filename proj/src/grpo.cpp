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

#include "orbit/grpo.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

namespace orbit {

double next_temperature(double t, double gamma, double t_max) {
  if (!(gamma > 1.0)) throw ConfigError("gamma_restart must exceed 1");
  if (!(t > 0.0) || !(t_max > 0.0)) throw ConfigError("temperatures must be positive");
  return std::min(t_max, t * gamma);
}

std::vector<TokenSequence> sample_group(const ToyPolicy& policy, int context, int group_size, double temperature,
                                        std::uint64_t seed) {
  if (group_size < 1) throw PreconditionError("group size must be positive");
  if (!(temperature > 0.0)) throw PreconditionError("temperature must be positive");
  if (context < 0 || context >= policy.contexts()) throw PreconditionError("context out of range");
  RowMatrix<double> probs(policy.length(), policy.vocab());
  for (int pos = 0; pos < policy.length(); ++pos) {
    probs.row(pos) = row_softmax(policy.logits().row(policy.row(context, pos)), temperature);
  }
  std::vector<TokenSequence> out;
  out.reserve(static_cast<std::size_t>(group_size));
  for (int i = 0; i < group_size; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    TokenSequence seq(static_cast<std::size_t>(policy.length()));
    for (int pos = 0; pos < policy.length(); ++pos) {
      seq[static_cast<std::size_t>(pos)] = static_cast<int>(sample_categorical(probs.row(pos), rng));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

RolloutGroup make_group(std::string query_id, int context, std::vector<TokenSequence> sequences,
                        std::vector<ScoredRollout> rollouts, Vector<double> rewards, const GrpoConfig& cfg) {
  if (static_cast<Eigen::Index>(sequences.size()) != rewards.size()) {
    throw AlignmentError("group '" + query_id + "' has " + std::to_string(sequences.size()) + " sequences and " +
                         std::to_string(rewards.size()) + " rewards");
  }
  RolloutGroup g{std::move(query_id), context, std::move(sequences), std::move(rollouts), std::move(rewards), false, {}};
  g.mask = variance_mask(g.rewards, cfg.delta_mask);
  g.advantages = g.mask ? group_advantages(g.rewards, cfg.eps_adv, cfg.sigma_floor)
                        : Vector<double>::Zero(g.rewards.size()).eval();
  return g;
}

GrpoStepResult grpo_step(const ToyPolicy& policy, const ToyPolicy& old, const std::vector<RolloutGroup>& groups,
                         const GrpoConfig& cfg, double learning_rate) {
  StepStats stats;
  stats.valid_groups = static_cast<int>(std::count_if(groups.begin(), groups.end(), [](const RolloutGroup& g) { return g.mask; }));
  if (stats.valid_groups == 0) {
    stats.skipped = true;
    return {policy, stats};
  }
  for (const auto& g : groups) {
    if (!g.mask) continue;
    if (g.context < 0 || g.context >= policy.contexts()) throw PreconditionError("group context out of range");
    for (const auto& seq : g.sequences) {
      if (static_cast<int>(seq.size()) != policy.length()) throw AlignmentError("sequence length mismatch");
      for (int tok : seq) {
        if (tok < 0 || tok >= policy.vocab()) throw AlignmentError("token outside the vocabulary");
      }
    }
  }
  stats.objective = surrogate_objective(policy, old, groups, cfg);
  const RowMatrix<double> grad = surrogate_gradient(policy, old, groups, cfg);
  stats.grad_norm = grad.norm();
  if (!std::isfinite(stats.objective) || !grad.allFinite()) {
    throw NumericalError("non-finite GRPO objective or gradient");
  }
  ToyPolicy next = policy;
  next.logits() += learning_rate * grad;
  if (!next.logits().allFinite()) throw NumericalError("GRPO update produced non-finite logits");
  return {std::move(next), stats};
}

std::vector<std::string> toy_vocabulary(int size) {
  if (size < 1) throw ConfigError("vocabulary size must be positive");
  const auto& base = mock_vocabulary();
  std::vector<std::string> out;
  for (int i = 0; i < size; ++i) {
    out.push_back(static_cast<std::size_t>(i) < base.size() ? base[static_cast<std::size_t>(i)]
                                                            : "w" + std::to_string(1000 + i));
  }
  return out;
}

ToyEnvironment ToyEnvironment::synthetic(const ToyEnvSpec& spec) {
  if (spec.queries < 1 || spec.length < 1) throw ConfigError("toy environment needs queries and a positive length");
  if (spec.positives < 1 || spec.negatives < 0) throw ConfigError("toy environment needs at least one positive rubric");
  if (spec.positives + spec.negatives > spec.vocab) {
    throw ConfigError("toy vocabulary of " + std::to_string(spec.vocab) + " cannot host " +
                      std::to_string(spec.positives + spec.negatives) + " distinct keywords");
  }
  ToyEnvironment env{toy_vocabulary(spec.vocab), spec.length, {}};
  for (int q = 0; q < spec.queries; ++q) {
    const std::string id = "toy-" + std::to_string(q);
    Rng rng(derive_seed(spec.seed, std::string_view(id)));
    std::vector<std::size_t> order(env.vocab.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1))]);
    }
    std::vector<Rubric> rubrics;
    for (int k = 0; k < spec.positives + spec.negatives; ++k) {
      const bool deduct = k >= spec.positives;
      const auto& word = env.vocab[order[static_cast<std::size_t>(k)]];
      rubrics.push_back(Rubric{id + "-r" + std::to_string(k + 1), id,
                               std::string(deduct ? "MUST NOT mention: " : "MUST mention: ") + word,
                               deduct ? -1.0 : 1.0, {}});
    }
    env.queries.push_back({id, q, RubricSet(id, std::move(rubrics))});
  }
  return env;
}

ToyEnvironment ToyEnvironment::from_rubric_sets(const std::vector<RubricSet>& sets, int vocab, int length) {
  if (sets.empty()) throw ConfigError("toy environment needs at least one rubric set");
  if (length < 1) throw ConfigError("toy response length must be positive");
  ToyEnvironment env{toy_vocabulary(vocab), length, {}};
  for (std::size_t i = 0; i < sets.size(); ++i) env.queries.push_back({sets[i].query_id(), static_cast<int>(i), sets[i]});
  return env;
}

std::string ToyEnvironment::render(const TokenSequence& tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.at(static_cast<std::size_t>(tokens[i]));
  }
  return out;
}

ToyPolicy ToyEnvironment::initial_policy(double temperature) const {
  return ToyPolicy(static_cast<int>(vocab.size()), length, static_cast<int>(queries.size()), temperature);
}

void TrainConfig::validate() const {
  grpo.validate();
  if (stages < 1) throw ConfigError("train needs at least one stage");
  if (steps_per_stage < 0) throw ConfigError("steps_per_stage must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(tau_s >= 0.0 && tau_s <= 1.0)) throw ConfigError("tau_s must lie in [0, 1]");
}

namespace {

std::vector<ScoredRollout> score_group(const ToyEnvironment& env, const ToyQuery& q,
                                       const std::vector<TokenSequence>& seqs, Judge& judge, double tau_s,
                                       Normalization mode) {
  std::vector<ScoredRollout> out;
  out.reserve(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    out.push_back(score_rollout(q.id, static_cast<int>(i), env.render(seqs[i]), q.rubrics, judge, tau_s, mode));
  }
  return out;
}

}  // namespace

TrainResult train(const ToyEnvironment& env, const TrainConfig& cfg, const ToyPolicy& initial,
                  const std::function<void(const StepMetrics&)>& on_step) {
  cfg.validate();
  if (env.queries.empty()) throw ConfigError("toy environment has no queries");
  if (initial.vocab() != static_cast<int>(env.vocab.size()) || initial.length() != env.length ||
      initial.contexts() < static_cast<int>(env.queries.size())) {
    throw ConfigError("initial policy does not fit the environment");
  }
  KeywordJudge judge;
  const int group = cfg.grpo.group_size;
  const std::uint64_t train_seed = derive_seed(cfg.seed, std::string_view("train"));

  TrainResult result{initial, {}, {}};
  ToyPolicy& policy = result.policy;
  double temperature = policy.temperature();
  int global_step = 0;
  for (int stage = 0; stage < cfg.stages; ++stage) {
    StageState state{stage, temperature, policy, -std::numeric_limits<double>::infinity()};
    for (int s = 0; s < cfg.steps_per_stage; ++s, ++global_step) {
      const std::uint64_t step_seed = derive_seed(train_seed, static_cast<std::uint64_t>(global_step));
      std::vector<RolloutGroup> groups;
      double reward_sum = 0.0;
      for (const auto& q : env.queries) {
        auto seqs = sample_group(policy, q.context, group, temperature, derive_seed(step_seed, std::string_view(q.id)));
        auto rollouts = score_group(env, q, seqs, judge, cfg.tau_s, cfg.normalization);
        Vector<double> rewards(group);
        for (int i = 0; i < group; ++i) {
          const auto& r = rollouts[static_cast<std::size_t>(i)];
          rewards[i] = cfg.use_raw_reward ? r.reward_raw : r.reward_norm;
          reward_sum += r.reward_norm;
        }
        groups.push_back(make_group(q.id, q.context, std::move(seqs), std::move(rollouts), std::move(rewards), cfg.grpo));
      }
      const double mean_norm = reward_sum / static_cast<double>(group * static_cast<int>(env.queries.size()));
      if (mean_norm > state.best_metric) {
        state.best_checkpoint = policy;
        state.best_metric = mean_norm;
      }
      const double entropy = policy.entropy(temperature);
      GrpoStepResult step{policy, {}};
      try {
        step = grpo_step(policy, policy, groups, cfg.grpo, cfg.learning_rate);
      } catch (const NumericalError& e) {
        spdlog::error("GRPO step {} (stage {}) aborted: {}", global_step, stage, e.what());
        throw NumericalError("step " + std::to_string(global_step) + ": " + e.what());
      }
      policy = std::move(step.policy);

      StepMetrics m{global_step, stage, temperature, step.stats.valid_groups, mean_norm, entropy};
      result.log.push_back(m);
      if (on_step) on_step(m);
    }
    policy = state.best_checkpoint;
    result.stages.push_back(std::move(state));
    if (stage + 1 < cfg.stages) {
      temperature = next_temperature(temperature, cfg.grpo.gamma_restart, cfg.grpo.t_max);
      policy.set_temperature(temperature);
    }
  }
  return result;
}

std::vector<std::vector<ScoredRollout>> evaluate_policy(const ToyPolicy& policy, const ToyEnvironment& env, int k,
                                                        double temperature, double tau_s, std::uint64_t seed) {
  KeywordJudge judge;
  std::vector<std::vector<ScoredRollout>> out;
  for (const auto& q : env.queries) {
    const auto seqs = sample_group(policy, q.context, k, temperature, derive_seed(seed, std::string_view(q.id)));
    out.push_back(score_group(env, q, seqs, judge, tau_s, Normalization::kFloored));
  }
  return out;
}

Json to_json(const StepMetrics& m) {
  return Json{{"step", m.step},
              {"stage", m.stage},
              {"temperature", m.temperature},
              {"valid_groups", m.valid_groups},
              {"mean_reward_norm", m.mean_reward_norm},
              {"policy_entropy", m.policy_entropy}};
}

Json checkpoint_json(const ToyPolicy& policy, int stage) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < policy.logits().rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < policy.logits().cols(); ++c) row.push_back(policy.logits()(r, c));
    rows.push_back(std::move(row));
  }
  return Json{{"vocab", policy.vocab()},     {"length", policy.length()},
              {"contexts", policy.contexts()}, {"stage", stage},
              {"temperature", policy.temperature()}, {"logits", std::move(rows)}};
}

ToyPolicy policy_from_checkpoint(const Json& j) {
  try {
    ToyPolicy p(j.at("vocab").get<int>(), j.at("length").get<int>(), j.value("contexts", 1),
                j.value("temperature", 1.0));
    const auto& rows = j.at("logits");
    if (static_cast<Eigen::Index>(rows.size()) != p.logits().rows()) throw FormatError("checkpoint row count mismatch");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != p.logits().cols()) throw FormatError("checkpoint column mismatch");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        p.logits()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
      }
    }
    if (!p.logits().allFinite()) throw FormatError("checkpoint has non-finite logits");
    return p;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace orbit
