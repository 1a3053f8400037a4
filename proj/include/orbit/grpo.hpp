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

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "orbit/core.hpp"
#include "orbit/gateway.hpp"
#include "orbit/jsonio.hpp"
#include "orbit/random.hpp"
#include "orbit/reward.hpp"

namespace orbit {

// ---------------------------------------------------------------- group statistics

/// (r_i - mean) / (max(std, sigma_floor) + eps), with the population (divide-by-G) std.
template <typename Derived>
Vector<typename Derived::Scalar> group_advantages(const Eigen::MatrixBase<Derived>& rewards,
                                                  typename Derived::Scalar eps,
                                                  typename Derived::Scalar sigma_floor) {
  using Scalar = typename Derived::Scalar;
  if (rewards.size() < 2) throw GroupSizeError("a group needs at least 2 rewards");
  if (!(eps > Scalar(0))) throw PreconditionError("eps must be positive");
  if (!(sigma_floor >= Scalar(0))) throw PreconditionError("sigma_floor must be non-negative");
  const Scalar mean = rewards.mean();
  const Vector<Scalar> centered = rewards.array() - mean;
  const Scalar sigma = std::max(std::sqrt(centered.squaredNorm() / static_cast<Scalar>(rewards.size())), sigma_floor);
  return centered / (sigma + eps);
}

/// True iff the reward spread strictly exceeds delta.
template <typename Derived>
bool variance_mask(const Eigen::MatrixBase<Derived>& rewards, typename Derived::Scalar delta) {
  if (rewards.size() == 0) throw EmptyInputError("variance mask of an empty group");
  if (!(delta > 0)) throw PreconditionError("delta must be positive");
  return rewards.maxCoeff() - rewards.minCoeff() > delta;
}

/// min(t_max, t * gamma); gamma must exceed 1.
double next_temperature(double t, double gamma, double t_max);

// ---------------------------------------------------------------- toy policy

/// Row-wise softmax of logits / temperature.
template <typename Derived>
RowMatrix<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& logits,
                                                typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  RowMatrix<Scalar> z = logits / temperature;
  z.colwise() -= z.rowwise().maxCoeff();
  z = z.array().exp();
  z.array().colwise() /= z.rowwise().sum().array();
  return z;
}

/// Row-wise log-softmax of logits / temperature.
template <typename Derived>
RowMatrix<typename Derived::Scalar> row_log_softmax(const Eigen::MatrixBase<Derived>& logits,
                                                    typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  RowMatrix<Scalar> z = logits / temperature;
  z.colwise() -= z.rowwise().maxCoeff();
  const Vector<Scalar> lse = z.array().exp().rowwise().sum().log();
  z.colwise() -= lse;
  return z;
}

/// Tabular policy: one logits row per (context, position), `vocab` columns. A context is a query slot.
template <typename Scalar>
class BasicToyPolicy {
 public:
  BasicToyPolicy(int vocab, int length, int contexts = 1, Scalar temperature = Scalar(1))
      : vocab_(vocab), length_(length), contexts_(contexts), temperature_(temperature) {
    if (vocab < 1 || length < 1 || contexts < 1) throw ConfigError("toy policy dimensions must be positive");
    if (!(temperature > Scalar(0))) throw ConfigError("toy policy temperature must be positive");
    logits_ = RowMatrix<Scalar>::Zero(static_cast<Eigen::Index>(length) * contexts, vocab);
  }

  int vocab() const noexcept { return vocab_; }
  int length() const noexcept { return length_; }
  int contexts() const noexcept { return contexts_; }
  Scalar temperature() const noexcept { return temperature_; }
  void set_temperature(Scalar t) {
    if (!(t > Scalar(0))) throw ConfigError("toy policy temperature must be positive");
    temperature_ = t;
  }

  Eigen::Index row(int context, int position) const noexcept {
    return static_cast<Eigen::Index>(context) * length_ + position;
  }
  const RowMatrix<Scalar>& logits() const noexcept { return logits_; }
  RowMatrix<Scalar>& logits() noexcept { return logits_; }

  RowMatrix<Scalar> probabilities() const { return row_softmax(logits_, temperature_); }
  RowMatrix<Scalar> probabilities(Scalar t) const { return row_softmax(logits_, t); }

  /// Mean per-row entropy (nats) at temperature t.
  Scalar entropy(Scalar t) const {
    const RowMatrix<Scalar> logp = row_log_softmax(logits_, t);
    const RowMatrix<Scalar> p = logp.array().exp();
    return -(p.array() * logp.array()).sum() / static_cast<Scalar>(logits_.rows());
  }

  bool operator==(const BasicToyPolicy& o) const {
    return vocab_ == o.vocab_ && length_ == o.length_ && contexts_ == o.contexts_ &&
           temperature_ == o.temperature_ && logits_ == o.logits_;
  }

 private:
  int vocab_;
  int length_;
  int contexts_;
  Scalar temperature_;
  RowMatrix<Scalar> logits_;
};

using ToyPolicy = BasicToyPolicy<double>;
using TokenSequence = std::vector<int>;

/// G sequences drawn position-wise from softmax(logits / T) for one context.
std::vector<TokenSequence> sample_group(const ToyPolicy& policy, int context, int group_size, double temperature,
                                        std::uint64_t seed);

// ---------------------------------------------------------------- GRPO objective

struct RolloutGroup {
  std::string query_id;
  int context = 0;
  std::vector<TokenSequence> sequences;
  std::vector<ScoredRollout> rollouts;
  Vector<double> rewards;
  bool mask = false;
  /// All zero when mask is false.
  Vector<double> advantages;
};

RolloutGroup make_group(std::string query_id, int context, std::vector<TokenSequence> sequences,
                        std::vector<ScoredRollout> rollouts, Vector<double> rewards, const GrpoConfig& cfg);

namespace detail {

template <typename Scalar>
Eigen::Index valid_tokens(const std::vector<RolloutGroup>& groups, int length) {
  Eigen::Index n = 0;
  for (const auto& g : groups) {
    if (g.mask) n += static_cast<Eigen::Index>(g.sequences.size()) * length;
  }
  return n;
}

}  // namespace detail

/// Clipped surrogate averaged over the tokens of masked-in groups, minus kl_coeff times the
/// token-averaged exact KL(pi || pi_old) at the visited rows. Ratios use the policy temperature.
template <typename Scalar>
Scalar surrogate_objective(const BasicToyPolicy<Scalar>& policy, const BasicToyPolicy<Scalar>& old,
                           const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg) {
  const Eigen::Index n = detail::valid_tokens<Scalar>(groups, policy.length());
  if (n == 0) return Scalar(0);
  const Scalar t = policy.temperature();
  const RowMatrix<Scalar> logp = row_log_softmax(policy.logits(), t);
  const RowMatrix<Scalar> logq = row_log_softmax(old.logits(), t);
  const Scalar lo = Scalar(1) - static_cast<Scalar>(cfg.clip_ratio);
  const Scalar hi = Scalar(1) + static_cast<Scalar>(cfg.clip_ratio);
  Scalar total = 0;
  for (const auto& g : groups) {
    if (!g.mask) continue;
    for (std::size_t i = 0; i < g.sequences.size(); ++i) {
      const Scalar a = static_cast<Scalar>(g.advantages[static_cast<Eigen::Index>(i)]);
      for (int pos = 0; pos < policy.length(); ++pos) {
        const auto r = policy.row(g.context, pos);
        const int y = g.sequences[i][static_cast<std::size_t>(pos)];
        const Scalar ratio = std::exp(logp(r, y) - logq(r, y));
        total += std::min(ratio * a, std::clamp(ratio, lo, hi) * a);
        if (cfg.kl_coeff > 0) {
          const Scalar kl = (logp.row(r).array().exp() * (logp.row(r) - logq.row(r)).array()).sum();
          total -= static_cast<Scalar>(cfg.kl_coeff) * kl;
        }
      }
    }
  }
  return total / static_cast<Scalar>(n);
}

/// Analytic gradient of surrogate_objective with respect to the policy logits.
template <typename Scalar>
RowMatrix<Scalar> surrogate_gradient(const BasicToyPolicy<Scalar>& policy, const BasicToyPolicy<Scalar>& old,
                                     const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg) {
  RowMatrix<Scalar> grad = RowMatrix<Scalar>::Zero(policy.logits().rows(), policy.logits().cols());
  const Eigen::Index n = detail::valid_tokens<Scalar>(groups, policy.length());
  if (n == 0) return grad;
  const Scalar t = policy.temperature();
  const RowMatrix<Scalar> logp = row_log_softmax(policy.logits(), t);
  const RowMatrix<Scalar> logq = row_log_softmax(old.logits(), t);
  const RowMatrix<Scalar> p = logp.array().exp();
  const Scalar lo = Scalar(1) - static_cast<Scalar>(cfg.clip_ratio);
  const Scalar hi = Scalar(1) + static_cast<Scalar>(cfg.clip_ratio);
  for (const auto& g : groups) {
    if (!g.mask) continue;
    for (std::size_t i = 0; i < g.sequences.size(); ++i) {
      const Scalar a = static_cast<Scalar>(g.advantages[static_cast<Eigen::Index>(i)]);
      for (int pos = 0; pos < policy.length(); ++pos) {
        const auto r = policy.row(g.context, pos);
        const int y = g.sequences[i][static_cast<std::size_t>(pos)];
        const Scalar ratio = std::exp(logp(r, y) - logq(r, y));
        // The clipped branch is flat; only the unclipped one carries gradient.
        if (ratio * a <= std::clamp(ratio, lo, hi) * a && a != Scalar(0)) {
          // d ratio / d theta_v = ratio * (1[v = y] - p_v) / T
          grad.row(r) -= (a * ratio / t) * p.row(r);
          grad(r, y) += a * ratio / t;
        }
        if (cfg.kl_coeff > 0) {
          const auto diff = (logp.row(r) - logq.row(r)).array();
          const Scalar kl = (p.row(r).array() * diff).sum();
          grad.row(r).array() -= static_cast<Scalar>(cfg.kl_coeff) / t * p.row(r).array() * (diff - kl);
        }
      }
    }
  }
  return grad / static_cast<Scalar>(n);
}

struct StepStats {
  int valid_groups = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool skipped = false;
};

struct GrpoStepResult {
  ToyPolicy policy;
  StepStats stats;
};

/// One gradient-ascent step on the clipped surrogate. With no masked-in group the policy is
/// returned untouched. Non-finite objective or gradient raises NumericalError.
GrpoStepResult grpo_step(const ToyPolicy& policy, const ToyPolicy& old, const std::vector<RolloutGroup>& groups,
                         const GrpoConfig& cfg, double learning_rate);

// ---------------------------------------------------------------- toy environment and training

/// Vocabulary of `size` mutually non-overlapping words, starting with the mock vocabulary.
std::vector<std::string> toy_vocabulary(int size);

struct ToyEnvSpec {
  int queries = 8;
  int vocab = 16;
  int length = 6;
  int positives = 3;
  int negatives = 1;
  std::uint64_t seed = 7;
};

struct ToyQuery {
  std::string id;
  int context = 0;
  RubricSet rubrics;
};

/// Queries are symbolic contexts; rubrics are keyword criteria over the rendered token string.
struct ToyEnvironment {
  std::vector<std::string> vocab;
  int length = 6;
  std::vector<ToyQuery> queries;

  /// Rubric keywords are drawn without replacement per query: positives weigh +1, negatives -1.
  static ToyEnvironment synthetic(const ToyEnvSpec& spec);
  /// One context per rubric set, in order.
  static ToyEnvironment from_rubric_sets(const std::vector<RubricSet>& sets, int vocab, int length);

  std::string render(const TokenSequence& tokens) const;
  ToyPolicy initial_policy(double temperature) const;
};

struct TrainConfig {
  GrpoConfig grpo;
  int stages = 1;
  int steps_per_stage = 400;
  double learning_rate = 10.0;
  double tau_s = 0.5;
  /// Feed reward_raw instead of reward_norm to the advantage computation.
  bool use_raw_reward = false;
  Normalization normalization = Normalization::kFloored;
  std::uint64_t seed = 42;

  void validate() const;
};

struct StepMetrics {
  int step = 0;
  int stage = 0;
  double temperature = 0.0;
  int valid_groups = 0;
  double mean_reward_norm = 0.0;
  double policy_entropy = 0.0;

  bool operator==(const StepMetrics&) const = default;
};

struct StageState {
  int stage = 0;
  double temperature = 0.0;
  ToyPolicy best_checkpoint;
  double best_metric = -std::numeric_limits<double>::infinity();
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<StepMetrics> log;
  std::vector<StageState> stages;
};

/// Staged GRPO. Each stage tracks the best mean reward_norm checkpoint; at a stage boundary the
/// policy restarts from that checkpoint with the temperature raised by next_temperature.
TrainResult train(const ToyEnvironment& env, const TrainConfig& cfg, const ToyPolicy& initial,
                  const std::function<void(const StepMetrics&)>& on_step = {});

/// K rollouts per query at temperature `temperature`, scored with the keyword judge.
std::vector<std::vector<ScoredRollout>> evaluate_policy(const ToyPolicy& policy, const ToyEnvironment& env, int k,
                                                        double temperature, double tau_s, std::uint64_t seed);

Json to_json(const StepMetrics& m);
/// Checkpoint: {"vocab","length","contexts","stage","temperature","logits":[[...]...]}.
Json checkpoint_json(const ToyPolicy& policy, int stage);
ToyPolicy policy_from_checkpoint(const Json& j);

}  // namespace orbit
