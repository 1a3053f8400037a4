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

#include <chrono>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbit/core.hpp"
#include "orbit/random.hpp"
#include "orbit/vecstore.hpp"

namespace orbit {

// ---------------------------------------------------------------- configuration

struct BackendConfig {
  /// openai | mock | scripted | passthrough | lexical
  std::string kind = "mock";
  std::string base_url;
  std::string api_key;
  std::string model_name;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  int max_concurrency = 4;
  double temperature = 0.1;
  double top_p = 0.9;
  int max_tokens = 4096;

  // Mock knobs.
  std::uint64_t seed = 0;
  int embed_dim = 64;
  int response_length = 6;
  int rubrics_per_reply = 5;
  std::vector<std::string> script;

  void validate() const;
};

/// Per-call overrides. `variant` distinguishes otherwise identical requests (retries, draws).
struct SamplingParams {
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<int> max_tokens;
  std::string system_prompt;
  std::uint64_t variant = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{250};
  std::chrono::milliseconds max_delay{8000};
  double multiplier = 2.0;
  double jitter = 0.2;
};

/// Jittered exponential delay before retry number `attempt` (0-based).
std::chrono::milliseconds backoff_delay(int attempt, const RetryPolicy& policy, Rng& rng);

// ---------------------------------------------------------------- verdicts

struct JudgeVerdict {
  std::string rubric_id;
  double s = 0.0;
  bool satisfied = false;
  /// False when the judge reply could not be parsed; such verdicts never count as satisfied.
  bool scored = true;
  std::string raw_reply;

  bool operator==(const JudgeVerdict&) const = default;
};

JudgeVerdict make_verdict(std::string rubric_id, double s, double tau_s, std::string raw_reply);
JudgeVerdict unscored_verdict(std::string rubric_id, std::string reason);

/// Parses {"criteria_met": bool, "confidence": optional real}. Confidence is read as belief in the
/// stated verdict, so an unmet criterion scores 1 - confidence. Empty optional on any violation.
std::optional<double> parse_judge_reply(const std::string& reply);

// ---------------------------------------------------------------- backend roles

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
  virtual std::string id() const = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<std::string> complete(const std::string& prompt, int n, const SamplingParams& params) = 0;
};

struct JudgeReading {
  double s = 0.0;
  std::string raw_reply;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeReading assess(const std::string& response, const std::string& criterion) = 0;
};

struct RerankCandidate {
  std::string id;
  std::string text;
};

class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual std::vector<SearchHit> rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) = 0;
};

// ---------------------------------------------------------------- mocks

/// The word list shared by the sampling mock, the rubric mock and the toy policy.
/// No word is a substring of another, so keyword judging is unambiguous.
const std::vector<std::string>& mock_vocabulary();

/// Character 3-gram feature hashing, L2-normalized.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(int dim = 64) : dim_(dim) {}
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override { return "mock-hash3-" + std::to_string(dim_); }
  EmbeddingVector embed_one(const std::string& text) const;

 private:
  int dim_;
};

/// Criteria of the form "MUST mention: x" or "MUST NOT mention: x"; s = 1 iff the response
/// contains x (case-insensitive). For MUST NOT the satisfied criterion is the one that deducts.
class KeywordJudge final : public Judge {
 public:
  JudgeReading assess(const std::string& response, const std::string& criterion) override;
};

struct KeywordCriterion {
  std::string keyword;
  bool prohibited = false;
};
std::optional<KeywordCriterion> parse_keyword_criterion(const std::string& criterion);

/// Emits words drawn position-wise from softmax(logits / T). Pure in (prompt, variant, index, seed).
class SamplingGenerator final : public Generator {
 public:
  SamplingGenerator(std::uint64_t seed, int length, double default_temperature,
                    std::vector<std::string> vocab = mock_vocabulary(), Vector<double> logits = {});
  std::vector<std::string> complete(const std::string& prompt, int n, const SamplingParams& params) override;
  const Vector<double>& logits() const noexcept { return logits_; }

 private:
  std::uint64_t seed_;
  int length_;
  double default_temperature_;
  std::vector<std::string> vocab_;
  Vector<double> logits_;
};

/// Emits a fenced JSON array of keyword rubrics over the mock vocabulary.
class MockRubricGenerator final : public Generator {
 public:
  MockRubricGenerator(std::uint64_t seed, int rubrics_per_reply) : seed_(seed), count_(rubrics_per_reply) {}
  std::vector<std::string> complete(const std::string& prompt, int n, const SamplingParams& params) override;

 private:
  std::uint64_t seed_;
  int count_;
};

/// Returns script[min(variant, size-1)] for every completion.
class ScriptedGenerator final : public Generator {
 public:
  explicit ScriptedGenerator(std::vector<std::string> script) : script_(std::move(script)) {}
  std::vector<std::string> complete(const std::string& prompt, int n, const SamplingParams& params) override;

 private:
  std::vector<std::string> script_;
};

/// Keeps input order; scores are the 1-based input ranks.
class PassThroughReranker final : public Reranker {
 public:
  std::vector<SearchHit> rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) override;
};

/// Orders by Jaccard overlap of character 3-gram sets with the query; stable on ties.
class LexicalReranker final : public Reranker {
 public:
  std::vector<SearchHit> rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) override;
};

// ---------------------------------------------------------------- HTTP

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws BackendError(retryable) when no response arrives.
  virtual HttpResponse post_json(const std::string& path, const std::string& body) = 0;
};

/// cpp-httplib transport rooted at base_url (which may carry a path prefix such as /v1).
std::shared_ptr<HttpTransport> make_http_transport(const BackendConfig& cfg);

/// POSTs JSON and retries transport failures and 5xx replies with jittered backoff.
class RetryingClient {
 public:
  using SleepFn = std::function<void(std::chrono::milliseconds)>;
  RetryingClient(std::shared_ptr<HttpTransport> transport, RetryPolicy policy, std::uint64_t jitter_seed = 0,
                 SleepFn sleep = {});
  nlohmann::ordered_json post(const std::string& path, const nlohmann::ordered_json& body);
  int attempts_made() const noexcept { return attempts_; }

 private:
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy policy_;
  std::mutex rng_mutex_;
  Rng rng_;
  SleepFn sleep_;
  std::atomic<int> attempts_{0};
};

class OpenAIEmbedder final : public Embedder {
 public:
  OpenAIEmbedder(std::shared_ptr<RetryingClient> client, std::string model)
      : client_(std::move(client)), model_(std::move(model)) {}
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  std::string id() const override { return "openai:" + model_; }

 private:
  std::shared_ptr<RetryingClient> client_;
  std::string model_;
};

class OpenAIGenerator final : public Generator {
 public:
  OpenAIGenerator(std::shared_ptr<RetryingClient> client, BackendConfig cfg)
      : client_(std::move(client)), cfg_(std::move(cfg)) {}
  std::vector<std::string> complete(const std::string& prompt, int n, const SamplingParams& params) override;

 private:
  std::shared_ptr<RetryingClient> client_;
  BackendConfig cfg_;
};

/// Chat-completions judge with a strict JSON reply contract.
class OpenAIJudge final : public Judge {
 public:
  OpenAIJudge(std::shared_ptr<RetryingClient> client, BackendConfig cfg)
      : client_(std::move(client)), cfg_(std::move(cfg)) {}
  JudgeReading assess(const std::string& response, const std::string& criterion) override;

 private:
  std::shared_ptr<RetryingClient> client_;
  BackendConfig cfg_;
};

/// POST {base_url}/rerank with {model, query, documents}; reads results[].{index, relevance_score}.
class HttpReranker final : public Reranker {
 public:
  HttpReranker(std::shared_ptr<RetryingClient> client, std::string model)
      : client_(std::move(client)), model_(std::move(model)) {}
  std::vector<SearchHit> rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) override;

 private:
  std::shared_ptr<RetryingClient> client_;
  std::string model_;
};

// ---------------------------------------------------------------- gating and the gateway

/// Counting semaphore that also records the peak number of holders.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int limit);
  void acquire();
  void release();
  int limit() const noexcept { return limit_; }
  int in_flight() const;
  int peak() const;

  template <typename F>
  auto run(F&& f) {
    acquire();
    struct Release {
      ConcurrencyGate* g;
      ~Release() { g->release(); }
    } guard{this};
    return f();
  }

 private:
  int limit_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

/// Runs fn(i) for i in [0, n) on at most `workers` threads; results keep index order.
/// The first exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct GatewayBackends {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<Generator> generator;
  /// Model under training/evaluation; falls back to `generator` when null.
  std::shared_ptr<Generator> policy;
  std::shared_ptr<Judge> judge;
  std::shared_ptr<Reranker> reranker;
};

struct GatewayLimits {
  int embed_concurrency = 4;
  int generate_concurrency = 4;
  int judge_concurrency = 4;
  int rerank_concurrency = 1;
  int embed_batch_size = 64;
};

/// Uniform entry point to the model roles, enforcing each role's concurrency bound.
class Gateway {
 public:
  Gateway(GatewayBackends backends, GatewayLimits limits = {});

  /// Order-preserving, unit-norm, uniform dim.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);
  std::vector<std::string> generate(const std::string& prompt, int n, const SamplingParams& params = {});
  std::vector<std::string> sample_policy(const std::string& prompt, int n, const SamplingParams& params = {});
  JudgeVerdict judge(const std::string& response, const std::string& criterion, const std::string& rubric_id,
                     double tau_s);
  /// Permutation of the candidates with scores. Unknown or repeated ids raise BackendError.
  std::vector<SearchHit> rerank(const std::string& query, const std::vector<RerankCandidate>& candidates);

  EmbedFn embed_fn() {
    return [this](const std::vector<std::string>& t) { return embed(t); };
  }
  const std::string embedder_id() const { return backends_.embedder->id(); }
  const ConcurrencyGate& judge_gate() const noexcept { return judge_gate_; }
  const ConcurrencyGate& embed_gate() const noexcept { return embed_gate_; }
  int judge_concurrency() const noexcept { return limits_.judge_concurrency; }

 private:
  std::vector<std::string> checked_completions(Generator& g, ConcurrencyGate& gate, const std::string& prompt,
                                               int n, const SamplingParams& params);

  GatewayBackends backends_;
  GatewayLimits limits_;
  ConcurrencyGate embed_gate_;
  ConcurrencyGate generate_gate_;
  ConcurrencyGate policy_gate_;
  ConcurrencyGate judge_gate_;
  ConcurrencyGate rerank_gate_;
};

std::shared_ptr<Embedder> make_embedder(const BackendConfig& cfg);
std::shared_ptr<Generator> make_generator(const BackendConfig& cfg);
std::shared_ptr<Generator> make_policy(const BackendConfig& cfg);
std::shared_ptr<Judge> make_judge(const BackendConfig& cfg);
std::shared_ptr<Reranker> make_reranker(const BackendConfig& cfg);

}  // namespace orbit
