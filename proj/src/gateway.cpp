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

#include "orbit/gateway.hpp"

#ifdef ORBIT_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

namespace orbit {

using Json = nlohmann::ordered_json;

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool blank(const std::string& s) { return trim(s).empty(); }

std::vector<std::string> char_trigrams(const std::string& text) {
  const std::string padded = " " + lowercase(text) + " ";
  std::vector<std::string> grams;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) grams.push_back(padded.substr(i, 3));
  return grams;
}

Vector<double> softmax(const Vector<double>& logits, double temperature) {
  Vector<double> p(logits.size());
  if (temperature <= 0.0) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    p.setZero();
    p[best] = 1.0;
    return p;
  }
  const Vector<double> z = logits / temperature;
  p = (z.array() - z.maxCoeff()).exp().matrix();
  return p / p.sum();
}

std::uint64_t request_seed(std::uint64_t seed, const std::string& prompt, std::uint64_t variant) {
  return derive_seed(derive_seed(seed, std::string_view(prompt)), variant);
}

}  // namespace

void BackendConfig::validate() const {
  static const std::set<std::string> kinds{"openai", "mock", "scripted", "passthrough", "lexical"};
  if (!kinds.count(kind)) throw ConfigError("unknown backend kind '" + kind + "'");
  if (max_retries < 0 || max_retries > 8) throw ConfigError("max_retries must lie in [0, 8]");
  if (max_concurrency < 1) throw ConfigError("max_concurrency must be at least 1");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
  if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
  if (embed_dim < 1 || response_length < 1 || rubrics_per_reply < 1) throw ConfigError("mock sizes must be positive");
  if (kind == "openai" && (base_url.empty() || model_name.empty())) {
    throw ConfigError("openai backends need base_url and model_name");
  }
}

std::chrono::milliseconds backoff_delay(int attempt, const RetryPolicy& policy, Rng& rng) {
  const double base = static_cast<double>(policy.base_delay.count());
  const double cap = static_cast<double>(policy.max_delay.count());
  double delay = std::min(cap, base * std::pow(policy.multiplier, attempt));
  delay *= 1.0 - policy.jitter + 2.0 * policy.jitter * uniform01(rng);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(std::min(delay, cap))));
}

JudgeVerdict make_verdict(std::string rubric_id, double s, double tau_s, std::string raw_reply) {
  if (!(s >= 0.0 && s <= 1.0)) throw JudgeParseError("satisfaction score outside [0, 1]");
  return JudgeVerdict{std::move(rubric_id), s, s >= tau_s, true, std::move(raw_reply)};
}

JudgeVerdict unscored_verdict(std::string rubric_id, std::string reason) {
  return JudgeVerdict{std::move(rubric_id), 0.0, false, false, std::move(reason)};
}

std::optional<double> parse_judge_reply(const std::string& reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  Json j = Json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto met = j.find("criteria_met");
  if (met == j.end() || !met->is_boolean()) return std::nullopt;
  auto conf = j.find("confidence");
  if (conf != j.end() && !conf->is_null()) {
    if (!conf->is_number()) return std::nullopt;
    const double c = conf->get<double>();
    if (!(c >= 0.0 && c <= 1.0)) return std::nullopt;
    return met->get<bool>() ? c : 1.0 - c;
  }
  return met->get<bool>() ? 1.0 : 0.0;
}

// ---------------------------------------------------------------- mocks

const std::vector<std::string>& mock_vocabulary() {
  static const std::vector<std::string> vocab{"rest",   "fluids", "fever",   "cough", "pain", "sleep",
                                              "doctor", "urgent", "monitor", "dose",  "rash", "tea",
                                              "walk",   "cure",   "miracle", "ice"};
  return vocab;
}

EmbeddingVector HashEmbedder::embed_one(const std::string& text) const {
  if (blank(text)) throw PreconditionError("cannot embed an empty text");
  EmbeddingVector v = EmbeddingVector::Zero(dim_);
  for (const auto& gram : char_trigrams(text)) v[static_cast<Eigen::Index>(fnv1a(gram) % static_cast<std::uint64_t>(dim_))] += 1.0;
  return normalized(v);
}

std::vector<EmbeddingVector> HashEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::optional<KeywordCriterion> parse_keyword_criterion(const std::string& criterion) {
  const std::string text = trim(criterion);
  const std::string lower = lowercase(text);
  for (const auto& [prefix, prohibited] : {std::pair{std::string("must not mention:"), true},
                                           std::pair{std::string("must mention:"), false}}) {
    if (lower.rfind(prefix, 0) == 0) {
      auto keyword = trim(text.substr(prefix.size()));
      if (keyword.empty()) return std::nullopt;
      return KeywordCriterion{std::move(keyword), prohibited};
    }
  }
  return std::nullopt;
}

JudgeReading KeywordJudge::assess(const std::string& response, const std::string& criterion) {
  const auto parsed = parse_keyword_criterion(criterion);
  if (!parsed) throw JudgeParseError("keyword judge cannot read criterion '" + criterion + "'");
  const bool found = lowercase(response).find(lowercase(parsed->keyword)) != std::string::npos;
  return JudgeReading{found ? 1.0 : 0.0, found ? R"({"criteria_met":true})" : R"({"criteria_met":false})"};
}

SamplingGenerator::SamplingGenerator(std::uint64_t seed, int length, double default_temperature,
                                     std::vector<std::string> vocab, Vector<double> logits)
    : seed_(seed), length_(length), default_temperature_(default_temperature), vocab_(std::move(vocab)),
      logits_(std::move(logits)) {
  if (vocab_.empty() || length_ < 1) throw ConfigError("sampling mock needs a vocabulary and a positive length");
  if (logits_.size() == 0) {
    logits_.resize(static_cast<Eigen::Index>(vocab_.size()));
    for (Eigen::Index i = 0; i < logits_.size(); ++i) logits_[i] = -0.25 * static_cast<double>(i);
  }
  if (logits_.size() != static_cast<Eigen::Index>(vocab_.size())) throw ConfigError("logits/vocab size mismatch");
}

std::vector<std::string> SamplingGenerator::complete(const std::string& prompt, int n, const SamplingParams& params) {
  const double temperature = params.temperature.value_or(default_temperature_);
  const Vector<double> probs = softmax(logits_, temperature);
  std::vector<std::string> out;
  for (int k = 0; k < n; ++k) {
    Rng rng(derive_seed(request_seed(seed_, prompt, params.variant), static_cast<std::uint64_t>(k)));
    std::string text;
    for (int t = 0; t < length_; ++t) {
      if (t > 0) text += ' ';
      text += vocab_[static_cast<std::size_t>(sample_categorical(probs, rng))];
    }
    out.push_back(std::move(text));
  }
  return out;
}

std::vector<std::string> MockRubricGenerator::complete(const std::string& prompt, int n, const SamplingParams& params) {
  const auto& vocab = mock_vocabulary();
  std::vector<std::string> out;
  for (int k = 0; k < n; ++k) {
    Rng rng(derive_seed(request_seed(seed_, prompt, params.variant), static_cast<std::uint64_t>(k)));
    std::vector<std::size_t> order(vocab.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1))]);
    }
    const int count = std::min<int>(count_, static_cast<int>(vocab.size()));
    Json items = Json::array();
    for (int i = 0; i < count; ++i) {
      const auto& word = vocab[order[static_cast<std::size_t>(i)]];
      const bool deduct = count > 1 && i == count - 1;
      const int magnitude = 1 + static_cast<int>(uniform01(rng) * (deduct ? 3.0 : 5.0));
      items.push_back(Json{{"criterion", std::string(deduct ? "MUST NOT mention: " : "MUST mention: ") + word},
                           {"points", deduct ? -magnitude : magnitude}});
    }
    out.push_back("Proposed rubrics:\n```json\n" + items.dump() + "\n```\n");
  }
  return out;
}

std::vector<std::string> ScriptedGenerator::complete(const std::string&, int n, const SamplingParams& params) {
  if (script_.empty()) return std::vector<std::string>(static_cast<std::size_t>(n));
  const auto idx = std::min<std::uint64_t>(params.variant, script_.size() - 1);
  return std::vector<std::string>(static_cast<std::size_t>(n), script_[idx]);
}

std::vector<SearchHit> PassThroughReranker::rerank(const std::string&, const std::vector<RerankCandidate>& candidates) {
  std::vector<SearchHit> hits;
  for (std::size_t i = 0; i < candidates.size(); ++i) hits.push_back({candidates[i].id, static_cast<double>(i + 1)});
  return hits;
}

std::vector<SearchHit> LexicalReranker::rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) {
  const auto qg = char_trigrams(query);
  const std::unordered_set<std::string> qset(qg.begin(), qg.end());
  std::vector<SearchHit> hits;
  for (const auto& c : candidates) {
    const auto cg = char_trigrams(c.text);
    const std::unordered_set<std::string> cset(cg.begin(), cg.end());
    std::size_t shared = 0;
    for (const auto& g : cset) shared += qset.count(g);
    const std::size_t uni = qset.size() + cset.size() - shared;
    hits.push_back({c.id, uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni)});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) { return a.score > b.score; });
  return hits;
}

// ---------------------------------------------------------------- HTTP

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(const BackendConfig& cfg) : api_key_(cfg.api_key), timeout_(cfg.timeout) {
    const auto scheme_end = cfg.base_url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: '" + cfg.base_url + "'");
    const auto path_start = cfg.base_url.find('/', scheme_end + 3);
    origin_ = cfg.base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = cfg.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  HttpResponse post_json(const std::string& path, const std::string& body) override {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(prefix_ + path, headers, body, "application/json");
    if (!res) throw BackendError("transport failure on " + path + ": " + httplib::to_string(res.error()), true);
    return HttpResponse{res->status, res->body};
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(const BackendConfig& cfg) {
  return std::make_shared<HttplibTransport>(cfg);
}

RetryingClient::RetryingClient(std::shared_ptr<HttpTransport> transport, RetryPolicy policy,
                               std::uint64_t jitter_seed, SleepFn sleep)
    : transport_(std::move(transport)), policy_(policy), rng_(jitter_seed), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Json RetryingClient::post(const std::string& path, const Json& body) {
  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::chrono::milliseconds delay;
      {
        std::lock_guard lock(rng_mutex_);
        delay = backoff_delay(attempt - 1, policy_, rng_);
      }
      spdlog::warn("retrying {} in {} ms ({})", path, delay.count(), last_error);
      sleep_(delay);
    }
    ++attempts_;
    HttpResponse res;
    try {
      res = transport_->post_json(path, payload);
    } catch (const BackendError& e) {
      if (!e.retryable()) throw;
      last_error = e.what();
      continue;
    }
    if (res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw BackendError("HTTP " + std::to_string(res.status) + " from " + path + ": " + res.body.substr(0, 200), false);
    }
    Json parsed = Json::parse(res.body, nullptr, false);
    if (parsed.is_discarded()) throw BackendError("non-JSON body from " + path, false);
    return parsed;
  }
  throw BackendError(path + " failed after " + std::to_string(policy_.max_retries + 1) + " attempts: " + last_error,
                     true);
}

std::vector<EmbeddingVector> OpenAIEmbedder::embed_batch(const std::vector<std::string>& texts) {
  const Json reply = client_->post("/embeddings", Json{{"model", model_}, {"input", texts}});
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> filled(texts.size(), false);
  try {
    const auto& data = reply.at("data");
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto idx = data[i].value("index", i);
      if (idx >= texts.size() || filled[idx]) throw BackendError("embedding reply has a bad index", false);
      const auto& arr = data[i].at("embedding");
      EmbeddingVector v(static_cast<Eigen::Index>(arr.size()));
      for (std::size_t k = 0; k < arr.size(); ++k) v[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
      out[idx] = std::move(v);
      filled[idx] = true;
    }
  } catch (const Json::exception& e) {
    throw BackendError(std::string("malformed embeddings reply: ") + e.what(), false);
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end()) {
    throw BackendError("embeddings reply is missing vectors", false);
  }
  return out;
}

namespace {

Json chat_body(const BackendConfig& cfg, const std::string& system, const std::string& user, int n,
               const SamplingParams& params) {
  Json messages = Json::array();
  if (!system.empty()) messages.push_back(Json{{"role", "system"}, {"content", system}});
  messages.push_back(Json{{"role", "user"}, {"content", user}});
  return Json{{"model", cfg.model_name},
              {"messages", std::move(messages)},
              {"n", n},
              {"temperature", params.temperature.value_or(cfg.temperature)},
              {"top_p", params.top_p.value_or(cfg.top_p)},
              {"max_tokens", params.max_tokens.value_or(cfg.max_tokens)}};
}

std::vector<std::string> chat_contents(const Json& reply) {
  std::vector<std::string> out;
  try {
    for (const auto& choice : reply.at("choices")) {
      const auto& msg = choice.at("message");
      const bool refused = msg.contains("refusal") && !msg.at("refusal").is_null();
      const auto& content = msg.at("content");
      out.push_back(refused || content.is_null() ? std::string{} : content.get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw BackendError(std::string("malformed chat reply: ") + e.what(), false);
  }
  return out;
}

constexpr const char* kJudgeSystemPrompt =
    "You grade one response against one criterion. Decide whether the response meets the criterion as "
    "written. A criterion describing undesirable behaviour is met when the response exhibits that behaviour. "
    "Reply with a single JSON object and nothing else: "
    "{\"criteria_met\": true or false, \"confidence\": probability in [0, 1] that the criterion is met}.";

constexpr const char* kJudgeReminder =
    "\n\nYour previous reply could not be parsed. Reply with only the JSON object "
    "{\"criteria_met\": true|false, \"confidence\": number}.";

}  // namespace

std::vector<std::string> OpenAIGenerator::complete(const std::string& prompt, int n, const SamplingParams& params) {
  std::vector<std::string> out;
  // Some servers ignore n; keep asking for the remainder.
  for (int round = 0; static_cast<int>(out.size()) < n && round < n; ++round) {
    const int want = n - static_cast<int>(out.size());
    auto got = chat_contents(client_->post("/chat/completions", chat_body(cfg_, params.system_prompt, prompt, want, params)));
    if (got.empty()) throw BackendError("chat reply has no choices", false);
    for (auto& g : got) {
      if (static_cast<int>(out.size()) < n) out.push_back(std::move(g));
    }
  }
  return out;
}

JudgeReading OpenAIJudge::assess(const std::string& response, const std::string& criterion) {
  const std::string base = "Criterion:\n" + criterion + "\n\nResponse:\n" + response;
  std::string user = base;
  const int format_retries = std::min(2, cfg_.max_retries);
  std::string last;
  for (int attempt = 0; attempt <= format_retries; ++attempt) {
    auto contents = chat_contents(client_->post("/chat/completions", chat_body(cfg_, kJudgeSystemPrompt, user, 1, {})));
    last = contents.empty() ? std::string{} : contents.front();
    if (auto s = parse_judge_reply(last)) return JudgeReading{*s, last};
    user = base + kJudgeReminder;
  }
  throw JudgeParseError("judge reply is not the expected JSON object: '" + last.substr(0, 120) + "'");
}

std::vector<SearchHit> HttpReranker::rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) {
  Json docs = Json::array();
  for (const auto& c : candidates) docs.push_back(c.text);
  const Json reply = client_->post("/rerank", Json{{"model", model_}, {"query", query}, {"documents", docs}});
  std::vector<SearchHit> hits;
  try {
    for (const auto& r : reply.at("results")) {
      const auto idx = r.at("index").get<std::size_t>();
      if (idx >= candidates.size()) throw BackendError("reranker returned unknown index " + std::to_string(idx), false);
      hits.push_back({candidates[idx].id, r.at("relevance_score").get<double>()});
    }
  } catch (const Json::exception& e) {
    throw BackendError(std::string("malformed rerank reply: ") + e.what(), false);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) { return a.score > b.score; });
  return hits;
}

// ---------------------------------------------------------------- gating

ConcurrencyGate::ConcurrencyGate(int limit) : limit_(limit) {
  if (limit_ < 1) throw ConfigError("concurrency limit must be at least 1");
}

void ConcurrencyGate::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
}

void ConcurrencyGate::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_one();
}

int ConcurrencyGate::in_flight() const {
  std::lock_guard lock(mutex_);
  return in_flight_;
}

int ConcurrencyGate::peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(GatewayBackends backends, GatewayLimits limits)
    : backends_(std::move(backends)),
      limits_(limits),
      embed_gate_(limits.embed_concurrency),
      generate_gate_(limits.generate_concurrency),
      policy_gate_(limits.generate_concurrency),
      judge_gate_(limits.judge_concurrency),
      rerank_gate_(limits.rerank_concurrency) {
  if (!backends_.reranker) backends_.reranker = std::make_shared<PassThroughReranker>();
  if (!backends_.policy) backends_.policy = backends_.generator;
  if (limits_.embed_batch_size < 1) throw ConfigError("embed batch size must be positive");
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
  if (!backends_.embedder) throw ConfigError("no embedder configured");
  if (texts.empty()) throw PreconditionError("embed needs at least one text");
  for (const auto& t : texts) {
    if (blank(t)) throw PreconditionError("embed received an empty text");
  }
  const std::size_t batch = static_cast<std::size_t>(limits_.embed_batch_size);
  const std::size_t n_batches = (texts.size() + batch - 1) / batch;
  std::vector<EmbeddingVector> out(texts.size());
  parallel_for(n_batches, limits_.embed_concurrency, [&](std::size_t b) {
    const auto first = b * batch;
    const auto last = std::min(texts.size(), first + batch);
    std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(first),
                                   texts.begin() + static_cast<std::ptrdiff_t>(last));
    auto vecs = embed_gate_.run([&] { return backends_.embedder->embed_batch(chunk); });
    if (vecs.size() != chunk.size()) throw BackendError("embedder returned the wrong number of vectors", false);
    for (std::size_t i = 0; i < vecs.size(); ++i) out[first + i] = std::move(vecs[i]);
  });
  const auto dim = out.front().size();
  for (auto& v : out) {
    if (v.size() != dim || dim == 0) throw BackendError("embedding dim drift within a batch", false);
    try {
      v = normalized(v);
    } catch (const DegenerateVectorError& e) {
      throw BackendError(std::string("embedder returned a degenerate vector: ") + e.what(), false);
    }
  }
  return out;
}

std::vector<std::string> Gateway::checked_completions(Generator& g, ConcurrencyGate& gate, const std::string& prompt,
                                                      int n, const SamplingParams& params) {
  if (n < 1) throw PreconditionError("generate needs n >= 1");
  if (blank(prompt)) throw PreconditionError("generate needs a non-empty prompt");
  auto out = gate.run([&] { return g.complete(prompt, n, params); });
  if (static_cast<int>(out.size()) != n) throw BackendError("generator returned the wrong number of completions", false);
  for (const auto& s : out) {
    if (blank(s)) throw EmptyCompletionError("generator returned an empty completion");
  }
  return out;
}

std::vector<std::string> Gateway::generate(const std::string& prompt, int n, const SamplingParams& params) {
  if (!backends_.generator) throw ConfigError("no generator configured");
  return checked_completions(*backends_.generator, generate_gate_, prompt, n, params);
}

std::vector<std::string> Gateway::sample_policy(const std::string& prompt, int n, const SamplingParams& params) {
  if (!backends_.policy) throw ConfigError("no policy model configured");
  return checked_completions(*backends_.policy, policy_gate_, prompt, n, params);
}

JudgeVerdict Gateway::judge(const std::string& response, const std::string& criterion, const std::string& rubric_id,
                            double tau_s) {
  if (!backends_.judge) throw ConfigError("no judge configured");
  if (blank(response) || blank(criterion)) throw PreconditionError("judge needs a response and a criterion");
  auto reading = judge_gate_.run([&] { return backends_.judge->assess(response, criterion); });
  return make_verdict(rubric_id, reading.s, tau_s, std::move(reading.raw_reply));
}

std::vector<SearchHit> Gateway::rerank(const std::string& query, const std::vector<RerankCandidate>& candidates) {
  if (candidates.empty()) throw PreconditionError("rerank needs at least one candidate");
  auto hits = rerank_gate_.run([&] { return backends_.reranker->rerank(query, candidates); });
  std::unordered_set<std::string> expected;
  for (const auto& c : candidates) expected.insert(c.id);
  std::unordered_set<std::string> seen;
  for (const auto& h : hits) {
    if (!expected.count(h.id) || !seen.insert(h.id).second) {
      throw BackendError("reranker returned unknown or repeated id '" + h.id + "'", false);
    }
  }
  if (seen.size() != expected.size()) throw BackendError("reranker dropped candidates", false);
  return hits;
}

// ---------------------------------------------------------------- factories

namespace {

std::shared_ptr<RetryingClient> client_for(const BackendConfig& cfg) {
  RetryPolicy policy;
  policy.max_retries = cfg.max_retries;
  return std::make_shared<RetryingClient>(make_http_transport(cfg), policy, cfg.seed);
}

}  // namespace

std::shared_ptr<Embedder> make_embedder(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "mock") return std::make_shared<HashEmbedder>(cfg.embed_dim);
  if (cfg.kind == "openai") return std::make_shared<OpenAIEmbedder>(client_for(cfg), cfg.model_name);
  throw ConfigError("backend kind '" + cfg.kind + "' cannot embed");
}

std::shared_ptr<Generator> make_generator(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "mock") return std::make_shared<MockRubricGenerator>(cfg.seed, cfg.rubrics_per_reply);
  if (cfg.kind == "scripted") return std::make_shared<ScriptedGenerator>(cfg.script);
  if (cfg.kind == "openai") return std::make_shared<OpenAIGenerator>(client_for(cfg), cfg);
  throw ConfigError("backend kind '" + cfg.kind + "' cannot generate");
}

std::shared_ptr<Generator> make_policy(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "mock") return std::make_shared<SamplingGenerator>(cfg.seed, cfg.response_length, cfg.temperature);
  if (cfg.kind == "scripted") return std::make_shared<ScriptedGenerator>(cfg.script);
  if (cfg.kind == "openai") return std::make_shared<OpenAIGenerator>(client_for(cfg), cfg);
  throw ConfigError("backend kind '" + cfg.kind + "' cannot act as the policy");
}

std::shared_ptr<Judge> make_judge(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "mock") return std::make_shared<KeywordJudge>();
  if (cfg.kind == "openai") return std::make_shared<OpenAIJudge>(client_for(cfg), cfg);
  throw ConfigError("backend kind '" + cfg.kind + "' cannot judge");
}

std::shared_ptr<Reranker> make_reranker(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == "passthrough" || cfg.kind == "mock") return std::make_shared<PassThroughReranker>();
  if (cfg.kind == "lexical") return std::make_shared<LexicalReranker>();
  if (cfg.kind == "openai") {
    if (cfg.model_name.empty()) return std::make_shared<PassThroughReranker>();
    return std::make_shared<HttpReranker>(client_for(cfg), cfg.model_name);
  }
  throw ConfigError("backend kind '" + cfg.kind + "' cannot rerank");
}

}  // namespace orbit
