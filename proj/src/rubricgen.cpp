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

#include "orbit/rubricgen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "orbit/jsonio.hpp"

namespace orbit {

namespace {

constexpr std::string_view kQuery = "{query}";
constexpr std::string_view kCases = "{top_cases_text}";
constexpr std::string_view kCandidates = "{candidate_rubrics_text}";
constexpr std::string_view kCount = "{m_g}";

std::size_t occurrences(std::string_view text, std::string_view token) {
  std::size_t n = 0;
  for (auto pos = text.find(token); pos != std::string_view::npos; pos = text.find(token, pos + token.size())) ++n;
  return n;
}

std::string points(double w) { return fmt::format("{:+g}", w); }

std::string render_cases(const std::vector<CaseRecord>& cases) {
  if (cases.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += fmt::format("Case {}:\n{}\nRubrics:", i + 1, cases[i].query_text);
    std::size_t k = 0;
    for (const auto& r : cases[i].rubric_set.rubrics()) out += fmt::format("\n  {}. [{}] {}", ++k, points(r.weight), r.criterion);
  }
  return out;
}

std::string render_candidates(const std::vector<Rubric>& rubrics) {
  if (rubrics.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < rubrics.size(); ++i) {
    if (i > 0) out += '\n';
    out += fmt::format("{}. [{}] {}", i + 1, points(rubrics[i].weight), rubrics[i].criterion);
  }
  return out;
}

std::optional<Json> first_fenced_array(const std::string& reply) {
  std::size_t pos = 0;
  while (true) {
    const auto open = reply.find("```", pos);
    if (open == std::string::npos) break;
    const auto body = reply.find('\n', open + 3);
    if (body == std::string::npos) break;
    const auto close = reply.find("```", body + 1);
    if (close == std::string::npos) break;
    Json j = Json::parse(reply.substr(body + 1, close - body - 1), nullptr, false);
    if (!j.is_discarded() && j.is_array()) return j;
    pos = close + 3;
  }
  const auto start = reply.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && reply[start] == '[') {
    Json j = Json::parse(reply.substr(start), nullptr, false);
    if (!j.is_discarded() && j.is_array()) return j;
  }
  return std::nullopt;
}

std::vector<std::string> ngrams(const std::vector<std::string>& words, std::size_t n) {
  std::vector<std::string> grams;
  if (words.empty()) return grams;
  n = std::min(n, words.size());
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string g = words[i];
    for (std::size_t k = 1; k < n; ++k) g += ' ' + words[i + k];
    grams.push_back(std::move(g));
  }
  return grams;
}

double jaccard_of(const std::vector<std::string>& wa, const std::vector<std::string>& wb, int n) {
  if (wa.empty() || wb.empty()) return 0.0;
  const auto eff = std::min({static_cast<std::size_t>(n), wa.size(), wb.size()});
  const auto ga = ngrams(wa, eff);
  const auto gb = ngrams(wb, eff);
  const std::set<std::string> sa(ga.begin(), ga.end()), sb(gb.begin(), gb.end());
  std::size_t shared = 0;
  for (const auto& g : sa) shared += sb.count(g);
  return static_cast<double>(shared) / static_cast<double>(sa.size() + sb.size() - shared);
}

}  // namespace

void PromptTemplate::validate() const {
  for (auto token : {kQuery, kCases, kCandidates}) {
    const auto n = occurrences(task_text, token);
    if (n != 1) {
      throw TemplateError("task template must contain " + std::string(token) + " exactly once (found " +
                          std::to_string(n) + ")");
    }
  }
}

PromptTemplate PromptTemplate::builtin() {
  return PromptTemplate{
      "You write grading rubrics for responses to user consultations. Each rubric is one concrete, "
      "checkable criterion with a point value. Use positive points for behaviour a strong response shows "
      "and negative points for behaviour it must avoid. Write new criteria for the query at hand; never "
      "copy criteria from the reference material.",
      "Reference cases with their rubrics:\n{top_cases_text}\n\n"
      "Related rubric candidates:\n{candidate_rubrics_text}\n\n"
      "Query:\n{query}\n\n"
      "Write {m_g} rubrics for the query above, including at least one negative-point criterion. "
      "Answer with a fenced JSON array of objects {\"criterion\": string, \"points\": number}:\n"
      "```json\n[{\"criterion\": \"...\", \"points\": 5}]\n```"};
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& system_file, const std::filesystem::path& task_file) {
  PromptTemplate t{read_file(system_file), read_file(task_file)};
  t.validate();
  return t;
}

void RubricGenConfig::validate() const {
  if (t_cases < 1 || t_rubrics < 1) throw ConfigError("t_cases and t_rubrics must be positive");
  if (m_g < 1) throw ConfigError("rubricgen.m_g must be set to a positive count");
  if (!(tau_lex > 0.0 && tau_lex <= 1.0) || !(tau_sem > 0.0 && tau_sem <= 1.0)) {
    throw ConfigError("tau_lex and tau_sem must lie in (0, 1]");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (ngram < 1) throw ConfigError("ngram must be positive");
}

std::string render_query(const Dialogue& dialogue, std::optional<std::size_t> truncate_at) {
  validate(dialogue);
  std::size_t cut = 0;
  if (truncate_at) {
    if (*truncate_at >= dialogue.turns.size()) {
      throw PreconditionError("truncate_at " + std::to_string(*truncate_at) + " is past the last turn");
    }
    cut = *truncate_at;
  } else {
    auto it = std::find_if(dialogue.turns.rbegin(), dialogue.turns.rend(),
                           [](const Turn& t) { return is_asking_role(t.role); });
    if (it == dialogue.turns.rend()) {
      throw NoQueryTurnError("dialogue '" + dialogue.id + "' has no patient or user turn");
    }
    cut = static_cast<std::size_t>(std::distance(it, dialogue.turns.rend())) - 1;
  }
  return format_turns(dialogue, cut + 1);
}

std::string assemble_prompt(const PromptTemplate& tmpl, const GenerationRequest& request) {
  tmpl.validate();
  if (request.m_g < 1) throw PreconditionError("m_g must be positive");
  const std::string cases = render_cases(request.retrieved_cases);
  const std::string candidates = render_candidates(request.candidate_rubrics);
  const std::string count = std::to_string(request.m_g);

  // Single left-to-right pass so substituted text is never rescanned.
  const std::string& t = tmpl.task_text;
  std::string out;
  std::size_t pos = 0;
  while (pos < t.size()) {
    const auto brace = t.find('{', pos);
    if (brace == std::string::npos) {
      out.append(t, pos, std::string::npos);
      break;
    }
    out.append(t, pos, brace - pos);
    const std::string_view rest(t.data() + brace, t.size() - brace);
    if (rest.starts_with(kQuery)) {
      out += request.query;
      pos = brace + kQuery.size();
    } else if (rest.starts_with(kCases)) {
      out += cases;
      pos = brace + kCases.size();
    } else if (rest.starts_with(kCandidates)) {
      out += candidates;
      pos = brace + kCandidates.size();
    } else if (rest.starts_with(kCount)) {
      out += count;
      pos = brace + kCount.size();
    } else {
      out += '{';
      pos = brace + 1;
    }
  }
  return out;
}

ParsedRubrics parse_rubrics(const std::string& reply, const std::string& id_prefix) {
  const auto array = first_fenced_array(reply);
  if (!array) throw ParseError("reply contains no fenced JSON array of rubrics");
  ParsedRubrics out;
  std::size_t index = 0;
  for (const auto& item : *array) {
    ++index;
    auto drop = [&](const std::string& why) {
      out.warnings.push_back("entry " + std::to_string(index) + " dropped: " + why);
      spdlog::warn("rubric {}", out.warnings.back());
    };
    if (!item.is_object() || !item.contains("criterion") || !item.at("criterion").is_string()) {
      drop("no criterion string");
      continue;
    }
    double weight = 1.0;
    if (item.contains("points")) {
      if (!item.at("points").is_number()) {
        drop("points is not a number");
        continue;
      }
      weight = item.at("points").get<double>();
    }
    Rubric r{id_prefix + "-" + std::to_string(out.rubrics.size() + 1), "", item.at("criterion").get<std::string>(),
             weight, {}};
    if (weight == 0.0) {
      drop("zero points");
      continue;
    }
    try {
      validate(r);
    } catch (const ValidationError& e) {
      drop(e.what());
      continue;
    }
    out.rubrics.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

double ngram_jaccard(const std::string& a, const std::string& b, int n) {
  return jaccard_of(word_tokens(a), word_tokens(b), n);
}

ContaminationResult contamination_filter(const std::vector<Rubric>& candidates, const DiagnosticDatabase& seed_pool,
                                         double tau_lex, double tau_sem, const EmbedFn& embed, int ngram) {
  if (!(tau_lex > 0.0 && tau_lex <= 1.0) || !(tau_sem > 0.0 && tau_sem <= 1.0)) {
    throw PreconditionError("tau_lex and tau_sem must lie in (0, 1]");
  }
  ContaminationResult out;
  const auto& seeds = seed_pool.rubric_entries();
  if (candidates.empty()) return out;
  if (seeds.empty()) {
    out.kept = candidates;
    return out;
  }

  std::vector<std::vector<std::string>> seed_words;
  seed_words.reserve(seeds.size());
  for (const auto& e : seeds) seed_words.push_back(word_tokens(e.rubric.criterion));

  std::vector<std::string> texts;
  for (const auto& c : candidates) texts.push_back(c.criterion);
  const auto vecs = embed(texts);

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    const auto words = word_tokens(cand.criterion);
    double lex = 0.0;
    std::size_t lex_at = 0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const double j = seeds[k].rubric.criterion == cand.criterion ? 1.0 : jaccard_of(words, seed_words[k], ngram);
      if (j > lex) {
        lex = j;
        lex_at = k;
      }
    }
    if (vecs[i].size() != seed_pool.dim()) {
      throw DimensionError("candidate embedding dim does not match the seed pool");
    }
    Eigen::Index sem_at = 0;
    const double sem = (seed_pool.rubric_matrix() * normalized(vecs[i])).maxCoeff(&sem_at);
    if (lex >= tau_lex) {
      out.rejected.push_back({cand,
                              fmt::format("lexical overlap {:.3f} with seed rubric '{}'", lex, seeds[lex_at].rubric.id),
                              lex, sem});
    } else if (sem >= tau_sem) {
      out.rejected.push_back(
          {cand,
           fmt::format("semantic similarity {:.3f} with seed rubric '{}'", sem,
                       seeds[static_cast<std::size_t>(sem_at)].rubric.id),
           lex, sem});
    } else {
      out.kept.push_back(cand);
    }
  }
  return out;
}

RubricSet generate_rubric_set(const Dialogue& query, const DiagnosticDatabase& db, Gateway& gateway,
                              const RubricGenConfig& cfg, const PromptTemplate& tmpl) {
  cfg.validate();
  tmpl.validate();
  if (db.cases().empty()) throw EmptyDatabaseError("rubric generation needs a non-empty database");

  const std::string query_text = render_query(query);
  const auto q = gateway.embed({query_text}).front();

  const auto case_hits = search_cases(db, q, cfg.t_cases, cfg.alpha);
  std::vector<RerankCandidate> case_candidates;
  for (const auto& h : case_hits) case_candidates.push_back({h.id, db.find_case(h.id)->query_text});
  GenerationRequest request{query_text, {}, {}, cfg.m_g};
  for (const auto& h : gateway.rerank(query_text, case_candidates)) request.retrieved_cases.push_back(*db.find_case(h.id));

  if (!db.rubric_entries().empty()) {
    const auto rubric_hits = search_rubrics(db, q, cfg.t_rubrics);
    std::vector<RerankCandidate> rubric_candidates;
    for (const auto& h : rubric_hits) rubric_candidates.push_back({h.id, db.find_rubric(h.id)->rubric.criterion});
    for (const auto& h : gateway.rerank(query_text, rubric_candidates)) {
      request.candidate_rubrics.push_back(db.find_rubric(h.id)->rubric);
    }
  }

  const std::string prompt = assemble_prompt(tmpl, request);
  std::vector<std::string> reasons;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    const std::string tag = "attempt " + std::to_string(attempt + 1) + ": ";
    SamplingParams params;
    params.system_prompt = tmpl.system_text;
    params.variant = static_cast<std::uint64_t>(attempt);
    std::string reply;
    try {
      reply = gateway.generate(prompt, 1, params).front();
    } catch (const EmptyCompletionError& e) {
      reasons.push_back(tag + e.what());
      continue;
    }
    ParsedRubrics parsed;
    try {
      parsed = parse_rubrics(reply, query.id + "-cand");
    } catch (const ParseError& e) {
      reasons.push_back(tag + e.what());
      continue;
    }
    for (const auto& w : parsed.warnings) reasons.push_back(tag + w);
    if (static_cast<int>(parsed.rubrics.size()) > cfg.m_g) parsed.rubrics.resize(static_cast<std::size_t>(cfg.m_g));

    auto filtered = contamination_filter(parsed.rubrics, db, cfg.tau_lex, cfg.tau_sem, gateway.embed_fn(), cfg.ngram);
    for (const auto& r : filtered.rejected) reasons.push_back(tag + "'" + r.rubric.criterion + "' rejected: " + r.reason);

    std::vector<Rubric> rubrics;
    std::set<std::vector<std::string>> seen;
    for (auto& r : filtered.kept) {
      if (!seen.insert(word_tokens(r.criterion)).second) {
        reasons.push_back(tag + "'" + r.criterion + "' dropped as a duplicate");
        continue;
      }
      r.id = query.id + "-r" + std::to_string(rubrics.size() + 1);
      r.case_id = query.id;
      rubrics.push_back(std::move(r));
    }
    if (std::none_of(rubrics.begin(), rubrics.end(), [](const Rubric& r) { return r.weight > 0; })) {
      reasons.push_back(tag + "no positive-weight rubric survived");
      continue;
    }
    return RubricSet(query.id, std::move(rubrics));
  }
  throw GenerationFailedError("rubric generation failed for '" + query.id + "' after " +
                                  std::to_string(cfg.max_retries + 1) + " attempts",
                              std::move(reasons));
}

}  // namespace orbit
