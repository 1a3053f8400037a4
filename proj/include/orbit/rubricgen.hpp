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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orbit/core.hpp"
#include "orbit/gateway.hpp"
#include "orbit/vecstore.hpp"

namespace orbit {

/// System text plus a task text carrying {query}, {top_cases_text} and {candidate_rubrics_text}
/// exactly once each. {m_g} is optional.
struct PromptTemplate {
  std::string system_text;
  std::string task_text;

  void validate() const;
  static PromptTemplate builtin();
  static PromptTemplate load(const std::filesystem::path& system_file, const std::filesystem::path& task_file);
};

struct GenerationRequest {
  std::string query;
  std::vector<CaseRecord> retrieved_cases;
  std::vector<Rubric> candidate_rubrics;
  int m_g = 1;
};

struct RubricGenConfig {
  int t_cases = 3;
  int t_rubrics = 20;
  /// Number of rubrics requested per query; there is no sensible default, 0 means unset.
  int m_g = 0;
  double tau_lex = 0.6;
  double tau_sem = 0.95;
  /// Weight of the case embedding in the blended case score.
  double alpha = 1.0;
  int max_retries = 2;
  int ngram = 8;

  void validate() const;
};

/// Renders turns up to and including `truncate_at` (0-based). By default the cut is the last
/// patient/user turn, so the query ends awaiting the assistant.
std::string render_query(const Dialogue& dialogue, std::optional<std::size_t> truncate_at = std::nullopt);

std::string assemble_prompt(const PromptTemplate& tmpl, const GenerationRequest& request);

struct ParsedRubrics {
  std::vector<Rubric> rubrics;
  std::vector<std::string> warnings;
};

/// Reads the first fenced JSON array of {"criterion", "points"} objects. Missing points default to +1;
/// zero-point and otherwise invalid entries are dropped with a warning.
ParsedRubrics parse_rubrics(const std::string& reply, const std::string& id_prefix = "gen");

/// Lowercased alphanumeric word tokens.
std::vector<std::string> word_tokens(const std::string& text);

/// Jaccard overlap of word n-gram sets. Texts shorter than n are compared at their own length.
double ngram_jaccard(const std::string& a, const std::string& b, int n = 8);

struct Rejection {
  Rubric rubric;
  std::string reason;
  double lexical = 0.0;
  double semantic = 0.0;
};

struct ContaminationResult {
  std::vector<Rubric> kept;
  std::vector<Rejection> rejected;
};

/// Rejects candidates copying a seed rubric lexically (n-gram Jaccard >= tau_lex) or
/// semantically (cosine >= tau_sem). Input order is preserved in both outputs.
ContaminationResult contamination_filter(const std::vector<Rubric>& candidates, const DiagnosticDatabase& seed_pool,
                                         double tau_lex, double tau_sem, const EmbedFn& embed, int ngram = 8);

/// Retrieval-augmented generation of one query's rubric set, retrying when nothing usable survives.
RubricSet generate_rubric_set(const Dialogue& query, const DiagnosticDatabase& db, Gateway& gateway,
                              const RubricGenConfig& cfg, const PromptTemplate& tmpl = PromptTemplate::builtin());

}  // namespace orbit
