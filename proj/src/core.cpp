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

#include "orbit/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace orbit {

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kPatient: return "patient";
    case Role::kDoctor: return "doctor";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kSystem: return "system";
  }
  return "user";
}

Role role_from_string(std::string_view name) {
  if (name == "patient") return Role::kPatient;
  if (name == "doctor") return Role::kDoctor;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  if (name == "system") return Role::kSystem;
  throw ValidationError("unknown turn role '" + std::string(name) + "'");
}

bool is_asking_role(Role role) { return role == Role::kPatient || role == Role::kUser; }

void validate(const Dialogue& dialogue) {
  if (dialogue.id.empty()) throw ValidationError("dialogue id is empty");
  if (dialogue.turns.empty()) throw ValidationError("dialogue '" + dialogue.id + "' has no turns");
  for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
    if (blank(dialogue.turns[i].text)) {
      throw ValidationError("dialogue '" + dialogue.id + "' turn " + std::to_string(i) + " is blank");
    }
  }
}

void validate_dataset(const std::vector<Dialogue>& dialogues) {
  std::unordered_set<std::string> seen;
  for (const auto& d : dialogues) {
    validate(d);
    if (!seen.insert(d.id).second) throw ValidationError("duplicate dialogue id '" + d.id + "'");
  }
}

std::string format_turns(const Dialogue& dialogue, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count && i < dialogue.turns.size(); ++i) {
    if (i > 0) out += '\n';
    std::string role(to_string(dialogue.turns[i].role));
    std::transform(role.begin(), role.end(), role.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    out += role;
    out += ": ";
    out += dialogue.turns[i].text;
  }
  return out;
}

void validate(const Rubric& rubric) {
  if (blank(rubric.criterion)) throw ValidationError("rubric '" + rubric.id + "' has an empty criterion");
  if (!std::isfinite(rubric.weight) || rubric.weight == 0.0) {
    throw ValidationError("rubric '" + rubric.id + "' must have a finite non-zero weight");
  }
  if (std::abs(rubric.weight) > kMaxAbsRubricWeight) {
    throw ValidationError("rubric '" + rubric.id + "' weight exceeds the sanity cap of 100");
  }
}

RubricSet::RubricSet(std::string query_id, std::vector<Rubric> rubrics)
    : query_id_(std::move(query_id)), rubrics_(std::move(rubrics)) {
  std::unordered_set<std::string> ids;
  for (const auto& r : rubrics_) {
    validate(r);
    if (!ids.insert(r.id).second) {
      throw ValidationError("duplicate rubric id '" + r.id + "' in set '" + query_id_ + "'");
    }
    if (r.weight > 0) total_positive_ += r.weight;
  }
  if (!(total_positive_ > 0.0)) {
    throw ValidationError("rubric set '" + query_id_ + "' has no positive-weight rubric");
  }
}

Vector<double> RubricSet::weights() const {
  Vector<double> w(static_cast<Eigen::Index>(rubrics_.size()));
  for (std::size_t i = 0; i < rubrics_.size(); ++i) w[static_cast<Eigen::Index>(i)] = rubrics_[i].weight;
  return w;
}

void FilterConfig::validate() const {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (n_rollout < 1) throw ConfigError("n_rollout must be positive");
  if (!unit(tau_q_low) || !unit(tau_q_high) || !unit(tau_s) || !unit(tau_r)) {
    throw ConfigError("filter thresholds must lie in [0, 1]");
  }
  if (tau_q_low > tau_q_high) throw ConfigError("tau_q_low must not exceed tau_q_high");
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("group_size must be at least 2");
  if (!(eps_adv > 0)) throw ConfigError("eps_adv must be positive");
  if (!(sigma_floor >= 0)) throw ConfigError("sigma_floor must be non-negative");
  if (!(delta_mask > 0)) throw ConfigError("delta_mask must be positive");
  if (!(clip_ratio > 0)) throw ConfigError("clip_ratio must be positive");
  if (!(kl_coeff >= 0)) throw ConfigError("kl_coeff must be non-negative");
  if (!(t_init > 0) || !(t_max > 0)) throw ConfigError("temperatures must be positive");
  if (!(gamma_restart > 1)) throw ConfigError("gamma_restart must exceed 1");
  if (t_init > t_max) throw ConfigError("t_init must not exceed t_max");
}

EmbeddingVector normalized(const EmbeddingVector& v) {
  if (!v.allFinite()) throw DegenerateVectorError("vector has non-finite components");
  const double n = v.norm();
  if (!(n > 0.0)) throw DegenerateVectorError("cannot normalize a zero vector");
  return v / n;
}

void check_unit_norm(const EmbeddingVector& v, std::string_view what) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitNormTolerance) {
    throw FormatError(std::string(what) + " is not a finite unit vector");
  }
}

}  // namespace orbit
