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

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "orbit/errors.hpp"

namespace orbit {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Embeddings are plain dense double vectors. Stored vectors are unit-norm.
using EmbeddingVector = Vector<double>;

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr double kMaxAbsRubricWeight = 100.0;

enum class Role { kPatient, kDoctor, kUser, kAssistant, kSystem };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);
/// Patient and user turns are the ones a query can end on.
bool is_asking_role(Role role);

struct Turn {
  Role role = Role::kUser;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;
  std::string source;
  std::vector<std::string> tags;

  bool operator==(const Dialogue&) const = default;
};

void validate(const Dialogue& dialogue);
/// Checks per-dialogue invariants plus id uniqueness across the dataset.
void validate_dataset(const std::vector<Dialogue>& dialogues);

/// Renders turns [0, count) as "ROLE: text" lines joined by '\n'.
std::string format_turns(const Dialogue& dialogue, std::size_t count);

/// One weighted criterion. Positive weight grants credit, negative weight deducts.
struct Rubric {
  std::string id;
  std::string case_id;
  std::string criterion;
  double weight = 0.0;
  std::vector<std::string> tags;

  bool operator==(const Rubric&) const = default;
};

void validate(const Rubric& rubric);

/// The checklist attached to one query. Always holds at least one credit rubric.
class RubricSet {
 public:
  RubricSet(std::string query_id, std::vector<Rubric> rubrics);

  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<Rubric>& rubrics() const noexcept { return rubrics_; }
  std::size_t size() const noexcept { return rubrics_.size(); }
  const Rubric& operator[](std::size_t i) const { return rubrics_[i]; }

  /// Sum of the positive weights; the normalization denominator.
  double total_positive_weight() const noexcept { return total_positive_; }
  Vector<double> weights() const;

  bool operator==(const RubricSet& other) const {
    return query_id_ == other.query_id_ && rubrics_ == other.rubrics_;
  }

 private:
  std::string query_id_;
  std::vector<Rubric> rubrics_;
  double total_positive_ = 0.0;
};

struct FilterConfig {
  int n_rollout = 8;
  double tau_q_low = 0.0;
  double tau_q_high = 0.75;
  double tau_s = 0.5;
  double tau_r = 0.75;

  void validate() const;
};

struct GrpoConfig {
  int group_size = 8;
  double eps_adv = 1e-4;
  double sigma_floor = 0.05;
  double delta_mask = 1e-3;
  double clip_ratio = 0.2;
  double kl_coeff = 0.0;
  double t_init = 1.0;
  double gamma_restart = 1.2;
  double t_max = 1.5;

  void validate() const;
};

/// Throws DegenerateVectorError on zero or non-finite input.
EmbeddingVector normalized(const EmbeddingVector& v);
void check_unit_norm(const EmbeddingVector& v, std::string_view what);

}  // namespace orbit
