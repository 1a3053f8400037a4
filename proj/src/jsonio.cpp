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

#include "orbit/jsonio.hpp"

#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace orbit {

namespace {

std::vector<std::string> string_list(const Json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

Json to_json(const Dialogue& d) {
  Json turns = Json::array();
  for (const auto& t : d.turns) turns.push_back(Json{{"role", to_string(t.role)}, {"text", t.text}});
  return Json{{"id", d.id}, {"turns", std::move(turns)}, {"source", d.source}, {"tags", d.tags}};
}

Dialogue dialogue_from_json(const Json& j) {
  Dialogue d;
  d.id = j.at("id").get<std::string>();
  for (const auto& t : j.at("turns")) {
    d.turns.push_back({role_from_string(t.at("role").get<std::string>()), t.at("text").get<std::string>()});
  }
  d.source = j.value("source", std::string{});
  d.tags = string_list(j, "tags");
  validate(d);
  return d;
}

Json to_json(const Rubric& r) {
  return Json{{"id", r.id}, {"case_id", r.case_id}, {"criterion", r.criterion},
              {"weight", r.weight}, {"tags", r.tags}};
}

Rubric rubric_from_json(const Json& j) {
  Rubric r;
  r.id = j.at("id").get<std::string>();
  r.case_id = j.at("case_id").get<std::string>();
  r.criterion = j.at("criterion").get<std::string>();
  r.weight = j.at("weight").get<double>();
  r.tags = string_list(j, "tags");
  validate(r);
  return r;
}

Json to_json(const RubricSet& set) {
  Json rubrics = Json::array();
  for (const auto& r : set.rubrics()) {
    rubrics.push_back(Json{{"id", r.id}, {"criterion", r.criterion}, {"weight", r.weight}, {"tags", r.tags}});
  }
  return Json{{"query_id", set.query_id()}, {"rubrics", std::move(rubrics)}};
}

RubricSet rubric_set_from_json(const Json& j) {
  const auto query_id = j.at("query_id").get<std::string>();
  std::vector<Rubric> rubrics;
  for (const auto& r : j.at("rubrics")) {
    rubrics.push_back(Rubric{r.at("id").get<std::string>(), query_id, r.at("criterion").get<std::string>(),
                             r.at("weight").get<double>(), string_list(r, "tags")});
  }
  return RubricSet(query_id, std::move(rubrics));
}

Json to_json(const EmbeddingVector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

EmbeddingVector embedding_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("embedding must be a JSON array");
  EmbeddingVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json to_json(const FilterConfig& c) {
  return Json{{"n_rollout", c.n_rollout}, {"tau_q_low", c.tau_q_low}, {"tau_q_high", c.tau_q_high},
              {"tau_s", c.tau_s}, {"tau_r", c.tau_r}};
}

FilterConfig filter_config_from_json(const Json& j, FilterConfig c) {
  c.n_rollout = j.value("n_rollout", c.n_rollout);
  c.tau_q_low = j.value("tau_q_low", c.tau_q_low);
  c.tau_q_high = j.value("tau_q_high", c.tau_q_high);
  c.tau_s = j.value("tau_s", c.tau_s);
  c.tau_r = j.value("tau_r", c.tau_r);
  c.validate();
  return c;
}

Json to_json(const GrpoConfig& c) {
  return Json{{"group_size", c.group_size}, {"eps_adv", c.eps_adv}, {"sigma_floor", c.sigma_floor},
              {"delta_mask", c.delta_mask}, {"clip_ratio", c.clip_ratio}, {"kl_coeff", c.kl_coeff},
              {"t_init", c.t_init}, {"gamma_restart", c.gamma_restart}, {"t_max", c.t_max}};
}

GrpoConfig grpo_config_from_json(const Json& j, GrpoConfig c) {
  c.group_size = j.value("group_size", c.group_size);
  c.eps_adv = j.value("eps_adv", c.eps_adv);
  c.sigma_floor = j.value("sigma_floor", c.sigma_floor);
  c.delta_mask = j.value("delta_mask", c.delta_mask);
  c.clip_ratio = j.value("clip_ratio", c.clip_ratio);
  c.kl_coeff = j.value("kl_coeff", c.kl_coeff);
  c.t_init = j.value("t_init", c.t_init);
  c.gamma_restart = j.value("gamma_restart", c.gamma_restart);
  c.t_max = j.value("t_max", c.t_max);
  c.validate();
  return c;
}

std::vector<JsonLine> parse_jsonl(const std::string& text, const std::string& origin) {
  std::vector<JsonLine> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back({n, Json::parse(line)});
    } catch (const Json::parse_error& e) {
      throw FormatError(origin + ":" + std::to_string(n) + ": malformed JSON: " + e.what());
    }
  }
  return rows;
}

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file(path), path.string());
}

std::string to_jsonl(const std::vector<Json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump();
    out += '\n';
  }
  return out;
}

std::vector<Dialogue> read_dialogues(const std::filesystem::path& path) {
  auto dialogues = read_jsonl_as<Dialogue>(path, dialogue_from_json);
  validate_dataset(dialogues);
  return dialogues;
}

std::vector<RubricSet> read_rubric_sets(const std::filesystem::path& path) {
  return read_jsonl_as<RubricSet>(path, rubric_set_from_json);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ConfigError("cannot move '" + tmp.string() + "' into place: " + ec.message());
  }
}

}  // namespace orbit
