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
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbit/core.hpp"

namespace orbit {

using Json = nlohmann::ordered_json;

Json to_json(const Dialogue& dialogue);
Dialogue dialogue_from_json(const Json& j);
Json to_json(const Rubric& rubric);
Rubric rubric_from_json(const Json& j);
/// Embedded form used by rubricsets.jsonl: rubrics carry no case_id (it is the query_id).
Json to_json(const RubricSet& set);
RubricSet rubric_set_from_json(const Json& j);
Json to_json(const EmbeddingVector& v);
EmbeddingVector embedding_from_json(const Json& j);
Json to_json(const FilterConfig& cfg);
FilterConfig filter_config_from_json(const Json& j, FilterConfig base = {});
Json to_json(const GrpoConfig& cfg);
GrpoConfig grpo_config_from_json(const Json& j, GrpoConfig base = {});

/// One parsed JSONL line and where it came from (1-based).
struct JsonLine {
  std::size_t line = 0;
  Json value;
};

/// Blank lines are skipped. Malformed lines raise FormatError naming path and line.
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);
std::vector<JsonLine> parse_jsonl(const std::string& text, const std::string& origin);
std::string to_jsonl(const std::vector<Json>& rows);

/// Runs `convert` per line, re-raising any error with the line number attached.
template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path,
                             const std::function<T(const Json&)>& convert) {
  std::vector<T> out;
  for (const auto& row : read_jsonl(path)) {
    try {
      out.push_back(convert(row.value));
    } catch (const Json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(row.line) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(row.line) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Dialogue> read_dialogues(const std::filesystem::path& path);
std::vector<RubricSet> read_rubric_sets(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace orbit
