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
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "orbit/core.hpp"
#include "orbit/random.hpp"

namespace orbit::test {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("orbit-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline Dialogue dialogue(std::string id, std::vector<std::pair<Role, std::string>> turns) {
  Dialogue d{std::move(id), {}, "test", {}};
  for (auto& [role, text] : turns) d.turns.push_back({role, std::move(text)});
  return d;
}

inline Rubric rubric(std::string id, std::string criterion, double weight, std::string case_id = "") {
  return Rubric{std::move(id), std::move(case_id), std::move(criterion), weight, {}};
}

inline Vector<double> vec(std::initializer_list<double> values) {
  Vector<double> v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Vector<double> random_unit(Rng& rng, int dim) {
  std::normal_distribution<double> normal;
  Vector<double> v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v / v.norm();
}

}  // namespace orbit::test
