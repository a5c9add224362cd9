// Copyright 2026 The ASG Authors.
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

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "asg/anatomy_ontology.hpp"
#include "asg/matrix.hpp"
#include "asg/report_parsing.hpp"
#include "oracle.hpp"

namespace asg::testing {

inline std::string data_path(const std::string& name) {
  return (std::filesystem::path(ASG_DATA_DIR) / name).string();
}

inline const Ontology& shipped_ontology() {
  static const Ontology o = Ontology::load(data_path("ontology.json"));
  return o;
}

inline const Lexicon& shipped_lexicon() {
  static const Lexicon l = Lexicon::load(data_path("lexicon.json"), shipped_ontology());
  return l;
}

inline std::filesystem::path temp_dir_path(const std::string& name) {
  const char* base = std::getenv("ASG_TEST_TMP");
  return std::filesystem::path(base ? base : std::filesystem::temp_directory_path().string()) /
         name;
}

// Fresh, empty directory under ASG_TEST_TMP.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = temp_dir_path(name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline oracle::Mat to_oracle(const Matrix& m) {
  oracle::Mat out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

inline double max_abs_diff(const Matrix& m, const oracle::Mat& o) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - o[i][j]));
  }
  return worst;
}

inline std::vector<std::vector<std::uint8_t>> to_bits(const std::vector<TagVector>& tags) {
  std::vector<std::vector<std::uint8_t>> out;
  for (const auto& t : tags) out.push_back(t.bits());
  return out;
}

}  // namespace asg::testing
