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

// Precomputed encoder outputs consumed by loss evaluation.
//
// JSON-lines bundle, one record per line:
//   {"role": "tokens",   "id": str,   "matrix": [[...], ...]}   visual tokens
//   {"role": "text",     "id": str,   "vector": [...]}          report feature
//   {"role": "region",   "pair": int, "vector": [...]}          crop feature
//   {"role": "sentence", "pair": int, "vector": [...]}          sentence feature
// `pair` is the 0-based line index into the pairs file.
//
// Binary alternative: a directory holding tokens.bin ((N * M_Z) x d, images
// in batch order), text.bin (N x d), region.bin (P x d), sentence.bin (P x d),
// each in the flat binary matrix format of asg::io.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/error.hpp"
#include "asg/io.hpp"
#include "asg/matrix.hpp"

namespace asg::pipeline {

struct EmbeddingBundle {
  std::map<std::string, Matrix> tokens;
  std::map<std::string, std::vector<double>> text;
  std::map<std::size_t, std::vector<double>> region;
  std::map<std::size_t, std::vector<double>> sentence;
};

inline EmbeddingBundle read_bundle_jsonl(std::istream& in) {
  EmbeddingBundle b;
  io::for_each_jsonl(in, [&](const nlohmann::json& rec, std::size_t line) {
    const auto role = io::field<std::string>(rec, "role", line);
    if (role == "tokens") {
      b.tokens[io::field<std::string>(rec, "id", line)] =
          io::matrix_from_json(io::field<nlohmann::json>(rec, "matrix", line));
    } else if (role == "text") {
      b.text[io::field<std::string>(rec, "id", line)] =
          io::field<std::vector<double>>(rec, "vector", line);
    } else if (role == "region") {
      b.region[io::field<std::size_t>(rec, "pair", line)] =
          io::field<std::vector<double>>(rec, "vector", line);
    } else if (role == "sentence") {
      b.sentence[io::field<std::size_t>(rec, "pair", line)] =
          io::field<std::vector<double>>(rec, "vector", line);
    } else {
      throw Error(ErrorCode::kMalformedRecord,
                  "line " + std::to_string(line) + ": unknown role '" + role + "'",
                  "line " + std::to_string(line));
    }
  });
  return b;
}

inline std::string write_bundle_jsonl(const EmbeddingBundle& b,
                                      const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    out += io::to_jsonl_line(
        {{"role", "tokens"}, {"id", id}, {"matrix", io::matrix_to_json(b.tokens.at(id))}});
    out += io::to_jsonl_line({{"role", "text"}, {"id", id}, {"vector", b.text.at(id)}});
  }
  for (const auto& [k, v] : b.region) {
    out += io::to_jsonl_line({{"role", "region"}, {"pair", k}, {"vector", v}});
  }
  for (const auto& [k, v] : b.sentence) {
    out += io::to_jsonl_line({{"role", "sentence"}, {"pair", k}, {"vector", v}});
  }
  return out;
}

inline EmbeddingBundle read_bundle_dir(const std::filesystem::path& dir,
                                       const std::vector<std::string>& ids) {
  EmbeddingBundle b;
  const Matrix tokens = io::read_matrix_bin((dir / "tokens.bin").string());
  const Matrix text = io::read_matrix_bin((dir / "text.bin").string());
  if (ids.empty() || tokens.rows() % ids.size() != 0 || text.rows() != ids.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "tokens.bin / text.bin row counts do not match the batch size");
  }
  const std::size_t mz = tokens.rows() / ids.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Matrix z;
    for (std::size_t r = 0; r < mz; ++r) z.append_row(tokens.row(i * mz + r));
    b.tokens[ids[i]] = std::move(z);
    auto t = text.row(i);
    b.text[ids[i]] = {t.begin(), t.end()};
  }
  for (const char* role : {"region", "sentence"}) {
    const auto path = dir / (std::string(role) + ".bin");
    if (!std::filesystem::exists(path)) continue;
    const Matrix m = io::read_matrix_bin(path.string());
    auto& slot = std::string(role) == "region" ? b.region : b.sentence;
    for (std::size_t k = 0; k < m.rows(); ++k) {
      auto r = m.row(k);
      slot[k] = {r.begin(), r.end()};
    }
  }
  return b;
}

}  // namespace asg::pipeline
