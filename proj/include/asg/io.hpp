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

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "asg/error.hpp"
#include "asg/matrix.hpp"

namespace asg::io {

static_assert(std::endian::native == std::endian::little,
              "binary matrix files are read and written as native little-endian");

inline std::ifstream open_input(const std::string& path,
                                std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path, path);
  return in;
}

inline std::string read_text_file(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json_file(const std::string& path) {
  auto text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, path + ": " + e.what(), path);
  }
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot write " + path.string(), path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Calls fn(record, line_number) for every non-blank line; line numbers are
// 1-based. Parse failures are reported with their line number.
template <typename Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedJson,
                  "line " + std::to_string(line_no) + ": " + e.what(),
                  "line " + std::to_string(line_no));
    }
    fn(record, line_no);
  }
}

inline std::string to_jsonl_line(const nlohmann::json& record) { return record.dump() + "\n"; }

// Field access with a line-numbered MalformedRecord on failure.
template <typename T>
T field(const nlohmann::json& record, const char* key, std::size_t line_no) {
  if (!record.is_object() || !record.contains(key)) {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line_no) + ": missing field '" + key + "'",
                "line " + std::to_string(line_no));
  }
  try {
    return record.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line_no) + ": field '" + key + "': " + e.what(),
                "line " + std::to_string(line_no));
  }
}

// 64-bit FNV-1a, used as the content hash in run reports.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t hash = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Flat binary matrix: uint64 rows, uint64 cols, then rows*cols float64, all
// little-endian, row-major.
static_assert(std::endian::native == std::endian::little,
              "binary matrix I/O assumes a little-endian host");

inline void write_matrix_bin(std::ostream& out, const Matrix& m) {
  const std::uint64_t header[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(m.values().data()),
            static_cast<std::streamsize>(m.values().size() * sizeof(double)));
}

inline Matrix read_matrix_bin(std::istream& in) {
  std::uint64_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
    throw Error(ErrorCode::kMalformedRecord, "truncated binary matrix header");
  }
  if (header[0] > (1ull << 32) || header[1] > (1ull << 32)) {
    throw Error(ErrorCode::kMalformedRecord, "implausible binary matrix header");
  }
  Matrix m(header[0], header[1]);
  const auto bytes = static_cast<std::streamsize>(m.values().size() * sizeof(double));
  if (!in.read(reinterpret_cast<char*>(m.values().data()), bytes)) {
    throw Error(ErrorCode::kMalformedRecord, "truncated binary matrix payload");
  }
  return m;
}

inline void write_matrix_bin(const std::filesystem::path& path, const Matrix& m) {
  std::ostringstream ss(std::ios::binary);
  write_matrix_bin(ss, m);
  write_text_file(path, ss.str());
}

inline Matrix read_matrix_bin(const std::string& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  return read_matrix_bin(in);
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r.get<std::vector<double>>());
  return m;
}

}  // namespace asg::io
