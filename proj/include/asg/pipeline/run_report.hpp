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

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/alignment_losses.hpp"
#include "asg/io.hpp"

namespace asg::pipeline {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;
};

inline nlohmann::json loss_to_json(const LossBreakdown& b) {
  return {{"l_ira", b.l_ira},
          {"l_arsa", b.l_arsa},
          {"l_bce", b.l_bce},
          {"l_soft", b.l_soft},
          {"total", b.total}};
}

struct RunReport {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  std::optional<LossBreakdown> loss;
  std::vector<CheckResult> checks;
  std::map<std::string, std::string> outputs;  // file name -> FNV-1a hash
  std::string content_hash;

  bool checks_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["counts"] = counts;
    j["diagnostics"] = diagnostics;
    if (loss) j["loss"] = loss_to_json(*loss);
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
      j["checks"].push_back({{"name", c.name},
                             {"passed", c.passed},
                             {"max_error", c.max_error},
                             {"tolerance", c.tolerance},
                             {"instances", c.instances}});
    }
    j["outputs"] = outputs;
    j["content_hash"] = content_hash;
    return j;
  }
};

// Writes named output files into one directory and keeps their hashes.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    io::write_text_file(dir_ / name, content);
    files_[name] = content;
  }

  const std::string& content(const std::string& name) const { return files_.at(name); }

  // Per-file hashes plus one hash over (name, content) of every file in name
  // order. Nothing path-dependent enters the hash.
  void finalize(RunReport& report) const {
    std::uint64_t h = io::fnv1a64("");
    for (const auto& [name, content] : files_) {
      report.outputs[name] = io::hex64(io::fnv1a64(content));
      h = io::fnv1a64(name, h);
      h = io::fnv1a64(std::string_view("\0", 1), h);
      h = io::fnv1a64(content, h);
      h = io::fnv1a64(std::string_view("\0", 1), h);
    }
    report.content_hash = io::hex64(h);
  }

  void write_report(const RunReport& report) const {
    io::write_text_file(dir_ / "run_report.json", report.to_json().dump(2) + "\n");
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

}  // namespace asg::pipeline
