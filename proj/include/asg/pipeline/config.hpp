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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/alignment_losses.hpp"
#include "asg/arsa_pairing.hpp"
#include "asg/error.hpp"
#include "asg/io.hpp"

namespace asg::pipeline {

struct RunConfig {
  double tau = kDefaultTemperature;
  double alpha = kDefaultAlpha;
  Scenario3Strategy strategy = Scenario3Strategy::kMergeBBox;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::size_t projection_dim = 0;  // 0: half the embedding width, rounded up

  // Input paths; empty means "not given".
  std::string ontology;
  std::string lexicon;
  std::string reports;
  std::string detections;
  std::string triplets;
  std::string tags;
  std::string pairs;
  std::string embeddings;
  std::string decoder;

  std::string output_dir = ".";

  void validate() const {
    require_positive_temperature(tau);
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw Error(ErrorCode::kAlphaOutOfRange, "alpha must lie in [0, 1]");
    }
    for (double w : {weights.ira, weights.arsa, weights.bce, weights.soft}) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorCode::kInvalidArgument, "loss weights must be finite and >= 0");
      }
    }
  }
};

inline Scenario3Strategy parse_strategy(const std::string& s) {
  if (s == "merge") return Scenario3Strategy::kMergeBBox;
  if (s == "split") return Scenario3Strategy::kSplitSentence;
  throw Error(ErrorCode::kInvalidArgument, "strategy must be 'merge' or 'split', got '" + s + "'",
              s);
}

inline std::string strategy_name(Scenario3Strategy s) {
  return s == Scenario3Strategy::kMergeBBox ? "merge" : "split";
}

inline LossWeights parse_weights(const std::vector<double>& w) {
  if (w.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "loss_weights needs 4 values (ira, arsa, bce, soft)");
  }
  return {w[0], w[1], w[2], w[3]};
}

// Overlays the keys present in a JSON config document:
//   {"tau", "alpha", "strategy": "merge"|"split", "seed", "loss_weights": [4],
//    "projection_dim", "paths": {"ontology", "lexicon", "reports", ...}}
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& doc) {
  try {
    if (doc.contains("tau")) cfg.tau = doc.at("tau").get<double>();
    if (doc.contains("alpha")) cfg.alpha = doc.at("alpha").get<double>();
    if (doc.contains("strategy")) cfg.strategy = parse_strategy(doc.at("strategy").get<std::string>());
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("loss_weights")) {
      cfg.weights = parse_weights(doc.at("loss_weights").get<std::vector<double>>());
    }
    if (doc.contains("projection_dim")) cfg.projection_dim = doc.at("projection_dim").get<std::size_t>();
    if (doc.contains("paths")) {
      const auto& p = doc.at("paths");
      const std::map<std::string, std::string*> slots = {
          {"ontology", &cfg.ontology}, {"lexicon", &cfg.lexicon},
          {"reports", &cfg.reports},   {"detections", &cfg.detections},
          {"triplets", &cfg.triplets}, {"tags", &cfg.tags},
          {"pairs", &cfg.pairs},       {"embeddings", &cfg.embeddings},
          {"decoder", &cfg.decoder},   {"output_dir", &cfg.output_dir}};
      for (const auto& [key, slot] : slots) {
        if (p.contains(key)) *slot = p.at(key).get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedJson, std::string("config: ") + e.what());
  }
}

// Only values that affect results; paths are left out so reports written to
// different directories stay byte-identical.
inline nlohmann::json config_summary(const RunConfig& cfg) {
  return {{"tau", cfg.tau},
          {"alpha", cfg.alpha},
          {"strategy", strategy_name(cfg.strategy)},
          {"seed", cfg.seed},
          {"projection_dim", cfg.projection_dim},
          {"loss_weights", {cfg.weights.ira, cfg.weights.arsa, cfg.weights.bce, cfg.weights.soft}}};
}

}  // namespace asg::pipeline
