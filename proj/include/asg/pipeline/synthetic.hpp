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

// Seeded synthetic corpus and the end-to-end demo.
//
// Stream usage: kCorpus draws the reports, kDetections the boxes,
// kEmbeddings the encoder outputs, kParameters the model (ModelParams::init).

#pragma once

#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "asg/pipeline/commands.hpp"

namespace asg::pipeline {

struct SyntheticOptions {
  std::size_t reports = 16;
  std::size_t max_sentences = 3;
  double image_size = 512.0;
  double jitter = 0.01;        // fraction of the image size
  double drop_rate = 0.05;     // per box
  double duplicate_rate = 0.05;
  std::size_t dim = 16;
  std::size_t tokens = 4;
};

inline constexpr std::array<const char*, 20> kSentencePool = {
    "Opacity projects over the right hilar.",
    "Mass adjacent to the right ventricle.",
    "The diaphragm unspec is elevated.",
    "There is a small left pleural effusion.",
    "No pneumothorax.",
    "The heart is enlarged.",
    "Bibasilar atelectasis is present.",
    "Patchy consolidation in the right lower lobe.",
    "Mild pulmonary edema.",
    "A nodule is seen in the left upper lobe.",
    "No focal consolidation.",
    "The lungs are hyperinflated.",
    "Linear scarring at the left base.",
    "Healed fracture of the ribs.",
    "The lungs are clear.",
    "Opacities in the lung bases.",
    "Retrocardiac opacity.",
    "The mediastinal contours are normal.",
    "Small pneumothorax at the right apex.",
    "The stomach is distended.",
};

struct LayoutBox {
  const char* cls;
  double x1, y1, x2, y2;  // fractions of width / height
};

// Frontal view; patient right on image left.
inline constexpr std::array<LayoutBox, 29> kLayout = {{
    {"aortic arch", 0.52, 0.22, 0.64, 0.32},
    {"cardiac silhouette", 0.38, 0.45, 0.75, 0.80},
    {"cavoatrial junction", 0.40, 0.45, 0.50, 0.55},
    {"left apical zone", 0.55, 0.10, 0.85, 0.22},
    {"left cardiophrenic angle", 0.65, 0.72, 0.78, 0.84},
    {"left clavicle", 0.52, 0.12, 0.90, 0.22},
    {"left costophrenic angle", 0.80, 0.74, 0.92, 0.88},
    {"left diaphragm", 0.55, 0.74, 0.92, 0.88},
    {"left hilar structures", 0.55, 0.38, 0.68, 0.54},
    {"left lower lung zone", 0.55, 0.58, 0.92, 0.80},
    {"left lung", 0.53, 0.10, 0.92, 0.84},
    {"left mid lung zone", 0.55, 0.38, 0.90, 0.58},
    {"left upper lung zone", 0.55, 0.20, 0.88, 0.38},
    {"mediastinum", 0.40, 0.20, 0.62, 0.70},
    {"right apical zone", 0.15, 0.10, 0.45, 0.22},
    {"right atrium", 0.36, 0.52, 0.50, 0.76},
    {"right cardiophrenic angle", 0.28, 0.70, 0.40, 0.82},
    {"right clavicle", 0.10, 0.12, 0.48, 0.22},
    {"right costophrenic angle", 0.08, 0.72, 0.20, 0.86},
    {"right diaphragm", 0.08, 0.70, 0.45, 0.86},
    {"right hilar structures", 0.32, 0.36, 0.45, 0.52},
    {"right lower lung zone", 0.08, 0.56, 0.45, 0.78},
    {"right lung", 0.08, 0.10, 0.47, 0.82},
    {"right mid lung zone", 0.10, 0.36, 0.45, 0.56},
    {"right upper lung zone", 0.12, 0.20, 0.45, 0.36},
    {"spine", 0.46, 0.05, 0.54, 0.95},
    {"svc", 0.40, 0.22, 0.47, 0.45},
    {"trachea", 0.46, 0.05, 0.54, 0.30},
    {"upper mediastinum", 0.40, 0.15, 0.60, 0.35},
}};

inline std::string synthetic_id(std::size_t i) {
  std::string n = std::to_string(i + 1);
  return "syn-" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

// Reports of 1..max_sentences distinct pool sentences, as {"id","text"}
// records.
inline std::vector<nlohmann::json> synthetic_reports(std::uint64_t seed,
                                                     const SyntheticOptions& o) {
  Rng rng(seed, Stream::kCorpus);
  std::vector<nlohmann::json> out;
  for (std::size_t i = 0; i < o.reports; ++i) {
    const std::size_t count = 1 + rng.below(o.max_sentences);
    std::vector<std::size_t> picked;
    while (picked.size() < count) {
      const std::size_t k = rng.below(kSentencePool.size());
      if (std::find(picked.begin(), picked.end(), k) == picked.end()) picked.push_back(k);
    }
    std::string text;
    for (std::size_t k : picked) text += (text.empty() ? "" : " ") + std::string(kSentencePool[k]);
    out.push_back({{"id", synthetic_id(i)}, {"text", text}});
  }
  return out;
}

// Layout boxes with uniform jitter, random drops and occasional lower-scored
// duplicates, as detection records.
inline std::vector<nlohmann::json> synthetic_detections(std::uint64_t seed,
                                                        const std::vector<std::string>& ids,
                                                        const SyntheticOptions& o) {
  Rng rng(seed, Stream::kDetections);
  const double s = o.image_size;
  std::vector<nlohmann::json> out;
  for (const auto& id : ids) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& l : kLayout) {
      auto j = [&](double v) {
        const double x = std::round((v + rng.uniform(-o.jitter, o.jitter)) * s * 100.0) / 100.0;
        return std::clamp(x, 0.0, s);
      };
      const double x1 = j(l.x1), y1 = j(l.y1), x2 = j(l.x2), y2 = j(l.y2);
      const double score = std::round(rng.uniform(0.5, 1.0) * 1000.0) / 1000.0;
      const bool drop = rng.uniform() < o.drop_rate;
      const bool dup = rng.uniform() < o.duplicate_rate;
      if (drop) continue;
      boxes.push_back({{"cls", l.cls}, {"x1", x1}, {"y1", y1}, {"x2", x2}, {"y2", y2},
                       {"score", score}});
      if (dup) {
        boxes.push_back({{"cls", l.cls},
                         {"x1", x1},
                         {"y1", y1},
                         {"x2", std::min(s, x2 + 4.0)},
                         {"y2", std::min(s, y2 + 4.0)},
                         {"score", score / 2.0}});
      }
    }
    out.push_back({{"image_id", id}, {"width", s}, {"height", s}, {"boxes", boxes}});
  }
  return out;
}

inline EmbeddingBundle synthetic_embeddings(std::uint64_t seed,
                                            const std::vector<std::string>& ids,
                                            std::size_t pair_count, const SyntheticOptions& o) {
  Rng rng(seed, Stream::kEmbeddings);
  auto vec = [&] {
    const Matrix m = rng.normal_matrix(1, o.dim);
    return std::vector<double>(m.row(0).begin(), m.row(0).end());
  };
  EmbeddingBundle b;
  for (const auto& id : ids) {
    b.tokens[id] = rng.normal_matrix(o.tokens, o.dim);
    b.text[id] = vec();
  }
  for (std::size_t k = 0; k < pair_count; ++k) {
    b.region[k] = vec();
    b.sentence[k] = vec();
  }
  return b;
}

template <typename Records>
std::string records_to_jsonl(const Records& records) {
  std::string out;
  for (const auto& r : records) out += io::to_jsonl_line(r);
  return out;
}

// Synthesizes a corpus, then runs parse -> align -> loss-eval through the
// same serialized formats the file commands use.
RunReport run_demo(const RunConfig& cfg, const SyntheticOptions& o = {});

}  // namespace asg::pipeline
