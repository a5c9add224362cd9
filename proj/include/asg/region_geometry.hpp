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
#include <cmath>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/anatomy_ontology.hpp"
#include "asg/error.hpp"
#include "asg/io.hpp"

namespace asg {

// Axis-aligned pixel rectangle.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2;
  }
  double area() const { return (x2 - x1) * (y2 - y1); }
  bool contains(const BBox& o) const {
    return x1 <= o.x1 && y1 <= o.y1 && x2 >= o.x2 && y2 >= o.y2;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// Smallest rectangle enclosing both boxes.
inline BBox merge_boxes(const BBox& a, const BBox& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
          std::max(a.y2, b.y2)};
}

struct AnatomicalBox {
  BBox bbox;
  DetectorClass cls;
  std::optional<double> score;
};

struct ImageDetections {
  std::string image_id;
  double width = 0;
  double height = 0;
  std::vector<AnatomicalBox> boxes;  // one per class, sorted by class

  const AnatomicalBox* find(const DetectorClass& cls) const {
    auto it = std::lower_bound(boxes.begin(), boxes.end(), cls,
                               [](const AnatomicalBox& b, const DetectorClass& c) {
                                 return b.cls < c;
                               });
    return (it != boxes.end() && it->cls == cls) ? &*it : nullptr;
  }
};

// Keeps the highest-scoring box per class (a missing score ranks as 0; the
// first box wins ties) and orders the survivors by class name.
inline std::vector<AnatomicalBox> dedup_by_class(const std::vector<AnatomicalBox>& boxes) {
  std::vector<AnatomicalBox> kept;
  for (const auto& b : boxes) {
    auto it = std::find_if(kept.begin(), kept.end(),
                           [&](const AnatomicalBox& k) { return k.cls == b.cls; });
    if (it == kept.end()) {
      kept.push_back(b);
    } else if (b.score.value_or(0.0) > it->score.value_or(0.0)) {
      *it = b;
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const AnatomicalBox& a, const AnatomicalBox& b) { return a.cls < b.cls; });
  return kept;
}

inline ImageDetections parse_detections(const nlohmann::json& rec, std::size_t line,
                                        const Ontology& ontology) {
  const std::string where = "line " + std::to_string(line);
  ImageDetections img;
  img.image_id = io::field<std::string>(rec, "image_id", line);
  img.width = io::field<double>(rec, "width", line);
  img.height = io::field<double>(rec, "height", line);
  if (!(std::isfinite(img.width) && std::isfinite(img.height) && img.width > 0 &&
        img.height > 0)) {
    throw Error(ErrorCode::kMalformedBox, where + ": image size must be positive", where);
  }
  const auto boxes = io::field<nlohmann::json>(rec, "boxes", line);
  if (!boxes.is_array()) {
    throw Error(ErrorCode::kMalformedRecord, where + ": 'boxes' must be an array", where);
  }
  std::vector<AnatomicalBox> parsed;
  for (const auto& b : boxes) {
    AnatomicalBox box;
    box.cls = DetectorClass(io::field<std::string>(b, "cls", line));
    box.bbox = {io::field<double>(b, "x1", line), io::field<double>(b, "y1", line),
                io::field<double>(b, "x2", line), io::field<double>(b, "y2", line)};
    if (b.contains("score") && !b.at("score").is_null()) {
      box.score = io::field<double>(b, "score", line);
    }
    if (!ontology.has_class(box.cls)) {
      throw Error(ErrorCode::kUnknownClass,
                  where + ": unknown detector class '" + box.cls.str() + "'", where);
    }
    const BBox& r = box.bbox;
    if (!r.valid() || r.x2 > img.width || r.y2 > img.height) {
      throw Error(ErrorCode::kMalformedBox,
                  where + ": box for '" + box.cls.str() + "' violates 0 <= x1 < x2 <= width, "
                          "0 <= y1 < y2 <= height",
                  where);
    }
    if (box.score && !(*box.score >= 0.0 && *box.score <= 1.0)) {
      throw Error(ErrorCode::kMalformedBox, where + ": score outside [0, 1]", where);
    }
    parsed.push_back(std::move(box));
  }
  img.boxes = dedup_by_class(parsed);
  return img;
}

// Detections: one {"image_id", "width", "height", "boxes": [{"cls", "x1",
// "y1", "x2", "y2", "score"?}]} object per line.
inline std::vector<ImageDetections> ingest_detections(std::istream& in,
                                                      const Ontology& ontology) {
  std::vector<ImageDetections> out;
  io::for_each_jsonl(in, [&](const nlohmann::json& rec, std::size_t line) {
    out.push_back(parse_detections(rec, line, ontology));
  });
  return out;
}

inline nlohmann::json detections_to_json(const ImageDetections& img) {
  nlohmann::json boxes = nlohmann::json::array();
  for (const auto& b : img.boxes) {
    nlohmann::json j = {{"cls", b.cls.str()},
                        {"x1", b.bbox.x1},
                        {"y1", b.bbox.y1},
                        {"x2", b.bbox.x2},
                        {"y2", b.bbox.y2}};
    if (b.score) j["score"] = *b.score;
    boxes.push_back(std::move(j));
  }
  return {{"image_id", img.image_id},
          {"width", img.width},
          {"height", img.height},
          {"boxes", std::move(boxes)}};
}

}  // namespace asg
