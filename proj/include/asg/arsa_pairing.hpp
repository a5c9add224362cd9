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

// Builds aligned (image region, report sentence) pairs for one image-report
// pair.
//
//   exact / containment   sentence + the target class box        -> Direct
//   one_to_many, merge    sentence + union of all target boxes   -> MergedBoxes
//   one_to_many, split    one sentence variant per target, each
//                         with that target's box                 -> SplitSentence
//
// Unmapped regions and missing boxes skip the triplet with a diagnostic. A
// split whose region text cannot be found in the sentence falls back to merge.

#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/anatomy_ontology.hpp"
#include "asg/error.hpp"
#include "asg/region_geometry.hpp"
#include "asg/report_parsing.hpp"

namespace asg {

enum class Scenario3Strategy { kMergeBBox, kSplitSentence };
enum class PairStrategy { kDirect, kMergedBoxes, kSplitSentence };
enum class SkipReason { kUnmapped, kBoxMissing };

inline std::string_view pair_strategy_name(PairStrategy s) {
  switch (s) {
    case PairStrategy::kDirect: return "direct";
    case PairStrategy::kMergedBoxes: return "merged_boxes";
    case PairStrategy::kSplitSentence: return "split_sentence";
  }
  return "";
}

inline std::string_view skip_reason_name(SkipReason r) {
  return r == SkipReason::kUnmapped ? "Unmapped" : "BoxMissing";
}

struct RegionSentencePair {
  std::string image_id;
  BBox crop;
  std::vector<DetectorClass> classes;
  std::string sentence_text;
  std::size_t sentence_index = 0;
  AnaRegion region;
  PairStrategy strategy = PairStrategy::kDirect;
};

struct SkippedTriplet {
  Triplet triplet;
  SkipReason reason;
  std::vector<DetectorClass> missing;
};

struct SplitFallback {
  Triplet triplet;
  std::string term;
};

// Per-triplet outcomes. triplets == direct + merged + split_triplets +
// skipped.size(); emitted pairs == direct + merged + split_pairs -
// duplicates_dropped.
struct PairingDiagnostics {
  std::size_t triplets = 0;
  std::size_t direct = 0;
  std::size_t merged = 0;
  std::size_t split_triplets = 0;
  std::size_t split_pairs = 0;
  std::size_t duplicates_dropped = 0;
  std::vector<SkippedTriplet> skipped;
  std::vector<SplitFallback> fallbacks;
};

struct PairingResult {
  std::vector<RegionSentencePair> pairs;
  PairingDiagnostics diagnostics;
};

namespace detail {

// Case-insensitive, word-bounded search.
inline std::size_t find_word_ci(std::string_view hay, std::string_view needle) {
  if (needle.empty() || needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size() && match; ++k) {
      match = ascii_lower(hay[i + k]) == ascii_lower(needle[k]);
    }
    if (!match) continue;
    const bool left_ok = i == 0 || !is_word_char(hay[i - 1]);
    const std::size_t j = i + needle.size();
    const bool right_ok = j == hay.size() || !is_word_char(hay[j]);
    if (left_ok && right_ok) return i;
  }
  return std::string_view::npos;
}

}  // namespace detail

// One variant per subregion term, each replacing the first occurrence of
// region_term. Throws TermNotFound when the term is absent.
inline std::vector<std::string> split_sentence(std::string_view sentence_text,
                                               std::string_view region_term,
                                               std::span<const std::string> subregion_terms) {
  if (subregion_terms.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "split needs at least two subregion terms");
  }
  const std::size_t at = detail::find_word_ci(sentence_text, region_term);
  if (at == std::string_view::npos) {
    throw Error(ErrorCode::kTermNotFound,
                "'" + std::string(region_term) + "' does not occur in the sentence",
                std::string(region_term));
  }
  std::vector<std::string> variants;
  variants.reserve(subregion_terms.size());
  for (const auto& sub : subregion_terms) {
    std::string v(sentence_text.substr(0, at));
    v += sub;
    v += sentence_text.substr(at + region_term.size());
    variants.push_back(std::move(v));
  }
  return variants;
}

inline PairingResult build_pairs(const Report& report, std::span<const Triplet> triplets,
                                 const ImageDetections& detections, const Ontology& ontology,
                                 Scenario3Strategy strategy) {
  PairingResult result;
  auto& diag = result.diagnostics;
  diag.triplets = triplets.size();

  auto emit = [&](RegionSentencePair pair) {
    const bool dup = std::any_of(result.pairs.begin(), result.pairs.end(), [&](const auto& p) {
      return p.crop == pair.crop && p.sentence_text == pair.sentence_text;
    });
    if (dup) {
      ++diag.duplicates_dropped;
    } else {
      result.pairs.push_back(std::move(pair));
    }
  };

  // Returns false (and records BoxMissing) unless every class has a box.
  auto gather = [&](const Triplet& t, const std::vector<DetectorClass>& classes,
                    std::vector<BBox>& boxes) {
    SkippedTriplet skip{t, SkipReason::kBoxMissing, {}};
    for (const auto& c : classes) {
      if (const auto* b = detections.find(c)) {
        boxes.push_back(b->bbox);
      } else {
        skip.missing.push_back(c);
      }
    }
    if (skip.missing.empty()) return true;
    diag.skipped.push_back(std::move(skip));
    return false;
  };

  for (const auto& t : triplets) {
    if (t.source_sentence >= report.sentences.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "triplet refers to sentence " + std::to_string(t.source_sentence) +
                      " of report '" + report.id + "'",
                  report.id);
    }
    const Sentence& sentence = report.sentences[t.source_sentence];
    auto base = [&](PairStrategy s) {
      RegionSentencePair p;
      p.image_id = detections.image_id.empty() ? report.id : detections.image_id;
      p.sentence_text = sentence.text;
      p.sentence_index = sentence.index;
      p.region = t.region;
      p.strategy = s;
      return p;
    };

    const MappingResolution res = ontology.resolve(t.region);
    if (std::holds_alternative<Unmapped>(res)) {
      diag.skipped.push_back({t, SkipReason::kUnmapped, {}});
      continue;
    }
    if (const auto* one = std::get_if<OneToMany>(&res)) {
      std::vector<BBox> boxes;
      if (!gather(t, one->targets, boxes)) continue;

      if (strategy == Scenario3Strategy::kSplitSentence) {
        const std::string term = t.region_surface.empty() ? t.region.str() : t.region_surface;
        std::vector<std::string> variants;
        try {
          variants = split_sentence(sentence.text, term, one->subregion_terms);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kTermNotFound) throw;
          diag.fallbacks.push_back({t, term});
        }
        if (!variants.empty()) {
          ++diag.split_triplets;
          for (std::size_t k = 0; k < variants.size(); ++k) {
            auto p = base(PairStrategy::kSplitSentence);
            p.crop = boxes[k];
            p.classes = {one->targets[k]};
            p.sentence_text = std::move(variants[k]);
            ++diag.split_pairs;
            emit(std::move(p));
          }
          continue;
        }
      }

      auto p = base(PairStrategy::kMergedBoxes);
      p.crop = boxes.front();
      for (std::size_t k = 1; k < boxes.size(); ++k) p.crop = merge_boxes(p.crop, boxes[k]);
      p.classes = one->targets;
      ++diag.merged;
      emit(std::move(p));
      continue;
    }

    const DetectorClass target = std::holds_alternative<ExactMatch>(res)
                                     ? std::get<ExactMatch>(res).target
                                     : std::get<ContainedIn>(res).target;
    std::vector<BBox> boxes;
    if (!gather(t, {target}, boxes)) continue;
    auto p = base(PairStrategy::kDirect);
    p.crop = boxes.front();
    p.classes = {target};
    ++diag.direct;
    emit(std::move(p));
  }
  return result;
}

inline nlohmann::json pair_to_json(const RegionSentencePair& p) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : p.classes) classes.push_back(c.str());
  return {{"image_id", p.image_id},
          {"crop", {p.crop.x1, p.crop.y1, p.crop.x2, p.crop.y2}},
          {"classes", std::move(classes)},
          {"sentence", p.sentence_text},
          {"sentence_index", p.sentence_index},
          {"region", p.region.str()},
          {"strategy", std::string(pair_strategy_name(p.strategy))}};
}

inline RegionSentencePair pair_from_json(const nlohmann::json& rec, std::size_t line) {
  RegionSentencePair p;
  p.image_id = io::field<std::string>(rec, "image_id", line);
  const auto crop = io::field<std::vector<double>>(rec, "crop", line);
  if (crop.size() != 4) {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line) + ": crop must have 4 coordinates");
  }
  p.crop = {crop[0], crop[1], crop[2], crop[3]};
  for (const auto& c : io::field<std::vector<std::string>>(rec, "classes", line)) {
    p.classes.emplace_back(c);
  }
  p.sentence_text = io::field<std::string>(rec, "sentence", line);
  if (rec.contains("sentence_index")) p.sentence_index = rec.at("sentence_index").get<std::size_t>();
  if (rec.contains("region")) p.region = AnaRegion(rec.at("region").get<std::string>());
  const auto s = io::field<std::string>(rec, "strategy", line);
  if (s == "direct") {
    p.strategy = PairStrategy::kDirect;
  } else if (s == "merged_boxes") {
    p.strategy = PairStrategy::kMergedBoxes;
  } else if (s == "split_sentence") {
    p.strategy = PairStrategy::kSplitSentence;
  } else {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line) + ": unknown strategy '" + s + "'");
  }
  return p;
}

inline std::vector<nlohmann::json> diagnostics_to_jsonl(const std::string& image_id,
                                                        const PairingDiagnostics& d) {
  std::vector<nlohmann::json> out;
  for (const auto& s : d.skipped) {
    nlohmann::json missing = nlohmann::json::array();
    for (const auto& c : s.missing) missing.push_back(c.str());
    out.push_back({{"kind", "skipped"},
                   {"image_id", image_id},
                   {"sentence_index", s.triplet.source_sentence},
                   {"region", s.triplet.region.str()},
                   {"finding", s.triplet.finding.str()},
                   {"reason", std::string(skip_reason_name(s.reason))},
                   {"missing", std::move(missing)}});
  }
  for (const auto& f : d.fallbacks) {
    out.push_back({{"kind", "split_fallback"},
                   {"image_id", image_id},
                   {"sentence_index", f.triplet.source_sentence},
                   {"region", f.triplet.region.str()},
                   {"finding", f.triplet.finding.str()},
                   {"reason", "TermNotFound"},
                   {"term", f.term}});
  }
  return out;
}

}  // namespace asg
