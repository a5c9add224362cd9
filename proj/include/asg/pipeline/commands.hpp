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

// parse -> align -> loss-eval, as library calls and as file-level commands.
//
// File commands read inputs named in RunConfig, write fixed file names into
// RunConfig::output_dir and return a RunReport whose hash covers every file
// they wrote:
//   parse      triplets.jsonl, tags.jsonl, parse_diagnostics.jsonl
//   align      pairs.jsonl, pair_diagnostics.jsonl
//   loss-eval  loss.json

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/alignment_losses.hpp"
#include "asg/anatomy_ontology.hpp"
#include "asg/arsa_pairing.hpp"
#include "asg/io.hpp"
#include "asg/parallel.hpp"
#include "asg/pipeline/config.hpp"
#include "asg/pipeline/embeddings.hpp"
#include "asg/pipeline/run_report.hpp"
#include "asg/region_geometry.hpp"
#include "asg/report_parsing.hpp"
#include "asg/rng.hpp"
#include "asg/tag_decoder.hpp"

namespace asg::pipeline {

inline void require_path(const std::string& path, const char* what) {
  if (path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("no ") + what + " path given", what);
  }
}

// ---------------------------------------------------------------------------
// parse

struct ParsedReport {
  Report report;
  Extraction extraction;
  TagVector tags;
};

inline std::vector<ParsedReport> parse_reports(const std::vector<Report>& reports,
                                               const Lexicon& lexicon) {
  return parallel_map(reports.size(), [&](std::size_t i) {
    ParsedReport p{reports[i], extract_triplets(reports[i], lexicon), {}};
    p.tags = tags_from_triplets(p.extraction.triplets, lexicon.disease_classes());
    return p;
  });
}

inline std::string triplets_jsonl(const std::vector<ParsedReport>& parsed) {
  std::string out;
  for (const auto& p : parsed) {
    for (const auto& t : p.extraction.triplets) {
      auto rec = triplet_to_json(p.report.id, t);
      rec["sentence"] = p.report.sentences.at(t.source_sentence).text;
      out += io::to_jsonl_line(rec);
    }
  }
  return out;
}

inline std::string tags_jsonl(const std::vector<ParsedReport>& parsed) {
  std::string out;
  for (const auto& p : parsed) {
    out += io::to_jsonl_line({{"id", p.report.id}, {"tags", p.tags.bits()}});
  }
  return out;
}

// Writes triplets.jsonl, tags.jsonl and parse_diagnostics.jsonl.
RunReport run_parse(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// align

// Triplets of one report, with the sentences they reference.
struct TripletGroup {
  Report report;
  std::vector<Triplet> triplets;
};

// Groups triplet records by report id in order of first appearance. The
// "sentence" field of each record restores the referenced sentence text.
inline std::vector<TripletGroup> read_triplet_groups(std::istream& in) {
  std::vector<TripletGroup> groups;
  std::map<std::string, std::size_t> index;
  io::for_each_jsonl(in, [&](const nlohmann::json& rec, std::size_t line) {
    const auto id = io::field<std::string>(rec, "id", line);
    auto [it, inserted] = index.emplace(id, groups.size());
    if (inserted) groups.push_back({Report{id, {}, {}}, {}});
    TripletGroup& g = groups[it->second];
    Triplet t = triplet_from_json(rec, line);
    const auto text = io::field<std::string>(rec, "sentence", line);
    if (g.report.sentences.size() <= t.source_sentence) {
      g.report.sentences.resize(t.source_sentence + 1);
    }
    Sentence& s = g.report.sentences[t.source_sentence];
    s.index = t.source_sentence;
    s.text = text;
    g.triplets.push_back(std::move(t));
  });
  return groups;
}

struct AlignedReport {
  std::string id;
  PairingResult result;
};

inline std::vector<AlignedReport> align_groups(const std::vector<TripletGroup>& groups,
                                               const std::vector<ImageDetections>& detections,
                                               const Ontology& ontology,
                                               Scenario3Strategy strategy) {
  std::map<std::string, const ImageDetections*> by_id;
  for (const auto& d : detections) by_id.emplace(d.image_id, &d);
  return parallel_map(groups.size(), [&](std::size_t i) {
    const auto& g = groups[i];
    ImageDetections none;
    none.image_id = g.report.id;
    auto it = by_id.find(g.report.id);
    const ImageDetections& det = it == by_id.end() ? none : *it->second;
    return AlignedReport{g.report.id, build_pairs(g.report, g.triplets, det, ontology, strategy)};
  });
}

// Writes pairs.jsonl and pair_diagnostics.jsonl.
RunReport run_align(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// loss-eval

// One batch of N image-report pairs plus P region-sentence pairs, all rows in
// batch order.
struct LossInputs {
  std::vector<std::string> ids;
  std::vector<Matrix> tokens;  // per image, M_Z x d
  Matrix text;                 // N x d
  Matrix regions;              // P x d
  Matrix sentences;            // P x d
  std::vector<TagVector> tags;

  std::size_t dim() const { return text.cols(); }
};

struct ModelParams {
  ProjectionHead image;
  ProjectionHead text;
  ProjectionHead region;
  ProjectionHead sentence;
  DecoderParams decoder;
  QuerySet queries;

  // Draws, in order, from the parameter stream: image, text, region and
  // sentence heads, decoder parameters, queries.
  static ModelParams init(std::size_t d, std::size_t classes, std::uint64_t seed,
                          std::size_t projection_dim) {
    const std::size_t out = projection_dim == 0 ? (d + 1) / 2 : projection_dim;
    if (out > d) {
      throw Error(ErrorCode::kDimensionMismatch, "projection_dim exceeds the embedding width");
    }
    Rng rng(seed, Stream::kParameters);
    ModelParams m;
    m.image = ProjectionHead::random(d, d, out, rng);
    m.text = ProjectionHead::random(d, d, out, rng);
    m.region = ProjectionHead::random(d, d, out, rng);
    m.sentence = ProjectionHead::random(d, d, out, rng);
    m.decoder = DecoderParams::random(d, rng);
    m.queries = QuerySet{rng.normal_matrix(classes, d)};
    return m;
  }
};

struct LossEvaluation {
  LossBreakdown breakdown;
  std::vector<std::string> diagnostics;
};

inline LossEvaluation evaluate_losses(const LossInputs& in, const ModelParams& m,
                                      const RunConfig& cfg) {
  cfg.validate();
  const std::size_t n = in.ids.size();
  if (n == 0 || in.tokens.size() != n || in.text.rows() != n || in.tags.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "loss inputs disagree on the batch size");
  }
  LossEvaluation ev;

  Matrix pooled;
  for (const auto& z : in.tokens) pooled.append_row(average_pool(z));
  const EmbeddingBatch images = project(EmbeddingBatch(pooled, EmbeddingRole::kImage), m.image);
  const EmbeddingBatch texts = project(EmbeddingBatch(in.text, EmbeddingRole::kText), m.text);
  const double l_ira = ira_loss(images, texts, cfg.tau);

  double l_arsa = 0.0;
  if (in.regions.rows() == 0) {
    l_arsa = arsa_loss(in.regions, in.sentences, cfg.tau).value;
    ev.diagnostics.push_back("EmptyPairSet");
  } else {
    const auto r = project_forward(in.regions, m.region).output;
    const auto s = project_forward(in.sentences, m.sentence).output;
    const ArsaLoss a = arsa_loss(r, s, cfg.tau);
    l_arsa = a.value;
    if (a.diagnostic) ev.diagnostics.push_back(*a.diagnostic);
  }

  std::vector<std::vector<double>> probs;
  probs.reserve(n);
  for (const auto& z : in.tokens) probs.push_back(decode_tags(VisualTokens{z}, m.queries, m.decoder));
  const double l_bce = bce_batch_loss(probs, in.tags);

  const LabelMatrix target =
      mix_labels(hard_labels(n), soft_labels(in.tags, cfg.tau), cfg.alpha);
  const double l_soft = soft_loss(target, images, texts, cfg.tau);

  ev.breakdown = total_loss(l_ira, l_arsa, l_bce, l_soft, cfg.weights);
  return ev;
}

inline std::vector<std::pair<std::string, TagVector>> read_tags(std::istream& in) {
  std::vector<std::pair<std::string, TagVector>> out;
  io::for_each_jsonl(in, [&](const nlohmann::json& rec, std::size_t line) {
    out.emplace_back(io::field<std::string>(rec, "id", line),
                     TagVector(io::field<std::vector<std::uint8_t>>(rec, "tags", line)));
  });
  return out;
}

inline std::vector<RegionSentencePair> read_pairs(std::istream& in) {
  std::vector<RegionSentencePair> out;
  io::for_each_jsonl(in, [&](const nlohmann::json& rec, std::size_t line) {
    out.push_back(pair_from_json(rec, line));
  });
  return out;
}

inline LossInputs assemble_loss_inputs(const std::vector<std::pair<std::string, TagVector>>& tags,
                                       std::size_t pair_count, const EmbeddingBundle& bundle) {
  LossInputs in;
  for (const auto& [id, t] : tags) {
    auto z = bundle.tokens.find(id);
    auto x = bundle.text.find(id);
    if (z == bundle.tokens.end() || x == bundle.text.end()) {
      throw Error(ErrorCode::kMalformedRecord, "no token/text embeddings for '" + id + "'", id);
    }
    in.ids.push_back(id);
    in.tokens.push_back(z->second);
    in.text.append_row(x->second);
    in.tags.push_back(t);
  }
  for (std::size_t k = 0; k < pair_count; ++k) {
    auto r = bundle.region.find(k);
    auto s = bundle.sentence.find(k);
    if (r == bundle.region.end() || s == bundle.sentence.end()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "no region/sentence embeddings for pair " + std::to_string(k),
                  std::to_string(k));
    }
    in.regions.append_row(r->second);
    in.sentences.append_row(s->second);
  }
  const std::size_t d = in.dim();
  for (const auto& z : in.tokens) {
    if (z.cols() != d || z.rows() == 0) {
      throw Error(ErrorCode::kDimensionMismatch, "visual tokens must be non-empty with width d");
    }
  }
  if (pair_count > 0 && (in.regions.cols() != d || in.sentences.cols() != d)) {
    throw Error(ErrorCode::kDimensionMismatch, "region/sentence embeddings must have width d");
  }
  return in;
}

// Embeddings come from a JSONL bundle or a directory of .bin matrices. A
// decoder file, when given, replaces the seeded decoder and queries.
RunReport run_loss_eval(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// validate-ontology

// Loads and validates the ontology, then writes its canonical form.
RunReport run_validate_ontology(const RunConfig& cfg);

}  // namespace asg::pipeline
