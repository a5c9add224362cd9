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


#include "asg/pipeline/commands.hpp"

namespace asg::pipeline {

RunReport run_parse(const RunConfig& cfg) {
  require_path(cfg.ontology, "ontology");
  require_path(cfg.lexicon, "lexicon");
  require_path(cfg.reports, "reports");
  const Ontology ontology = Ontology::load(cfg.ontology);
  const Lexicon lexicon = Lexicon::load(cfg.lexicon, ontology);
  auto in = io::open_input(cfg.reports);
  const auto parsed = parse_reports(read_reports(in), lexicon);

  std::string diagnostics;
  std::size_t sentences = 0, triplets = 0, diag_count = 0;
  for (const auto& p : parsed) {
    sentences += p.report.sentences.size();
    triplets += p.extraction.triplets.size();
    for (const auto& d : p.extraction.diagnostics) {
      ++diag_count;
      diagnostics += io::to_jsonl_line({{"id", p.report.id},
                                        {"sentence_index", d.sentence_index},
                                        {"finding", d.finding.str()},
                                        {"reason", d.reason}});
    }
  }

  RunReport report;
  report.command = "parse";
  report.config = config_summary(cfg);
  report.counts = {{"reports", parsed.size()}, {"sentences", sentences}, {"triplets", triplets}};
  report.diagnostics = {{"findings_without_region", diag_count}};
  OutputSet out(cfg.output_dir);
  out.write("triplets.jsonl", triplets_jsonl(parsed));
  out.write("tags.jsonl", tags_jsonl(parsed));
  out.write("parse_diagnostics.jsonl", diagnostics);
  out.finalize(report);
  out.write_report(report);
  return report;
}

RunReport run_align(const RunConfig& cfg) {
  require_path(cfg.ontology, "ontology");
  require_path(cfg.triplets, "triplets");
  require_path(cfg.detections, "detections");
  const Ontology ontology = Ontology::load(cfg.ontology);
  auto tin = io::open_input(cfg.triplets);
  const auto groups = read_triplet_groups(tin);
  auto din = io::open_input(cfg.detections);
  const auto detections = ingest_detections(din, ontology);
  const auto aligned = align_groups(groups, detections, ontology, cfg.strategy);

  std::string pairs, diagnostics;
  std::map<std::string, std::size_t> by_strategy = {
      {"direct", 0}, {"merged_boxes", 0}, {"split_sentence", 0}};
  std::size_t triplets = 0, unmapped = 0, missing = 0, fallbacks = 0, dups = 0;
  for (const auto& a : aligned) {
    for (const auto& p : a.result.pairs) {
      ++by_strategy[std::string(pair_strategy_name(p.strategy))];
      pairs += io::to_jsonl_line(pair_to_json(p));
    }
    for (const auto& rec : diagnostics_to_jsonl(a.id, a.result.diagnostics)) {
      diagnostics += io::to_jsonl_line(rec);
    }
    const auto& d = a.result.diagnostics;
    triplets += d.triplets;
    fallbacks += d.fallbacks.size();
    dups += d.duplicates_dropped;
    for (const auto& s : d.skipped) ++(s.reason == SkipReason::kUnmapped ? unmapped : missing);
  }

  RunReport report;
  report.command = "align";
  report.config = config_summary(cfg);
  report.counts = by_strategy;
  report.diagnostics = {{"triplets", triplets},
                        {"skipped_unmapped", unmapped},
                        {"skipped_box_missing", missing},
                        {"split_fallbacks", fallbacks},
                        {"duplicates_dropped", dups}};
  OutputSet out(cfg.output_dir);
  out.write("pairs.jsonl", pairs);
  out.write("pair_diagnostics.jsonl", diagnostics);
  out.finalize(report);
  out.write_report(report);
  return report;
}

RunReport run_loss_eval(const RunConfig& cfg) {
  cfg.validate();
  require_path(cfg.tags, "tags");
  require_path(cfg.pairs, "pairs");
  require_path(cfg.embeddings, "embeddings");
  auto tin = io::open_input(cfg.tags);
  const auto tags = read_tags(tin);
  auto pin = io::open_input(cfg.pairs);
  const auto pairs = read_pairs(pin);

  std::vector<std::string> ids;
  for (const auto& [id, t] : tags) ids.push_back(id);
  EmbeddingBundle bundle;
  if (std::filesystem::is_directory(cfg.embeddings)) {
    bundle = read_bundle_dir(cfg.embeddings, ids);
  } else {
    auto ein = io::open_input(cfg.embeddings);
    bundle = read_bundle_jsonl(ein);
  }
  const LossInputs inputs = assemble_loss_inputs(tags, pairs.size(), bundle);

  const std::size_t classes = tags.empty() ? 0 : tags.front().second.size();
  ModelParams model = ModelParams::init(inputs.dim(), classes, cfg.seed, cfg.projection_dim);
  if (!cfg.decoder.empty()) {
    std::pair<DecoderParams, QuerySet> loaded;
    if (cfg.decoder.ends_with(".json")) {
      loaded = decoder_from_json(io::read_json_file(cfg.decoder));
    } else {
      auto din = io::open_input(cfg.decoder, std::ios::in | std::ios::binary);
      loaded = read_decoder_bin(din);
    }
    model.decoder = std::move(loaded.first);
    model.queries = std::move(loaded.second);
  }
  const LossEvaluation ev = evaluate_losses(inputs, model, cfg);

  std::map<std::string, std::size_t> by_strategy = {
      {"direct", 0}, {"merged_boxes", 0}, {"split_sentence", 0}};
  for (const auto& p : pairs) ++by_strategy[std::string(pair_strategy_name(p.strategy))];

  RunReport report;
  report.command = "loss-eval";
  report.config = config_summary(cfg);
  report.counts = {{"batch", inputs.ids.size()}, {"pairs", by_strategy}};
  report.diagnostics = {{"loss", ev.diagnostics}};
  report.loss = ev.breakdown;
  OutputSet out(cfg.output_dir);
  out.write("loss.json", loss_to_json(ev.breakdown).dump(2) + "\n");
  out.finalize(report);
  out.write_report(report);
  return report;
}

RunReport run_validate_ontology(const RunConfig& cfg) {
  require_path(cfg.ontology, "ontology");
  const Ontology ontology = Ontology::load(cfg.ontology);
  std::map<std::string, std::size_t> kinds = {{"containment", 0}, {"exact", 0}, {"one_to_many", 0}};
  for (const auto& [source, r] : ontology.rules()) ++kinds[std::string(mapping_kind_name(r.kind))];
  std::size_t unmapped = 0;
  for (const auto& region : ontology.c_ana()) {
    unmapped += std::holds_alternative<Unmapped>(ontology.resolve(region)) ? 1 : 0;
  }

  RunReport report;
  report.command = "validate-ontology";
  report.config = config_summary(cfg);
  report.counts = {{"c_ana", ontology.c_ana().size()},
                   {"c_pre", ontology.c_pre().size()},
                   {"rules", kinds},
                   {"unmapped_regions", unmapped}};
  OutputSet out(cfg.output_dir);
  out.write("ontology.json", ontology.serialize());
  out.finalize(report);
  out.write_report(report);
  return report;
}

}  // namespace asg::pipeline
