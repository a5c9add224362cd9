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


#include "asg/pipeline/synthetic.hpp"

namespace asg::pipeline {

RunReport run_demo(const RunConfig& cfg, const SyntheticOptions& o) {
  cfg.validate();
  require_path(cfg.ontology, "ontology");
  require_path(cfg.lexicon, "lexicon");
  const Ontology ontology = Ontology::load(cfg.ontology);
  const Lexicon lexicon = Lexicon::load(cfg.lexicon, ontology);
  OutputSet out(cfg.output_dir);

  out.write("reports.jsonl", records_to_jsonl(synthetic_reports(cfg.seed, o)));
  std::istringstream reports_in(out.content("reports.jsonl"));
  const auto parsed = parse_reports(read_reports(reports_in), lexicon);
  std::vector<std::string> ids;
  for (const auto& p : parsed) ids.push_back(p.report.id);

  std::string parse_diag;
  for (const auto& p : parsed) {
    for (const auto& d : p.extraction.diagnostics) {
      parse_diag += io::to_jsonl_line({{"id", p.report.id},
                                       {"sentence_index", d.sentence_index},
                                       {"finding", d.finding.str()},
                                       {"reason", d.reason}});
    }
  }
  out.write("triplets.jsonl", triplets_jsonl(parsed));
  out.write("tags.jsonl", tags_jsonl(parsed));
  out.write("parse_diagnostics.jsonl", parse_diag);

  out.write("detections.jsonl", records_to_jsonl(synthetic_detections(cfg.seed, ids, o)));
  std::istringstream det_in(out.content("detections.jsonl"));
  const auto detections = ingest_detections(det_in, ontology);
  std::istringstream trip_in(out.content("triplets.jsonl"));
  const auto aligned = align_groups(read_triplet_groups(trip_in), detections, ontology, cfg.strategy);

  std::string pairs, pair_diag;
  std::size_t pair_count = 0, triplets = 0, skipped = 0, fallbacks = 0;
  std::map<std::string, std::size_t> by_strategy = {
      {"direct", 0}, {"merged_boxes", 0}, {"split_sentence", 0}};
  for (const auto& a : aligned) {
    for (const auto& p : a.result.pairs) {
      ++pair_count;
      ++by_strategy[std::string(pair_strategy_name(p.strategy))];
      pairs += io::to_jsonl_line(pair_to_json(p));
    }
    for (const auto& rec : diagnostics_to_jsonl(a.id, a.result.diagnostics)) {
      pair_diag += io::to_jsonl_line(rec);
    }
    triplets += a.result.diagnostics.triplets;
    skipped += a.result.diagnostics.skipped.size();
    fallbacks += a.result.diagnostics.fallbacks.size();
  }
  out.write("pairs.jsonl", pairs);
  out.write("pair_diagnostics.jsonl", pair_diag);

  out.write("embeddings.jsonl",
            write_bundle_jsonl(synthetic_embeddings(cfg.seed, ids, pair_count, o), ids));
  std::istringstream tags_in(out.content("tags.jsonl"));
  std::istringstream emb_in(out.content("embeddings.jsonl"));
  const LossInputs inputs =
      assemble_loss_inputs(read_tags(tags_in), pair_count, read_bundle_jsonl(emb_in));
  const ModelParams model =
      ModelParams::init(inputs.dim(), lexicon.class_count(), cfg.seed, cfg.projection_dim);
  const LossEvaluation ev = evaluate_losses(inputs, model, cfg);
  out.write("loss.json", loss_to_json(ev.breakdown).dump(2) + "\n");

  RunReport report;
  report.command = "demo";
  report.config = config_summary(cfg);
  report.counts = {{"reports", parsed.size()},
                   {"triplets", triplets},
                   {"pairs", by_strategy},
                   {"pair_total", pair_count}};
  report.diagnostics = {{"skipped_triplets", skipped},
                        {"split_fallbacks", fallbacks},
                        {"loss", ev.diagnostics}};
  report.loss = ev.breakdown;
  out.finalize(report);
  out.write_report(report);
  return report;
}

}  // namespace asg::pipeline
