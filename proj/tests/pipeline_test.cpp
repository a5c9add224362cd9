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

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "asg/pipeline/checks.hpp"
#include "asg/pipeline/commands.hpp"
#include "asg/pipeline/synthetic.hpp"
#include "test_support.hpp"

namespace asg::pipeline {
namespace {

using testing::data_path;
using testing::temp_dir;
using testing::to_bits;
using testing::to_oracle;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig sample_config(const std::string& name) {
  RunConfig cfg;
  cfg.ontology = data_path("ontology.json");
  cfg.lexicon = data_path("lexicon.json");
  cfg.reports = data_path("sample/reports.jsonl");
  cfg.detections = data_path("sample/detections.jsonl");
  cfg.output_dir = temp_dir(name).string();
  return cfg;
}

TEST(Config, JsonOverlay) {
  RunConfig cfg;
  apply_config_json(cfg, nlohmann::json::parse(R"({"tau": 0.2, "alpha": 0.25,
      "strategy": "split", "seed": 9, "loss_weights": [1, 0.5, 2, 0],
      "paths": {"lexicon": "lex.json", "output_dir": "out"}})"));
  EXPECT_EQ(cfg.tau, 0.2);
  EXPECT_EQ(cfg.alpha, 0.25);
  EXPECT_EQ(cfg.strategy, Scenario3Strategy::kSplitSentence);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.weights.arsa, 0.5);
  EXPECT_EQ(cfg.weights.soft, 0.0);
  EXPECT_EQ(cfg.lexicon, "lex.json");
  EXPECT_EQ(cfg.output_dir, "out");
  EXPECT_TRUE(cfg.ontology.empty());

  RunConfig untouched;
  apply_config_json(untouched, nlohmann::json::object());
  EXPECT_EQ(untouched.tau, kDefaultTemperature);
  EXPECT_EQ(untouched.alpha, kDefaultAlpha);
}

TEST(Config, Rejections) {
  RunConfig cfg;
  EXPECT_THROW(apply_config_json(cfg, nlohmann::json::parse(R"({"tau": "hot"})")), Error);
  try {
    parse_strategy("average");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  EXPECT_THROW(parse_weights({1, 2, 3}), Error);
  cfg = RunConfig{};
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.alpha = 1.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlphaOutOfRange);
  }
  cfg = RunConfig{};
  cfg.weights.bce = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Config, SummaryOmitsPaths) {
  RunConfig a, b;
  b.output_dir = "/elsewhere";
  b.lexicon = "x.json";
  EXPECT_EQ(config_summary(a), config_summary(b));
  b.seed = 1;
  EXPECT_NE(config_summary(a), config_summary(b));
}

TEST(Embeddings, JsonlRoundTrip) {
  Rng rng(1, Stream::kEmbeddings);
  EmbeddingBundle b;
  const std::vector<std::string> ids = {"b", "a"};
  for (const auto& id : ids) {
    b.tokens[id] = rng.normal_matrix(3, 4);
    b.text[id] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  }
  b.region[0] = {1, 2, 3, 4};
  b.sentence[0] = {4, 3, 2, 1};
  std::istringstream in(write_bundle_jsonl(b, ids));
  const auto r = read_bundle_jsonl(in);
  EXPECT_EQ(r.tokens, b.tokens);
  EXPECT_EQ(r.text, b.text);
  EXPECT_EQ(r.region, b.region);
  EXPECT_EQ(r.sentence, b.sentence);

  std::istringstream bad("{\"role\": \"audio\", \"id\": \"a\"}\n");
  EXPECT_THROW(read_bundle_jsonl(bad), Error);
}

TEST(Embeddings, BinaryDirectory) {
  const auto dir = temp_dir("bundle_dir");
  Rng rng(2, Stream::kEmbeddings);
  const Matrix tokens = rng.normal_matrix(6, 3);  // two images, three tokens each
  const Matrix text = rng.normal_matrix(2, 3);
  io::write_matrix_bin(dir / "tokens.bin", tokens);
  io::write_matrix_bin(dir / "text.bin", text);
  const auto b = read_bundle_dir(dir, {"x", "y"});
  EXPECT_EQ(b.tokens.at("y")(0, 1), tokens(3, 1));
  EXPECT_EQ(b.text.at("x")[2], text(0, 2));
  EXPECT_TRUE(b.region.empty());
  EXPECT_THROW(read_bundle_dir(dir, {"x", "y", "z"}), Error);
}

TEST(Commands, ParseSample) {
  const RunConfig cfg = sample_config("parse_sample");
  const RunReport r = run_parse(cfg);
  EXPECT_EQ(r.counts.at("reports"), 3);
  const auto dir = std::filesystem::path(cfg.output_dir);
  std::istringstream tags_in(slurp(dir / "tags.jsonl"));
  const auto tags = read_tags(tags_in);
  ASSERT_EQ(tags.size(), 3u);
  EXPECT_EQ(tags[0].first, "study-001");
  EXPECT_TRUE(tags[0].second.any());
  EXPECT_EQ(tags[2].first, "study-003");
  EXPECT_FALSE(tags[2].second.any());
  EXPECT_EQ(tags[2].second.size(), testing::shipped_lexicon().class_count());
  EXPECT_TRUE(std::filesystem::exists(dir / "run_report.json"));
  EXPECT_FALSE(r.content_hash.empty());
}

std::vector<AlignedReport> align_sample(Scenario3Strategy strategy, const std::string& name) {
  RunConfig cfg = sample_config(name);
  run_parse(cfg);
  std::ifstream trip(std::filesystem::path(cfg.output_dir) / "triplets.jsonl");
  std::ifstream det(cfg.detections);
  const auto& ontology = testing::shipped_ontology();
  return align_groups(read_triplet_groups(trip), ingest_detections(det, ontology), ontology,
                      strategy);
}

std::map<PairStrategy, std::size_t> strategy_counts(const std::vector<AlignedReport>& aligned) {
  std::map<PairStrategy, std::size_t> n;
  for (const auto& a : aligned) {
    for (const auto& p : a.result.pairs) ++n[p.strategy];
  }
  return n;
}

TEST(Commands, AlignSampleMerge) {
  const auto aligned = align_sample(Scenario3Strategy::kMergeBBox, "align_merge");
  ASSERT_EQ(aligned.front().id, "study-001");
  const auto n = strategy_counts(aligned);
  EXPECT_EQ(n.at(PairStrategy::kDirect), 4u);
  EXPECT_EQ(n.at(PairStrategy::kMergedBoxes), 2u);
  EXPECT_EQ(n.count(PairStrategy::kSplitSentence), 0u);
  for (const auto& a : aligned) {
    const auto& d = a.result.diagnostics;
    EXPECT_EQ(d.triplets, d.direct + d.merged + d.split_triplets + d.skipped.size());
    EXPECT_EQ(a.result.pairs.size(), d.direct + d.merged + d.split_pairs - d.duplicates_dropped);
  }
}

TEST(Commands, AlignSampleSplit) {
  const auto aligned = align_sample(Scenario3Strategy::kSplitSentence, "align_split");
  const auto n = strategy_counts(aligned);
  EXPECT_EQ(n.at(PairStrategy::kDirect), 4u);
  EXPECT_EQ(n.at(PairStrategy::kMergedBoxes), 1u);
  EXPECT_EQ(n.at(PairStrategy::kSplitSentence), 2u);
  // "No pneumothorax." names no side, so it keeps the merged crop.
  ASSERT_EQ(aligned[1].result.diagnostics.fallbacks.size(), 1u);
  EXPECT_EQ(aligned[1].result.diagnostics.fallbacks[0].term, "pleural unspec");
}

TEST(Commands, MissingImageSkipsEveryMappedTriplet) {
  const auto& ontology = testing::shipped_ontology();
  const Report report = make_report("lonely", "Opacity projects over the right hilar.");
  const auto ex = extract_triplets(report, testing::shipped_lexicon());
  ASSERT_EQ(ex.triplets.size(), 1u);
  const auto aligned =
      align_groups({{report, ex.triplets}}, {}, ontology, Scenario3Strategy::kMergeBBox);
  ASSERT_EQ(aligned.size(), 1u);
  EXPECT_TRUE(aligned[0].result.pairs.empty());
  ASSERT_EQ(aligned[0].result.diagnostics.skipped.size(), 1u);
  EXPECT_EQ(aligned[0].result.diagnostics.skipped[0].reason, SkipReason::kBoxMissing);
}

TEST(Commands, MissingInputPathIsRejected) {
  RunConfig cfg = sample_config("missing_path");
  cfg.reports.clear();
  try {
    run_parse(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  cfg = sample_config("missing_file");
  cfg.lexicon = cfg.output_dir + "/absent.json";
  try {
    run_parse(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFileNotFound);
  }
}

TEST(Commands, ValidateOntologyWritesCanonicalFile) {
  RunConfig cfg = sample_config("validate");
  const RunReport r = run_validate_ontology(cfg);
  EXPECT_EQ(r.counts.at("c_ana"), 50);
  EXPECT_EQ(r.counts.at("c_pre"), 29);
  EXPECT_EQ(slurp(std::filesystem::path(cfg.output_dir) / "ontology.json"),
            slurp(data_path("ontology.json")));
}

// ---------------------------------------------------------------------------
// Loss evaluation against the naive reference.

LossInputs random_inputs(Rng& rng, std::size_t n, std::size_t pairs, std::size_t d,
                         std::size_t classes) {
  LossInputs in;
  for (std::size_t i = 0; i < n; ++i) {
    in.ids.push_back("img" + std::to_string(i));
    in.tokens.push_back(rng.normal_matrix(3, d));
  }
  in.text = rng.normal_matrix(n, d);
  in.regions = rng.normal_matrix(pairs, d);
  in.sentences = rng.normal_matrix(pairs, d);
  in.tags = random_tags(rng, n, classes);
  return in;
}

oracle::Mat oracle_project(const Matrix& x, const ProjectionHead& h) {
  return oracle::project(to_oracle(x), to_oracle(h.w1), h.b1, to_oracle(h.w2), h.b2);
}

LossBreakdown oracle_losses(const LossInputs& in, const ModelParams& m, const RunConfig& cfg) {
  oracle::Mat pooled;
  for (const auto& z : in.tokens) {
    oracle::Vec mean(z.cols(), 0.0);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      for (std::size_t c = 0; c < z.cols(); ++c) mean[c] += z(r, c) / static_cast<double>(z.rows());
    }
    pooled.push_back(mean);
  }
  Matrix pooled_m;
  for (const auto& row : pooled) pooled_m.append_row(row);
  const auto img = oracle_project(pooled_m, m.image);
  const auto txt = oracle_project(in.text, m.text);
  LossBreakdown b;
  b.l_ira = oracle::symmetric_infonce(img, txt, cfg.tau);
  if (in.regions.rows() > 0) {
    b.l_arsa = oracle::symmetric_infonce(oracle_project(in.regions, m.region),
                                         oracle_project(in.sentences, m.sentence), cfg.tau);
  }
  double bce = 0;
  for (std::size_t i = 0; i < in.tokens.size(); ++i) {
    const auto o = oracle::decode(to_oracle(in.tokens[i]), to_oracle(m.queries.q),
                                  to_oracle(m.decoder.wq), to_oracle(m.decoder.wk),
                                  to_oracle(m.decoder.wv), m.decoder.w_out, m.decoder.b_out);
    bce += oracle::bce(o.probs, in.tags[i].bits());
  }
  b.l_bce = bce / static_cast<double>(in.tokens.size());
  const auto target = oracle::mix(oracle::soft_labels(to_bits(in.tags), cfg.tau), cfg.alpha);
  b.l_soft = oracle::symmetric_kl(target, img, txt, cfg.tau);
  b.total = cfg.weights.ira * b.l_ira + cfg.weights.arsa * b.l_arsa + cfg.weights.bce * b.l_bce +
            cfg.weights.soft * b.l_soft;
  return b;
}

TEST(LossEval, MatchesReferenceOnSeededBatch) {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    Rng rng(seed, Stream::kEmbeddings);
    const LossInputs in = random_inputs(rng, 4, 5, 8, 6);
    RunConfig cfg;
    cfg.seed = seed;
    cfg.tau = 0.3;
    cfg.weights = {1.0, 0.5, 2.0, 0.25};
    const ModelParams m = ModelParams::init(in.dim(), 6, seed, 0);
    const auto ev = evaluate_losses(in, m, cfg).breakdown;
    const auto ref = oracle_losses(in, m, cfg);
    EXPECT_NEAR(ev.l_ira, ref.l_ira, 1e-12);
    EXPECT_NEAR(ev.l_arsa, ref.l_arsa, 1e-12);
    EXPECT_NEAR(ev.l_bce, ref.l_bce, 1e-12);
    EXPECT_NEAR(ev.l_soft, ref.l_soft, 1e-12);
    EXPECT_NEAR(ev.total, ref.total, 1e-12);
  }
}

TEST(LossEval, AlphaZeroMakesSoftEqualIra) {
  Rng rng(3, Stream::kEmbeddings);
  const LossInputs in = random_inputs(rng, 5, 2, 6, 4);
  RunConfig cfg;
  cfg.alpha = 0.0;
  const auto ev = evaluate_losses(in, ModelParams::init(6, 4, 0, 0), cfg).breakdown;
  EXPECT_NEAR(ev.l_soft, ev.l_ira, 1e-12);
}

TEST(LossEval, SingleItemBatch) {
  Rng rng(4, Stream::kEmbeddings);
  const LossInputs in = random_inputs(rng, 1, 1, 6, 4);
  const auto ev = evaluate_losses(in, ModelParams::init(6, 4, 0, 0), RunConfig{});
  EXPECT_NEAR(ev.breakdown.l_ira, 0.0, 1e-12);
  EXPECT_NEAR(ev.breakdown.l_arsa, 0.0, 1e-12);
  EXPECT_TRUE(ev.diagnostics.empty());
}

TEST(LossEval, EmptyPairSetIsReported) {
  Rng rng(5, Stream::kEmbeddings);
  const LossInputs in = random_inputs(rng, 3, 0, 6, 4);
  const auto ev = evaluate_losses(in, ModelParams::init(6, 4, 0, 0), RunConfig{});
  EXPECT_EQ(ev.breakdown.l_arsa, 0.0);
  ASSERT_EQ(ev.diagnostics.size(), 1u);
  EXPECT_EQ(ev.diagnostics[0], "EmptyPairSet");
}

TEST(LossEval, AssemblyErrors) {
  EmbeddingBundle b;
  b.tokens["a"] = Matrix(2, 3, 1.0);
  b.text["a"] = {1, 2, 3};
  const std::vector<std::pair<std::string, TagVector>> tags = {{"a", TagVector(2)}};
  EXPECT_NO_THROW(assemble_loss_inputs(tags, 0, b));
  try {
    assemble_loss_inputs(tags, 1, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
  }
  b.region[0] = {1, 2};
  b.sentence[0] = {1, 2};
  try {
    assemble_loss_inputs(tags, 1, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    assemble_loss_inputs({{"missing", TagVector(2)}}, 0, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRecord);
  }
}

TEST(LossEval, ModelInitIsSeeded) {
  const auto a = ModelParams::init(6, 3, 7, 0);
  const auto b = ModelParams::init(6, 3, 7, 0);
  const auto c = ModelParams::init(6, 3, 8, 0);
  EXPECT_EQ(a.image.w1, b.image.w1);
  EXPECT_EQ(a.queries.q, b.queries.q);
  EXPECT_NE(a.image.w1, c.image.w1);
  EXPECT_EQ(a.image.output_dim(), 3u);
  EXPECT_EQ(ModelParams::init(6, 3, 7, 2).text.output_dim(), 2u);
  EXPECT_THROW(ModelParams::init(6, 3, 7, 7), Error);
}

// ---------------------------------------------------------------------------
// Demo and checks.

TEST(Demo, DeterministicAcrossRunsAndDirectories) {
  RunConfig a = sample_config("demo_a");
  RunConfig b = sample_config("demo_b");
  const RunReport ra = run_demo(a);
  const RunReport rb = run_demo(b);
  EXPECT_EQ(ra.content_hash, rb.content_hash);
  EXPECT_EQ(ra.outputs, rb.outputs);
  for (const auto& [name, hash] : ra.outputs) {
    EXPECT_EQ(slurp(std::filesystem::path(a.output_dir) / name),
              slurp(std::filesystem::path(b.output_dir) / name))
        << name;
  }
  EXPECT_EQ(slurp(std::filesystem::path(a.output_dir) / "run_report.json"),
            slurp(std::filesystem::path(b.output_dir) / "run_report.json"));
  EXPECT_LE(ra.counts.at("pair_total").get<std::size_t>(), 100u);
  EXPECT_GT(ra.counts.at("pair_total").get<std::size_t>(), 0u);
  ASSERT_TRUE(ra.loss.has_value());
  EXPECT_TRUE(std::isfinite(ra.loss->total));

  RunConfig c = sample_config("demo_c");
  c.seed = 1;
  EXPECT_NE(run_demo(c).content_hash, ra.content_hash);
}

TEST(Checks, SmallSuitePasses) {
  CheckOptions o;
  o.identity_instances = 40;
  o.gradient_instances = 3;
  o.box_cases = 200;
  const auto results = run_invariant_suite(o);
  EXPECT_EQ(results.size(), 12u);
  for (const auto& c : results) {
    EXPECT_TRUE(c.passed) << c.name << " max_error " << c.max_error;
  }
}

TEST(Parallel, ResultsInIndexOrder) {
  const auto out = parallel_map(1000, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i], i * i);
  EXPECT_TRUE(parallel_map(0, [](std::size_t i) { return i; }).empty());
}

TEST(Parallel, LowestFailingIndexWins) {
  std::atomic<int> calls{0};
  try {
    parallel_map(64, [&](std::size_t i) -> int {
      ++calls;
      if (i == 7 || i == 40) throw std::runtime_error(std::to_string(i));
      return 0;
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
  EXPECT_EQ(calls.load(), 64);
}

}  // namespace
}  // namespace asg::pipeline
