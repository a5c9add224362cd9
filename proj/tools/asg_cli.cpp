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

// asg: parse, align, loss-eval, check, demo, validate-ontology.
//
// Settings resolve as defaults < --config file < ASG_* environment < flags.
// Exit status: 0 success, 1 invalid input, 2 failed invariant check.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "asg/pipeline/checks.hpp"
#include "asg/pipeline/commands.hpp"
#include "asg/pipeline/synthetic.hpp"

#ifndef ASG_DATA_DIR
#define ASG_DATA_DIR "data"
#endif

namespace {

using asg::Error;
using asg::ErrorCode;
using asg::pipeline::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitCheck = 2;

struct Flags {
  std::optional<double> tau;
  std::optional<double> alpha;
  std::optional<std::string> strategy;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> projection_dim;
  std::vector<double> weights;
  std::string config;
  std::string output_dir;

  std::string ontology, lexicon, reports, detections, triplets, tags, pairs, embeddings, decoder;

  std::size_t identity_instances = 1000;
  std::size_t gradient_instances = 100;
  std::size_t box_cases = 10000;
};

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <typename T>
T parse_env_number(const std::string& name, const std::string& text) {
  try {
    std::size_t used = 0;
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
      value = static_cast<T>(std::stod(text, &used));
    } else {
      if (!text.empty() && text.front() == '-') throw std::invalid_argument("negative");
      value = static_cast<T>(std::stoull(text, &used));
    }
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, name + " is not a valid number: '" + text + "'",
                name);
  }
}

std::string data_dir() { return env("ASG_DATA_DIR").value_or(ASG_DATA_DIR); }

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg;
  cfg.ontology = (std::filesystem::path(data_dir()) / "ontology.json").string();
  cfg.lexicon = (std::filesystem::path(data_dir()) / "lexicon.json").string();

  const std::string config_path = !f.config.empty() ? f.config : env("ASG_CONFIG").value_or("");
  if (!config_path.empty()) {
    asg::pipeline::apply_config_json(cfg, asg::io::read_json_file(config_path));
  }

  if (auto v = env("ASG_TAU")) cfg.tau = parse_env_number<double>("ASG_TAU", *v);
  if (auto v = env("ASG_ALPHA")) cfg.alpha = parse_env_number<double>("ASG_ALPHA", *v);
  if (auto v = env("ASG_STRATEGY")) cfg.strategy = asg::pipeline::parse_strategy(*v);
  if (auto v = env("ASG_SEED")) cfg.seed = parse_env_number<std::uint64_t>("ASG_SEED", *v);
  if (auto v = env("ASG_OUTPUT_DIR")) cfg.output_dir = *v;

  if (f.tau) cfg.tau = *f.tau;
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.strategy) cfg.strategy = asg::pipeline::parse_strategy(*f.strategy);
  if (f.seed) cfg.seed = *f.seed;
  if (f.projection_dim) cfg.projection_dim = *f.projection_dim;
  if (!f.weights.empty()) cfg.weights = asg::pipeline::parse_weights(f.weights);
  if (!f.output_dir.empty()) cfg.output_dir = f.output_dir;

  const std::pair<const std::string*, std::string*> paths[] = {
      {&f.ontology, &cfg.ontology},     {&f.lexicon, &cfg.lexicon},
      {&f.reports, &cfg.reports},       {&f.detections, &cfg.detections},
      {&f.triplets, &cfg.triplets},     {&f.tags, &cfg.tags},
      {&f.pairs, &cfg.pairs},           {&f.embeddings, &cfg.embeddings},
      {&f.decoder, &cfg.decoder}};
  for (const auto& [flag, slot] : paths) {
    if (!flag->empty()) *slot = *flag;
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--tau", f.tau, "Softmax temperature (> 0)");
  cmd->add_option("--alpha", f.alpha, "Soft-label mixing weight in [0, 1]");
  cmd->add_option("--strategy", f.strategy, "One-to-many regions: merge or split");
  cmd->add_option("--seed", f.seed, "Seed for every random stream");
  cmd->add_option("--projection-dim", f.projection_dim, "Projection output width");
  cmd->add_option("--weights", f.weights, "Loss weights: ira arsa bce soft")->expected(4);
  cmd->add_option("--config", f.config, "JSON configuration file");
  cmd->add_option("-o,--out", f.output_dir, "Output directory");
  cmd->add_option("--ontology", f.ontology, "Ontology JSON");
}

void print_error(const std::string& code, const std::string& message, const std::string& subject) {
  nlohmann::json rec = {{"error", code}, {"message", message}};
  if (!subject.empty()) rec["subject"] = subject;
  std::cerr << rec.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anatomy-guided region-sentence alignment and loss toolkit", "asg"};
  app.require_subcommand(1);
  Flags f;

  auto* parse = app.add_subcommand("parse", "Extract triplets and tag vectors from reports");
  add_common(parse, f);
  parse->add_option("--reports", f.reports, "Reports JSONL");
  parse->add_option("--lexicon", f.lexicon, "Lexicon JSON");

  auto* align = app.add_subcommand("align", "Build region-sentence pairs");
  add_common(align, f);
  align->add_option("--triplets", f.triplets, "Triplets JSONL");
  align->add_option("--detections", f.detections, "Detections JSONL");

  auto* loss = app.add_subcommand("loss-eval", "Evaluate the four loss terms");
  add_common(loss, f);
  loss->add_option("--tags", f.tags, "Tag vectors JSONL");
  loss->add_option("--pairs", f.pairs, "Pairs JSONL");
  loss->add_option("--embeddings", f.embeddings, "Embedding bundle (JSONL file or .bin directory)");
  loss->add_option("--decoder", f.decoder, "Decoder parameters (.json or binary)");

  auto* check = app.add_subcommand("check", "Run the invariant and gradient-check suite");
  add_common(check, f);
  check->add_option("--identity-instances", f.identity_instances, "Instances per loss identity");
  check->add_option("--gradient-instances", f.gradient_instances, "Instances per gradient check");
  check->add_option("--box-cases", f.box_cases, "Random cases for box algebra");

  auto* demo = app.add_subcommand("demo", "Synthetic end-to-end run");
  add_common(demo, f);
  demo->add_option("--lexicon", f.lexicon, "Lexicon JSON");

  auto* validate = app.add_subcommand("validate-ontology", "Validate an ontology file");
  add_common(validate, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("InvalidArgument", e.what(), "");
    return kExitInput;
  }

  try {
    const RunConfig cfg = resolve_config(f);
    asg::pipeline::RunReport report;
    if (parse->parsed()) {
      report = asg::pipeline::run_parse(cfg);
    } else if (align->parsed()) {
      report = asg::pipeline::run_align(cfg);
    } else if (loss->parsed()) {
      report = asg::pipeline::run_loss_eval(cfg);
    } else if (check->parsed()) {
      report = asg::pipeline::run_check(
          cfg, {cfg.seed, f.identity_instances, f.gradient_instances, f.box_cases});
    } else if (demo->parsed()) {
      report = asg::pipeline::run_demo(cfg);
    } else {
      report = asg::pipeline::run_validate_ontology(cfg);
    }
    std::cout << report.to_json().dump(2) << "\n";
    return report.checks_passed() ? kExitOk : kExitCheck;
  } catch (const Error& e) {
    print_error(std::string(asg::error_code_name(e.code())), e.what(), e.subject());
    return kExitInput;
  } catch (const std::exception& e) {
    print_error("InvalidArgument", e.what(), "");
    return kExitInput;
  }
}
