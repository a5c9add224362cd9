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

// Report-side anatomical vocabulary (C_ana), detector-side class set (C_pre)
// and the curated rules linking them.
//
// Each C_ana term has at most one rule. A rule is one of
//   exact        the two vocabularies name the same region
//   containment  the detector class encloses the report region
//   one_to_many  the report region spans several detector classes; each
//                target carries a sub-region phrase used when a sentence is
//                split into one variant per target
// Terms without a rule resolve to Unmapped.

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/error.hpp"
#include "asg/strong_string.hpp"

namespace asg {

enum class MappingKind { kExact, kContainment, kOneToMany };

inline std::string_view mapping_kind_name(MappingKind kind) {
  switch (kind) {
    case MappingKind::kExact: return "exact";
    case MappingKind::kContainment: return "containment";
    case MappingKind::kOneToMany: return "one_to_many";
  }
  return "";
}

struct MappingRule {
  AnaRegion source;
  MappingKind kind = MappingKind::kExact;
  std::vector<DetectorClass> targets;
  std::vector<std::string> subregion_terms;  // one per target, one_to_many only
};

// Resolution outcomes.
struct ExactMatch {
  DetectorClass target;
  friend bool operator==(const ExactMatch&, const ExactMatch&) = default;
};
struct ContainedIn {
  DetectorClass target;
  friend bool operator==(const ContainedIn&, const ContainedIn&) = default;
};
struct OneToMany {
  std::vector<DetectorClass> targets;
  std::vector<std::string> subregion_terms;
  friend bool operator==(const OneToMany&, const OneToMany&) = default;
};
struct Unmapped {
  friend bool operator==(const Unmapped&, const Unmapped&) = default;
};

using MappingResolution = std::variant<ExactMatch, ContainedIn, OneToMany, Unmapped>;

struct OntologyShape {
  std::size_t ana_terms = 50;
  std::size_t detector_classes = 29;
};

class Ontology {
 public:
  // Validates every structural invariant; throws asg::Error naming the
  // offending term on the first violation found.
  static Ontology from_json(const nlohmann::json& doc, OntologyShape shape = {}) {
    Ontology o;
    if (!doc.is_object()) {
      throw Error(ErrorCode::kMalformedJson, "ontology document must be an object");
    }
    for (const char* key : {"c_ana", "c_pre", "rules"}) {
      if (!doc.contains(key) || !doc.at(key).is_array()) {
        throw Error(ErrorCode::kMalformedJson,
                    std::string("missing array section '") + key + "'", key);
      }
    }
    for (const auto& t : doc.at("c_ana")) {
      AnaRegion term(t.get<std::string>());
      if (!o.c_ana_.insert(term).second) {
        throw Error(ErrorCode::kDuplicateTerm, "c_ana lists '" + term.str() + "' twice",
                    term.str());
      }
    }
    for (const auto& t : doc.at("c_pre")) {
      DetectorClass term(t.get<std::string>());
      if (!o.c_pre_.insert(term).second) {
        throw Error(ErrorCode::kDuplicateTerm, "c_pre lists '" + term.str() + "' twice",
                    term.str());
      }
    }
    if (o.c_ana_.size() != shape.ana_terms) {
      throw Error(ErrorCode::kSizeMismatch,
                  "c_ana has " + std::to_string(o.c_ana_.size()) + " terms, expected " +
                      std::to_string(shape.ana_terms),
                  "c_ana");
    }
    if (o.c_pre_.size() != shape.detector_classes) {
      throw Error(ErrorCode::kSizeMismatch,
                  "c_pre has " + std::to_string(o.c_pre_.size()) + " classes, expected " +
                      std::to_string(shape.detector_classes),
                  "c_pre");
    }
    for (const auto& r : doc.at("rules")) o.add_rule(parse_rule(r));
    return o;
  }

  static Ontology load(const std::string& path, OntologyShape shape = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path, path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedJson, path + ": " + e.what(), path);
    }
    return from_json(doc, shape);
  }

  const std::set<AnaRegion>& c_ana() const noexcept { return c_ana_; }
  const std::set<DetectorClass>& c_pre() const noexcept { return c_pre_; }
  const std::map<AnaRegion, MappingRule>& rules() const noexcept { return rules_; }

  bool has_region(const AnaRegion& r) const { return c_ana_.contains(r); }
  bool has_class(const DetectorClass& c) const { return c_pre_.contains(c); }

  MappingResolution resolve(const AnaRegion& region) const {
    auto it = rules_.find(region);
    if (it == rules_.end()) return Unmapped{};
    const MappingRule& rule = it->second;
    switch (rule.kind) {
      case MappingKind::kExact: return ExactMatch{rule.targets.front()};
      case MappingKind::kContainment: return ContainedIn{rule.targets.front()};
      case MappingKind::kOneToMany: return OneToMany{rule.targets, rule.subregion_terms};
    }
    return Unmapped{};
  }

  // Canonical form: sets sorted, rules sorted by source, object keys sorted.
  nlohmann::json to_json() const {
    nlohmann::json doc;
    doc["c_ana"] = nlohmann::json::array();
    for (const auto& t : c_ana_) doc["c_ana"].push_back(t.str());
    doc["c_pre"] = nlohmann::json::array();
    for (const auto& t : c_pre_) doc["c_pre"].push_back(t.str());
    doc["rules"] = nlohmann::json::array();
    for (const auto& [source, rule] : rules_) {
      nlohmann::json r;
      r["source"] = source.str();
      r["kind"] = std::string(mapping_kind_name(rule.kind));
      r["targets"] = nlohmann::json::array();
      for (const auto& t : rule.targets) r["targets"].push_back(t.str());
      if (rule.kind == MappingKind::kOneToMany) r["subregion_terms"] = rule.subregion_terms;
      doc["rules"].push_back(std::move(r));
    }
    return doc;
  }

  std::string serialize() const { return to_json().dump(2) + "\n"; }

 private:
  static MappingRule parse_rule(const nlohmann::json& r) {
    if (!r.is_object() || !r.contains("source") || !r.contains("kind") ||
        !r.contains("targets") || !r.at("targets").is_array()) {
      throw Error(ErrorCode::kInvalidRule, "rule needs source, kind and targets: " + r.dump());
    }
    MappingRule rule;
    rule.source = AnaRegion(r.at("source").get<std::string>());
    const auto kind = r.at("kind").get<std::string>();
    if (kind == "exact") {
      rule.kind = MappingKind::kExact;
    } else if (kind == "containment") {
      rule.kind = MappingKind::kContainment;
    } else if (kind == "one_to_many") {
      rule.kind = MappingKind::kOneToMany;
    } else {
      throw Error(ErrorCode::kInvalidRule, "unknown rule kind '" + kind + "'",
                  rule.source.str());
    }
    for (const auto& t : r.at("targets")) rule.targets.emplace_back(t.get<std::string>());
    if (r.contains("subregion_terms")) {
      rule.subregion_terms = r.at("subregion_terms").get<std::vector<std::string>>();
    }
    return rule;
  }

  void add_rule(MappingRule rule) {
    const std::string& name = rule.source.str();
    if (!c_ana_.contains(rule.source)) {
      throw Error(ErrorCode::kDanglingSource, "rule source '" + name + "' is not in c_ana",
                  name);
    }
    if (rules_.contains(rule.source)) {
      throw Error(ErrorCode::kDuplicateRule, "more than one rule for '" + name + "'", name);
    }
    for (const auto& t : rule.targets) {
      if (!c_pre_.contains(t)) {
        throw Error(ErrorCode::kDanglingTarget,
                    "rule for '" + name + "' targets unknown class '" + t.str() + "'",
                    t.str());
      }
    }
    if (rule.kind == MappingKind::kOneToMany) {
      if (rule.targets.size() < 2 || rule.subregion_terms.size() != rule.targets.size()) {
        throw Error(ErrorCode::kInvalidRule,
                    "one_to_many rule for '" + name +
                        "' needs >= 2 targets and one subregion term per target",
                    name);
      }
    } else {
      if (rule.targets.size() != 1 || !rule.subregion_terms.empty()) {
        throw Error(ErrorCode::kInvalidRule,
                    "exact/containment rule for '" + name + "' needs exactly one target",
                    name);
      }
    }
    rules_.emplace(rule.source, std::move(rule));
  }

  std::set<AnaRegion> c_ana_;
  std::set<DetectorClass> c_pre_;
  std::map<AnaRegion, MappingRule> rules_;
};

inline Ontology load_ontology(const std::string& path, OntologyShape shape = {}) {
  return Ontology::load(path, shape);
}

inline MappingResolution resolve(const AnaRegion& region, const Ontology& ontology) {
  return ontology.resolve(region);
}

}  // namespace asg
