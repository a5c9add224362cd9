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

#include <functional>

#include <gtest/gtest.h>

#include "asg/anatomy_ontology.hpp"
#include "asg/io.hpp"
#include "test_support.hpp"

namespace asg {
namespace {

using testing::data_path;
using testing::shipped_ontology;

nlohmann::json shipped_doc() { return io::read_json_file(data_path("ontology.json")); }

ErrorCode load_error(const nlohmann::json& doc) {
  try {
    Ontology::from_json(doc);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "mutated table was accepted";
  return ErrorCode::kInvalidArgument;
}

nlohmann::json& rule_for(nlohmann::json& doc, const std::string& source) {
  for (auto& r : doc["rules"]) {
    if (r["source"] == source) return r;
  }
  throw std::runtime_error("no rule " + source);
}

TEST(Ontology, ShippedTableCardinalities) {
  EXPECT_EQ(shipped_ontology().c_ana().size(), 50u);
  EXPECT_EQ(shipped_ontology().c_pre().size(), 29u);
}

TEST(Ontology, ResolvesThreeScenarios) {
  const auto& o = shipped_ontology();
  EXPECT_EQ(resolve(AnaRegion("right hilar"), o),
            MappingResolution(ExactMatch{DetectorClass("right hilar structures")}));
  EXPECT_EQ(resolve(AnaRegion("right ventricle"), o),
            MappingResolution(ContainedIn{DetectorClass("cardiac silhouette")}));
  EXPECT_EQ(resolve(AnaRegion("diaphragm unspec"), o),
            MappingResolution(OneToMany{{DetectorClass("left diaphragm"), DetectorClass("right diaphragm")},
                                        {"left diaphragm", "right diaphragm"}}));
  EXPECT_EQ(resolve(AnaRegion("mediastinum xyz"), o), MappingResolution(Unmapped{}));
}

TEST(Ontology, ResolveIsTotalAndDeterministic) {
  const auto& o = shipped_ontology();
  std::size_t unmapped = 0;
  for (const auto& r : o.c_ana()) {
    const auto a = o.resolve(r);
    EXPECT_EQ(a, o.resolve(r));
    if (std::holds_alternative<Unmapped>(a)) ++unmapped;
    if (const auto* m = std::get_if<OneToMany>(&a)) {
      EXPECT_GE(m->targets.size(), 2u);
      EXPECT_EQ(m->targets.size(), m->subregion_terms.size());
    }
  }
  EXPECT_EQ(unmapped, o.c_ana().size() - o.rules().size());
}

TEST(Ontology, SerializationIsCanonical) {
  const std::string file = io::read_text_file(data_path("ontology.json"));
  EXPECT_EQ(shipped_ontology().serialize(), file);
  const Ontology again = Ontology::from_json(nlohmann::json::parse(shipped_ontology().serialize()));
  EXPECT_EQ(again.serialize(), file);
}

TEST(Ontology, RejectsDanglingTarget) {
  auto doc = shipped_doc();
  rule_for(doc, "right hilar")["targets"] = {"right hilum box"};
  EXPECT_EQ(load_error(doc), ErrorCode::kDanglingTarget);
}

TEST(Ontology, RejectsDuplicateRule) {
  auto doc = shipped_doc();
  doc["rules"].push_back(
      {{"source", "left lung"}, {"kind", "containment"}, {"targets", {"left lung"}}});
  EXPECT_EQ(load_error(doc), ErrorCode::kDuplicateRule);
}

TEST(Ontology, RejectsSizeMismatch) {
  auto doc = shipped_doc();
  doc["c_pre"].erase(doc["c_pre"].begin());
  EXPECT_EQ(load_error(doc), ErrorCode::kSizeMismatch);
  doc = shipped_doc();
  doc["c_ana"].push_back("left ventricle");
  EXPECT_EQ(load_error(doc), ErrorCode::kSizeMismatch);
}

TEST(Ontology, RejectsDanglingSourceDuplicateTermAndBadRules) {
  auto doc = shipped_doc();
  rule_for(doc, "spine")["source"] = "spinal cord";
  EXPECT_EQ(load_error(doc), ErrorCode::kDanglingSource);

  doc = shipped_doc();
  doc["c_ana"][1] = doc["c_ana"][0];
  EXPECT_EQ(load_error(doc), ErrorCode::kDuplicateTerm);

  doc = shipped_doc();
  rule_for(doc, "diaphragm unspec")["subregion_terms"] = {"left diaphragm"};
  EXPECT_EQ(load_error(doc), ErrorCode::kInvalidRule);

  doc = shipped_doc();
  rule_for(doc, "heart size")["targets"] = {"cardiac silhouette", "mediastinum"};
  EXPECT_EQ(load_error(doc), ErrorCode::kInvalidRule);

  doc = shipped_doc();
  rule_for(doc, "heart size")["kind"] = "overlap";
  EXPECT_EQ(load_error(doc), ErrorCode::kInvalidRule);
}

TEST(Ontology, MissingFileAndMalformedJson) {
  try {
    Ontology::load(data_path("no_such_ontology.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFileNotFound);
  }
  EXPECT_EQ(load_error(nlohmann::json::array()), ErrorCode::kMalformedJson);
  auto doc = shipped_doc();
  doc.erase("rules");
  EXPECT_EQ(load_error(doc), ErrorCode::kMalformedJson);
}

TEST(Ontology, CustomShape) {
  const nlohmann::json doc = {
      {"c_ana", {"a", "b"}},
      {"c_pre", {"x", "y"}},
      {"rules",
       {{{"source", "a"}, {"kind", "one_to_many"}, {"targets", {"x", "y"}},
         {"subregion_terms", {"left a", "right a"}}}}}};
  const Ontology o = Ontology::from_json(doc, {2, 2});
  EXPECT_TRUE(std::holds_alternative<OneToMany>(o.resolve(AnaRegion("a"))));
  EXPECT_TRUE(std::holds_alternative<Unmapped>(o.resolve(AnaRegion("b"))));
  EXPECT_THROW(Ontology::from_json(doc), Error);
}

}  // namespace
}  // namespace asg
