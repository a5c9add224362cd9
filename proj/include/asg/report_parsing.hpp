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

// Lexicon-driven report parsing: sentence splitting, extraction of
// <anatomical region, finding, existence> triplets, and disease tag vectors.
//
// Extraction rules, applied per sentence over lowercase ASCII-alphanumeric
// tokens:
//   * longest-match scan; at each token the longest lexicon phrase wins
//   * every finding mention pairs with the region mention nearest in token
//     distance (ties go to the earlier region), else the finding's default
//     region, else a diagnostic is emitted
//   * a finding is Absent iff a negation cue starts before it in the sentence
//   * the first triplet for a (region, finding) pair wins

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/anatomy_ontology.hpp"
#include "asg/error.hpp"
#include "asg/io.hpp"
#include "asg/strong_string.hpp"

namespace asg {

struct Sentence {
  std::size_t index = 0;
  std::string text;
  std::size_t begin = 0;  // [begin, end) byte offsets into the report text
  std::size_t end = 0;
};

struct Report {
  std::string id;
  std::string text;
  std::vector<Sentence> sentences;
};

enum class Existence { kExist, kAbsent };

inline std::string_view existence_name(Existence e) {
  return e == Existence::kExist ? "exist" : "absent";
}

struct Triplet {
  AnaRegion region;
  FindingTag finding;
  Existence existence = Existence::kExist;
  std::size_t source_sentence = 0;
  // Region text as written in the sentence; empty when the default region
  // for the finding was used.
  std::string region_surface;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct ExtractionDiagnostic {
  std::size_t sentence_index = 0;
  FindingTag finding;
  std::string reason;
};

struct Extraction {
  std::vector<Triplet> triplets;
  std::vector<ExtractionDiagnostic> diagnostics;
};

class TagVector {
 public:
  TagVector() = default;
  explicit TagVector(std::size_t classes) : bits_(classes, 0) {}
  explicit TagVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw Error(ErrorCode::kInvalidArgument, "tag bits must be 0 or 1");
    }
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t j) const { return bits_[j]; }
  void set(std::size_t j) { bits_.at(j) = 1; }
  bool any() const {
    return std::any_of(bits_.begin(), bits_.end(), [](auto b) { return b != 0; });
  }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const TagVector&, const TagVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

struct Token {
  std::string text;  // lowercase
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    Token t;
    t.begin = i;
    while (i < text.size() && is_word_char(text[i])) t.text.push_back(ascii_lower(text[i++]));
    t.end = i;
    tokens.push_back(std::move(t));
  }
  return tokens;
}

inline bool is_normalized_surface(std::string_view s) {
  if (s.empty() || s.front() == ' ' || s.back() == ' ') return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= 'A' && s[i] <= 'Z') return false;
    if (is_space(s[i]) && (s[i] != ' ' || (i > 0 && s[i - 1] == ' '))) return false;
  }
  return true;
}

// Canonical token key of a phrase: tokens joined by single spaces.
inline std::string phrase_key(std::string_view s) {
  std::string key;
  for (const auto& t : tokenize(s)) {
    if (!key.empty()) key.push_back(' ');
    key += t.text;
  }
  return key;
}

}  // namespace detail

// Splits on '.', '!' or '?' followed by whitespace or end of text. Spans
// exclude surrounding whitespace and include the terminator.
inline std::vector<Sentence> split_sentences(std::string_view text) {
  std::vector<Sentence> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && detail::is_space(text[begin])) ++begin;
    while (end > begin && detail::is_space(text[end - 1])) --end;
    if (begin == end) return;
    out.push_back({out.size(), std::string(text.substr(begin, end - begin)), begin, end});
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 == text.size() || detail::is_space(text[i + 1])) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, text.size());
  return out;
}

inline Report make_report(std::string id, std::string text) {
  Report r{std::move(id), std::move(text), {}};
  r.sentences = split_sentences(r.text);
  return r;
}

class Lexicon {
 public:
  enum class TermKind { kRegion, kFinding, kNegation };

  struct Entry {
    TermKind kind;
    std::string value;  // canonical region or finding; empty for negation cues
  };

  // JSON schema:
  //   {"disease_classes": [str], "region_terms": {surface: region},
  //    "finding_terms": {surface: finding}, "negation_cues": [surface],
  //    "default_regions": {finding: region}}   (default_regions optional)
  static Lexicon from_json(const nlohmann::json& doc, const Ontology& ontology) {
    Lexicon lex;
    auto require = [&](const char* key) -> const nlohmann::json& {
      if (!doc.is_object() || !doc.contains(key)) {
        throw Error(ErrorCode::kInvalidLexicon, std::string("missing section '") + key + "'",
                    key);
      }
      return doc.at(key);
    };
    for (const auto& c : require("disease_classes")) {
      FindingTag tag(c.get<std::string>());
      if (lex.class_index_.contains(tag)) {
        throw Error(ErrorCode::kInvalidLexicon, "duplicate disease class " + tag.str(),
                    tag.str());
      }
      lex.class_index_.emplace(tag, lex.classes_.size());
      lex.classes_.push_back(tag);
    }
    for (const auto& [surface, region] : require("region_terms").items()) {
      AnaRegion r(region.get<std::string>());
      if (!ontology.has_region(r)) {
        throw Error(ErrorCode::kInvalidLexicon,
                    "region term '" + surface + "' maps to '" + r.str() + "' outside c_ana",
                    r.str());
      }
      lex.add_surface(surface, {TermKind::kRegion, r.str()});
    }
    for (const auto& [surface, finding] : require("finding_terms").items()) {
      FindingTag f(finding.get<std::string>());
      if (!lex.class_index_.contains(f)) {
        throw Error(ErrorCode::kInvalidLexicon,
                    "finding term '" + surface + "' maps to unknown class '" + f.str() + "'",
                    f.str());
      }
      lex.add_surface(surface, {TermKind::kFinding, f.str()});
    }
    for (const auto& cue : require("negation_cues")) {
      lex.add_surface(cue.get<std::string>(), {TermKind::kNegation, {}});
    }
    if (doc.contains("default_regions")) {
      for (const auto& [finding, region] : doc.at("default_regions").items()) {
        FindingTag f(finding);
        AnaRegion r(region.get<std::string>());
        if (!lex.class_index_.contains(f) || !ontology.has_region(r)) {
          throw Error(ErrorCode::kInvalidLexicon,
                      "default region '" + r.str() + "' for '" + finding + "' is not valid",
                      finding);
        }
        lex.default_region_.emplace(f, r);
      }
    }
    return lex;
  }

  static Lexicon load(const std::string& path, const Ontology& ontology) {
    return from_json(io::read_json_file(path), ontology);
  }

  std::span<const FindingTag> disease_classes() const noexcept { return classes_; }
  std::size_t class_count() const noexcept { return classes_.size(); }

  std::optional<std::size_t> class_index(const FindingTag& f) const {
    auto it = class_index_.find(f);
    if (it == class_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<AnaRegion> default_region(const FindingTag& f) const {
    auto it = default_region_.find(f);
    if (it == default_region_.end()) return std::nullopt;
    return it->second;
  }

  const Entry* lookup(const std::string& key) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? nullptr : &it->second;
  }

  std::size_t max_phrase_tokens() const noexcept { return max_tokens_; }

 private:
  void add_surface(const std::string& surface, Entry entry) {
    if (!detail::is_normalized_surface(surface)) {
      throw Error(ErrorCode::kInvalidLexicon,
                  "surface form '" + surface + "' is not lowercase and whitespace-normalized",
                  surface);
    }
    const std::string key = detail::phrase_key(surface);
    if (key.empty()) {
      throw Error(ErrorCode::kInvalidLexicon, "surface form '" + surface + "' has no words",
                  surface);
    }
    if (!terms_.emplace(key, std::move(entry)).second) {
      throw Error(ErrorCode::kInvalidLexicon, "surface form '" + surface + "' is ambiguous",
                  surface);
    }
    max_tokens_ = std::max(max_tokens_, detail::tokenize(key).size());
  }

  std::vector<FindingTag> classes_;
  std::map<FindingTag, std::size_t> class_index_;
  std::unordered_map<std::string, Entry> terms_;
  std::map<FindingTag, AnaRegion> default_region_;
  std::size_t max_tokens_ = 0;
};

inline Extraction extract_triplets(const Sentence& sentence, const Lexicon& lexicon) {
  struct Mention {
    Lexicon::TermKind kind;
    std::string value;
    std::size_t token = 0;
    std::string surface;
  };
  const auto tokens = detail::tokenize(sentence.text);
  std::vector<Mention> mentions;
  for (std::size_t i = 0; i < tokens.size();) {
    std::size_t matched = 0;
    const Lexicon::Entry* entry = nullptr;
    const std::size_t longest = std::min(lexicon.max_phrase_tokens(), tokens.size() - i);
    for (std::size_t len = longest; len >= 1 && entry == nullptr; --len) {
      std::string key = tokens[i].text;
      for (std::size_t k = 1; k < len; ++k) key += " " + tokens[i + k].text;
      if ((entry = lexicon.lookup(key)) != nullptr) matched = len;
    }
    if (entry == nullptr) {
      ++i;
      continue;
    }
    const std::size_t b = tokens[i].begin;
    const std::size_t e = tokens[i + matched - 1].end;
    mentions.push_back({entry->kind, entry->value, i, sentence.text.substr(b, e - b)});
    i += matched;
  }

  Extraction out;
  for (const auto& m : mentions) {
    if (m.kind != Lexicon::TermKind::kFinding) continue;
    FindingTag finding(m.value);

    const Mention* nearest = nullptr;
    std::size_t best = 0;
    for (const auto& r : mentions) {
      if (r.kind != Lexicon::TermKind::kRegion) continue;
      const std::size_t dist = r.token > m.token ? r.token - m.token : m.token - r.token;
      if (nearest == nullptr || dist < best) {
        nearest = &r;
        best = dist;
      }
    }

    Triplet t;
    t.finding = finding;
    t.source_sentence = sentence.index;
    if (nearest != nullptr) {
      t.region = AnaRegion(nearest->value);
      t.region_surface = nearest->surface;
    } else if (auto def = lexicon.default_region(finding)) {
      t.region = *def;
    } else {
      out.diagnostics.push_back({sentence.index, finding, "NoRegion"});
      continue;
    }
    const bool negated = std::any_of(mentions.begin(), mentions.end(), [&](const Mention& c) {
      return c.kind == Lexicon::TermKind::kNegation && c.token < m.token;
    });
    t.existence = negated ? Existence::kAbsent : Existence::kExist;

    const bool seen = std::any_of(out.triplets.begin(), out.triplets.end(), [&](const Triplet& o) {
      return o.region == t.region && o.finding == t.finding;
    });
    if (!seen) out.triplets.push_back(std::move(t));
  }
  return out;
}

inline Extraction extract_triplets(const Report& report, const Lexicon& lexicon) {
  Extraction all;
  for (const auto& s : report.sentences) {
    auto e = extract_triplets(s, lexicon);
    all.triplets.insert(all.triplets.end(), e.triplets.begin(), e.triplets.end());
    all.diagnostics.insert(all.diagnostics.end(), e.diagnostics.begin(), e.diagnostics.end());
  }
  return all;
}

inline TagVector tags_from_triplets(std::span<const Triplet> triplets,
                                    std::span<const FindingTag> classes) {
  TagVector tags(classes.size());
  for (const auto& t : triplets) {
    auto it = std::find(classes.begin(), classes.end(), t.finding);
    if (it == classes.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "finding '" + t.finding.str() + "' is not a disease class", t.finding.str());
    }
    if (t.existence == Existence::kExist) {
      tags.set(static_cast<std::size_t>(it - classes.begin()));
    }
  }
  return tags;
}

// Reports: one {"id": str, "text": str} object per line.
inline std::vector<Report> read_reports(std::istream& in) {
  std::vector<Report> reports;
  io::for_each_jsonl(in, [&](const nlohmann::json& rec, std::size_t line) {
    reports.push_back(make_report(io::field<std::string>(rec, "id", line),
                                  io::field<std::string>(rec, "text", line)));
  });
  return reports;
}

inline nlohmann::json triplet_to_json(const std::string& report_id, const Triplet& t) {
  return {{"id", report_id},
          {"sentence_index", t.source_sentence},
          {"region", t.region.str()},
          {"finding", t.finding.str()},
          {"existence", std::string(existence_name(t.existence))},
          {"region_surface", t.region_surface}};
}

inline Triplet triplet_from_json(const nlohmann::json& rec, std::size_t line) {
  Triplet t;
  t.source_sentence = io::field<std::size_t>(rec, "sentence_index", line);
  t.region = AnaRegion(io::field<std::string>(rec, "region", line));
  t.finding = FindingTag(io::field<std::string>(rec, "finding", line));
  const auto ex = io::field<std::string>(rec, "existence", line);
  if (ex == "exist") {
    t.existence = Existence::kExist;
  } else if (ex == "absent") {
    t.existence = Existence::kAbsent;
  } else {
    throw Error(ErrorCode::kMalformedRecord,
                "line " + std::to_string(line) + ": existence must be exist|absent",
                "line " + std::to_string(line));
  }
  if (rec.contains("region_surface")) t.region_surface = rec.at("region_surface").get<std::string>();
  return t;
}

}  // namespace asg
