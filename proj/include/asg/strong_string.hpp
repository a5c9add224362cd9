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

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace asg {

// A string that cannot be silently mixed with strings of another vocabulary.
template <typename Tag>
class StrongString {
 public:
  StrongString() = default;
  explicit StrongString(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const StrongString&, const StrongString&) = default;
  friend bool operator==(const StrongString&, const StrongString&) = default;

  friend std::ostream& operator<<(std::ostream& os, const StrongString& s) {
    return os << s.value_;
  }

 private:
  std::string value_;
};

struct AnaRegionTag {};
struct DetectorClassTag {};
struct FindingTagTag {};

/// Report-side anatomical vocabulary term (member of C_ana).
using AnaRegion = StrongString<AnaRegionTag>;
/// Detector-side anatomical class (member of C_pre).
using DetectorClass = StrongString<DetectorClassTag>;
/// Disease class name.
using FindingTag = StrongString<FindingTagTag>;

}  // namespace asg

template <typename Tag>
struct std::hash<asg::StrongString<Tag>> {
  std::size_t operator()(const asg::StrongString<Tag>& s) const noexcept {
    return std::hash<std::string>{}(s.str());
  }
};
