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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "asg/matrix.hpp"

namespace asg {

// Named random streams derived from the run seed. Each consumer draws from its
// own stream so adding draws in one place never shifts another's values.
enum class Stream : std::uint32_t {
  kCorpus = 1,
  kDetections = 2,
  kEmbeddings = 3,
  kParameters = 4,
  kChecks = 5,
};

// Portable generator: std::mt19937_64 and std::seed_seq are fully specified by
// the standard; the distributions below are hand-rolled because the standard
// library distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint32_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), stream};
    engine_.seed(seq);
  }
  Rng(std::uint64_t seed, Stream stream)
      : Rng(seed, static_cast<std::uint32_t>(stream)) {}

  std::uint64_t next() { return engine_(); }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (one value per call, second discarded).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = scale * normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace asg
