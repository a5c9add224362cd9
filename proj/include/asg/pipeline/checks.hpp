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

// Seeded invariant suite behind `asg check`. Every check draws its instances
// from its own sub-seed of Stream::kChecks, so checks can run in parallel and
// each result is reproducible on its own.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "asg/alignment_losses.hpp"
#include "asg/parallel.hpp"
#include "asg/pipeline/config.hpp"
#include "asg/pipeline/run_report.hpp"
#include "asg/region_geometry.hpp"
#include "asg/report_parsing.hpp"
#include "asg/rng.hpp"
#include "asg/tag_decoder.hpp"

namespace asg::pipeline {

struct CheckOptions {
  std::uint64_t seed = 0;
  std::size_t identity_instances = 1000;
  std::size_t gradient_instances = 100;
  std::size_t box_cases = 10000;
};

inline constexpr double kIdentityTolerance = 1e-12;
inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kGradientTolerance = 1e-4;
inline constexpr std::array<double, 4> kArgmaxTemperatures = {0.07, 0.5, 1.0, 5.0};

// ---------------------------------------------------------------------------
// Random instances.

struct LossInstance {
  Matrix a;
  Matrix b;
  std::vector<TagVector> tags;
  double tau = kDefaultTemperature;
  double alpha = kDefaultAlpha;
};

// Log-uniform in [lo, hi].
inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

inline std::vector<TagVector> random_tags(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<TagVector> tags;
  tags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TagVector t(classes);
    for (std::size_t j = 0; j < classes; ++j) {
      if (rng.uniform() < 0.3) t.set(j);
    }
    tags.push_back(std::move(t));
  }
  return tags;
}

// N in [1, max_n], d in [1, max_d], tau log-uniform in [0.01, 10].
inline LossInstance random_loss_instance(Rng& rng, std::size_t max_n = 16,
                                         std::size_t max_d = 32) {
  LossInstance x;
  const std::size_t n = 1 + rng.below(max_n);
  const std::size_t d = 1 + rng.below(max_d);
  x.a = rng.normal_matrix(n, d);
  x.b = rng.normal_matrix(n, d);
  x.tags = random_tags(rng, n, 1 + rng.below(14));
  x.tau = log_uniform(rng, 0.01, 10.0);
  x.alpha = rng.uniform();
  return x;
}

struct GradientInstance {
  Matrix raw_a;
  Matrix raw_b;
  ProjectionHead head_a;
  ProjectionHead head_b;
  LabelMatrix target;
  double tau = kDefaultTemperature;
};

// N in [2, 8], d in [2, 16], tau log-uniform in [0.05, 2].
inline GradientInstance random_gradient_instance(Rng& rng) {
  GradientInstance g;
  const std::size_t n = 2 + rng.below(7);
  const std::size_t d = 2 + rng.below(15);
  const std::size_t hidden = 1 + rng.below(d);
  const std::size_t out = 1 + rng.below(d);
  g.raw_a = rng.normal_matrix(n, d);
  g.raw_b = rng.normal_matrix(n, d);
  g.head_a = ProjectionHead::random(d, hidden, out, rng);
  g.head_b = ProjectionHead::random(d, hidden, out, rng);
  g.tau = log_uniform(rng, 0.05, 2.0);
  const auto tags = random_tags(rng, n, 1 + rng.below(14));
  g.target = mix_labels(hard_labels(n), soft_labels(tags, g.tau), rng.uniform());
  return g;
}

struct DecoderInstance {
  VisualTokens tokens;
  QuerySet queries;
  DecoderParams params;
  TagVector labels;
};

// d in [2, 16], M_Z in [1, 8], M_Q in [1, 14].
inline DecoderInstance random_decoder_instance(Rng& rng) {
  DecoderInstance x;
  const std::size_t d = 2 + rng.below(15);
  x.tokens.z = rng.normal_matrix(1 + rng.below(8), d);
  const std::size_t mq = 1 + rng.below(14);
  x.queries.q = rng.normal_matrix(mq, d);
  x.params = DecoderParams::random(d, rng);
  x.labels = random_tags(rng, 1, mq).front();
  return x;
}

// Boxes on a 1/8 pixel grid so that coordinates repeat across draws.
inline BBox random_box(Rng& rng, double extent = 512.0) {
  auto coord = [&] { return std::floor(rng.uniform(0.0, extent) * 8.0) / 8.0; };
  double x1 = coord(), x2 = coord(), y1 = coord(), y2 = coord();
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  if (x1 == x2) x2 += 0.125;
  if (y1 == y2) y2 += 0.125;
  return {x1, y1, x2, y2};
}

// ---------------------------------------------------------------------------
// Checks. Each returns the worst observed deviation from its invariant.

inline Rng check_rng(const CheckOptions& o, std::uint64_t salt) {
  return Rng(o.seed ^ (salt * 0x9e3779b97f4a7c15ULL), Stream::kChecks);
}

inline double row_sum_deviation(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

inline CheckResult check_row_stochastic(const CheckOptions& o) {
  Rng rng = check_rng(o, 1);
  double worst = 0.0;
  bool in_range = true;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const LossInstance x = random_loss_instance(rng);
    const EmbeddingBatch a(x.a, EmbeddingRole::kImage), b(x.b, EmbeddingRole::kText);
    const auto s_vt = similarity(a, b, x.tau, Direction::kImageToText);
    const auto s_tv = similarity(b, a, x.tau, Direction::kTextToImage);
    const auto soft = soft_labels(x.tags, x.tau);
    const auto mixed = mix_labels(hard_labels(x.a.rows()), soft, x.alpha);
    for (const Matrix* m : {&s_vt.p, &s_tv.p, &soft.rows, &mixed.rows}) {
      worst = std::max(worst, row_sum_deviation(*m));
    }
    for (double v : s_vt.p.values()) in_range = in_range && v > 0.0 && v <= 1.0;
    for (double v : s_tv.p.values()) in_range = in_range && v > 0.0 && v <= 1.0;
  }
  if (!in_range) worst = std::numeric_limits<double>::infinity();
  return {"row_stochastic", worst <= kRowSumTolerance, worst, kRowSumTolerance,
          o.identity_instances};
}

inline CheckResult check_uniform_ln4(const CheckOptions& o) {
  Rng rng = check_rng(o, 2);
  double worst = 0.0;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const std::size_t d = 1 + rng.below(32);
    const Matrix v = rng.normal_matrix(1, d), w = rng.normal_matrix(1, d);
    Matrix a, b;
    for (int i = 0; i < 4; ++i) {
      a.append_row(v.row(0));
      b.append_row(w.row(0));
    }
    const double tau = log_uniform(rng, 0.01, 10.0);
    const double loss = infonce(similarity(EmbeddingBatch(a, EmbeddingRole::kImage),
                                           EmbeddingBatch(b, EmbeddingRole::kText), tau));
    worst = std::max(worst, std::abs(loss - std::log(4.0)));
  }
  return {"infonce_uniform_ln4", worst <= kIdentityTolerance, worst, kIdentityTolerance,
          o.identity_instances};
}

inline CheckResult check_single_pair_zero(const CheckOptions& o) {
  Rng rng = check_rng(o, 3);
  double worst = 0.0;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const LossInstance x = random_loss_instance(rng, 1);
    const EmbeddingBatch a(x.a, EmbeddingRole::kImage), b(x.b, EmbeddingRole::kText);
    const auto target = mix_labels(hard_labels(1), soft_labels(x.tags, x.tau), x.alpha);
    for (double v : {ira_loss(a, b, x.tau), arsa_loss(x.a, x.b, x.tau).value,
                     soft_loss(target, a, b, x.tau)}) {
      worst = std::max(worst, std::abs(v));
    }
  }
  return {"single_pair_zero", worst <= kIdentityTolerance, worst, kIdentityTolerance,
          o.identity_instances};
}

inline CheckResult check_kl_self_zero(const CheckOptions& o) {
  Rng rng = check_rng(o, 4);
  double worst = 0.0;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const LossInstance x = random_loss_instance(rng);
    const auto s = similarity(EmbeddingBatch(x.a, EmbeddingRole::kImage),
                              EmbeddingBatch(x.b, EmbeddingRole::kText), x.tau);
    const LabelMatrix self{s.p, LabelKind::kSoft, 1.0};
    worst = std::max(worst, std::abs(kl_soft_loss(self, s)));
  }
  return {"kl_self_zero", worst <= kIdentityTolerance, worst, kIdentityTolerance,
          o.identity_instances};
}

inline CheckResult check_alpha_zero_reduction(const CheckOptions& o) {
  Rng rng = check_rng(o, 5);
  double worst = 0.0;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const LossInstance x = random_loss_instance(rng);
    const EmbeddingBatch a(x.a, EmbeddingRole::kImage), b(x.b, EmbeddingRole::kText);
    const auto target = mix_labels(hard_labels(x.a.rows()), soft_labels(x.tags, x.tau), 0.0);
    const auto s = similarity(a, b, x.tau);
    worst = std::max(worst, std::abs(kl_soft_loss(target, s) - infonce(s)));
    worst = std::max(worst, std::abs(soft_loss(target, a, b, x.tau) - ira_loss(a, b, x.tau)));
  }
  return {"alpha_zero_reduction", worst <= kIdentityTolerance, worst, kIdentityTolerance,
          o.identity_instances};
}

// KL may come out a few ulp below zero; anything beyond the identity
// tolerance counts as a violation.
inline CheckResult check_kl_nonnegative(const CheckOptions& o) {
  Rng rng = check_rng(o, 6);
  double worst = 0.0;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const LossInstance x = random_loss_instance(rng);
    const EmbeddingBatch a(x.a, EmbeddingRole::kImage), b(x.b, EmbeddingRole::kText);
    const auto target = mix_labels(hard_labels(x.a.rows()), soft_labels(x.tags, x.tau), x.alpha);
    worst = std::max(worst, -soft_loss(target, a, b, x.tau));
  }
  return {"kl_nonnegative", worst <= kIdentityTolerance, worst, kIdentityTolerance,
          o.identity_instances};
}

inline std::vector<std::size_t> row_argmax(const Matrix& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

// max_error counts rows whose argmax moved.
inline CheckResult check_argmax_tau_invariance(const CheckOptions& o) {
  Rng rng = check_rng(o, 7);
  double moved = 0.0;
  for (std::size_t k = 0; k < o.identity_instances; ++k) {
    const LossInstance x = random_loss_instance(rng);
    const EmbeddingBatch a(x.a, EmbeddingRole::kImage), b(x.b, EmbeddingRole::kText);
    const auto ref = row_argmax(similarity(a, b, kArgmaxTemperatures[0]).p);
    for (double tau : kArgmaxTemperatures) {
      const auto am = row_argmax(similarity(a, b, tau).p);
      for (std::size_t i = 0; i < am.size(); ++i) moved += am[i] != ref[i] ? 1.0 : 0.0;
    }
  }
  return {"argmax_tau_invariance", moved == 0.0, moved, 0.0, o.identity_instances};
}

// max_error counts violated identities; comparisons are exact.
inline CheckResult check_merge_box_algebra(const CheckOptions& o) {
  Rng rng = check_rng(o, 8);
  double failures = 0.0;
  for (std::size_t k = 0; k < o.box_cases; ++k) {
    const BBox a = random_box(rng), b = random_box(rng), c = random_box(rng);
    const BBox ab = merge_boxes(a, b);
    const bool ok = ab == merge_boxes(b, a) &&
                    merge_boxes(ab, c) == merge_boxes(a, merge_boxes(b, c)) &&
                    merge_boxes(a, a) == a && ab.contains(a) && ab.contains(b) && ab.valid();
    failures += ok ? 0.0 : 1.0;
  }
  return {"merge_box_algebra", failures == 0.0, failures, 0.0, o.box_cases};
}

inline CheckResult check_contrastive_gradient(const CheckOptions& o,
                                              ContrastiveObjective objective) {
  const std::uint64_t salt = 9 + static_cast<std::uint64_t>(objective);
  Rng rng = check_rng(o, salt);
  std::vector<GradientInstance> instances;
  instances.reserve(o.gradient_instances);
  for (std::size_t k = 0; k < o.gradient_instances; ++k) {
    instances.push_back(random_gradient_instance(rng));
  }
  const auto errors = parallel_map(instances.size(), [&](std::size_t k) {
    const auto& g = instances[k];
    return contrastive_grad_check(objective, g.raw_a, g.head_a, g.raw_b, g.head_b, g.tau,
                                  &g.target);
  });
  double worst = 0.0;
  for (double e : errors) worst = std::isfinite(e) ? std::max(worst, e) : e;
  static constexpr const char* kNames[] = {"gradient_ira", "gradient_arsa", "gradient_soft"};
  return {kNames[static_cast<int>(objective)], worst <= kGradientTolerance, worst,
          kGradientTolerance, o.gradient_instances};
}

inline CheckResult check_decoder_gradient(const CheckOptions& o) {
  Rng rng = check_rng(o, 12);
  std::vector<DecoderInstance> instances;
  instances.reserve(o.gradient_instances);
  for (std::size_t k = 0; k < o.gradient_instances; ++k) {
    instances.push_back(random_decoder_instance(rng));
  }
  const auto errors = parallel_map(instances.size(), [&](std::size_t k) {
    const auto& x = instances[k];
    return decoder_grad_check(x.tokens, x.queries, x.params, x.labels);
  });
  double worst = 0.0;
  for (double e : errors) worst = std::isfinite(e) ? std::max(worst, e) : e;
  return {"gradient_decoder", worst <= kGradientTolerance, worst, kGradientTolerance,
          o.gradient_instances};
}

// Loss identities, box algebra, then the four gradient checks.
std::vector<CheckResult> run_invariant_suite(const CheckOptions& o);

RunReport run_check(const RunConfig& cfg, const CheckOptions& options);

}  // namespace asg::pipeline
