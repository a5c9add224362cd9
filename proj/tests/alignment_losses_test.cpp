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

#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "asg/alignment_losses.hpp"
#include "asg/pipeline/checks.hpp"
#include "test_support.hpp"

namespace asg {
namespace {

using testing::max_abs_diff;
using testing::to_bits;
using testing::to_oracle;

EmbeddingBatch batch(Matrix m, EmbeddingRole role = EmbeddingRole::kImage) {
  return EmbeddingBatch(std::move(m), role);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TagVector tag(std::vector<std::uint8_t> bits) { return TagVector(std::move(bits)); }

const double kE = std::exp(1.0);

TEST(EmbeddingBatch, Validation) {
  EXPECT_EQ(code_of([] { batch(Matrix(0, 3)); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([] { batch(Matrix{{1.0, std::numeric_limits<double>::quiet_NaN()}}); }),
            ErrorCode::kNonFiniteComponent);
}

TEST(AveragePool, MeanOfTokens) {
  EXPECT_EQ(average_pool(Matrix{{1, 2}, {3, 6}}), (std::vector<double>{2, 4}));
}

TEST(Project, IdentityHeadKeepsUnitRowInLinearRegion) {
  const Matrix x{{0.6, 0.8}};
  const auto y = project(batch(x), ProjectionHead::identity(2));
  EXPECT_NEAR(y.vectors()(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(y.vectors()(0, 1), 0.8, 1e-15);
}

TEST(Project, OutputRowsAreUnitNorm) {
  Rng rng(3, Stream::kChecks);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 1 + rng.below(20);
    const auto head = ProjectionHead::random(d, 1 + rng.below(d), 1 + rng.below(d), rng);
    const auto y = project(batch(rng.normal_matrix(1 + rng.below(8), d)), head);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(l2_norm(y.vectors().row(i)), 1.0, 1e-12);
  }
}

TEST(Project, MatchesNaiveProjection) {
  Rng rng(4, Stream::kChecks);
  const auto head = ProjectionHead::random(5, 4, 3, rng);
  const Matrix x = rng.normal_matrix(4, 5);
  const auto expected = oracle::project(to_oracle(x), to_oracle(head.w1), head.b1,
                                        to_oracle(head.w2), head.b2);
  EXPECT_LE(max_abs_diff(project_forward(x, head).output, expected), 1e-12);
}

TEST(Project, ZeroRowWithZeroBiases) {
  EXPECT_EQ(code_of([] { project(batch(Matrix{{0.0, 0.0}}), ProjectionHead::identity(2)); }),
            ErrorCode::kZeroVector);
}

TEST(Project, RejectsWideningHead) {
  Rng rng(1);
  EXPECT_EQ(code_of([&] { project_forward(Matrix{{1.0, 2.0}}, ProjectionHead::random(2, 2, 3, rng)); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Similarity, SingleRow) {
  const auto s = similarity(batch(Matrix{{0.3, -2.0}}), batch(Matrix{{1.0, 1.0}}), 0.07);
  EXPECT_EQ(s.p(0, 0), 1.0);
}

TEST(Similarity, IdentityRowsAtUnitTemperature) {
  const auto s = similarity(batch(Matrix::identity(2)), batch(Matrix::identity(2)), 1.0);
  const auto o = oracle::similarity({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}, 1.0);
  EXPECT_NEAR(o[0][0], kE / (kE + 1), 1e-15);
  EXPECT_LE(max_abs_diff(s.p, o), 1e-15);
  EXPECT_NEAR(s.p(0, 0), 0.73106, 1e-5);
  EXPECT_NEAR(s.p(0, 1), 0.26894, 1e-5);
}

TEST(Similarity, RejectsBadTemperatureAndShapes) {
  const auto a = batch(Matrix::identity(2));
  EXPECT_EQ(code_of([&] { similarity(a, a, 0.0); }), ErrorCode::kNonPositiveTemperature);
  EXPECT_EQ(code_of([&] { similarity(a, a, -1.0); }), ErrorCode::kNonPositiveTemperature);
  EXPECT_EQ(code_of([&] { similarity(a, batch(Matrix::identity(3)), 1.0); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Similarity, ArgmaxIsTemperatureInvariant) {
  Rng rng(11, Stream::kChecks);
  for (int k = 0; k < 100; ++k) {
    const auto a = batch(rng.normal_matrix(6, 5)), b = batch(rng.normal_matrix(6, 5));
    const auto ref = pipeline::row_argmax(similarity(a, b, 0.07).p);
    EXPECT_EQ(pipeline::row_argmax(similarity(a, b, 1.0).p), ref);
    EXPECT_EQ(pipeline::row_argmax(similarity(a, b, 5.0).p), ref);
  }
}

TEST(InfoNce, KnownValues) {
  EXPECT_EQ(infonce(similarity(batch(Matrix{{1.0}}), batch(Matrix{{2.0}}), 0.5)), 0.0);
  SimilarityMatrix uniform{Matrix(4, 4, 0.25), Direction::kImageToText, 1.0};
  EXPECT_NEAR(infonce(uniform), std::log(4.0), 1e-15);
  const auto s = similarity(batch(Matrix::identity(2)), batch(Matrix::identity(2)), 1.0);
  EXPECT_NEAR(infonce(s), -std::log(kE / (kE + 1)), 1e-15);
  EXPECT_NEAR(infonce(s), 0.31326, 1e-5);
}

TEST(InfoNce, IraIsMeanOfDirections) {
  Rng rng(12, Stream::kChecks);
  const Matrix a = rng.normal_matrix(4, 3), b = rng.normal_matrix(4, 3);
  const double expected = oracle::symmetric_infonce(to_oracle(a), to_oracle(b), 0.3);
  EXPECT_NEAR(ira_loss(batch(a), batch(b, EmbeddingRole::kText), 0.3), expected, 1e-12);
}

TEST(ArsaLoss, KnownValues) {
  EXPECT_EQ(arsa_loss(Matrix{{1.0, 2.0}}, Matrix{{-1.0, 0.5}}, 0.07).value, 0.0);
  const auto a = arsa_loss(Matrix::identity(2), Matrix::identity(2), 1.0);
  EXPECT_NEAR(a.value, -std::log(kE / (kE + 1)), 1e-15);
  EXPECT_FALSE(a.diagnostic.has_value());
  const auto empty = arsa_loss(Matrix(0, 4), Matrix(0, 4), 0.07);
  EXPECT_EQ(empty.value, 0.0);
  EXPECT_EQ(empty.diagnostic, "EmptyPairSet");
  EXPECT_EQ(code_of([] { arsa_loss(Matrix(2, 2, 1.0), Matrix(3, 2, 1.0), 1.0); }),
            ErrorCode::kLengthMismatch);
}

TEST(SoftLabels, IdenticalTagsGiveUniformRows) {
  const std::vector<TagVector> tags(3, tag({1, 0, 1}));
  const auto s = soft_labels(tags, 0.07);
  for (double v : s.rows.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(SoftLabels, OrthogonalOneHotTags) {
  const std::vector<TagVector> tags = {tag({1, 0}), tag({0, 1})};
  const auto s = soft_labels(tags, 1.0);
  EXPECT_NEAR(s.rows(0, 0), kE / (kE + 1), 1e-15);
  EXPECT_NEAR(s.rows(0, 1), 1 / (kE + 1), 1e-15);
  EXPECT_GT(s.rows(1, 1), s.rows(1, 0));
  EXPECT_LE(max_abs_diff(s.rows, oracle::soft_labels(to_bits(tags), 1.0)), 1e-15);
}

TEST(SoftLabels, ZeroTagRowIsUniform) {
  const std::vector<TagVector> tags = {tag({0, 0, 0}), tag({1, 0, 0}), tag({1, 1, 0}),
                                       tag({0, 0, 1})};
  const auto s = soft_labels(tags, 0.07);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(s.rows(0, j), 0.25, 1e-15);
  EXPECT_EQ(code_of([] { soft_labels(std::vector{tag({1}), tag({1, 0})}, 1.0); }),
            ErrorCode::kLengthMismatch);
}

TEST(MixLabels, EndpointsAndMidpoint) {
  const std::vector<TagVector> tags = {tag({1, 0}), tag({1, 1})};
  const auto hard = hard_labels(2);
  const auto soft = soft_labels(tags, 0.5);
  EXPECT_EQ(mix_labels(hard, soft, 0.0).rows, hard.rows);
  EXPECT_EQ(mix_labels(hard, soft, 1.0).rows, soft.rows);

  const LabelMatrix s{Matrix{{0.7, 0.3}, {0.3, 0.7}}, LabelKind::kSoft, 1.0};
  const auto m = mix_labels(hard, s, 0.5);
  EXPECT_NEAR(m.rows(0, 0), 0.85, 1e-15);
  EXPECT_NEAR(m.rows(0, 1), 0.15, 1e-15);
  EXPECT_EQ(m.kind, LabelKind::kMixed);
  EXPECT_EQ(code_of([&] { mix_labels(hard, s, 1.5); }), ErrorCode::kAlphaOutOfRange);
  EXPECT_EQ(code_of([&] { mix_labels(hard, s, -0.1); }), ErrorCode::kAlphaOutOfRange);
}

TEST(KlSoftLoss, KnownValues) {
  const auto s = similarity(batch(Matrix::identity(2)), batch(Matrix::identity(2)), 1.0);
  EXPECT_EQ(kl_soft_loss({s.p, LabelKind::kSoft, 1.0}, s), 0.0);
  EXPECT_EQ(kl_soft_loss(hard_labels(2), s), infonce(s));

  const LabelMatrix target{Matrix{{0.85, 0.15}, {0.15, 0.85}}, LabelKind::kMixed, 0.5};
  const double p = kE / (kE + 1), q = 1 / (kE + 1);
  const double row = 0.85 * std::log(0.85 / p) + 0.15 * std::log(0.15 / q);
  EXPECT_NEAR(kl_soft_loss(target, s), row, 1e-15);
  EXPECT_NEAR(row, 0.04055, 1e-5);
  EXPECT_NEAR(kl_soft_loss(target, s), oracle::kl(to_oracle(target.rows), to_oracle(s.p)), 1e-15);
}

TEST(TotalLoss, SumAndValidation) {
  EXPECT_EQ(total_loss(0, 0, 0, 0).total, 0.0);
  const auto b = total_loss(1, 2, 3, 4);
  EXPECT_EQ(b.total, 10.0);
  EXPECT_EQ(b.l_soft, 4.0);
  EXPECT_EQ(total_loss(1, 2, 3, 4, {0, 1, 0, 1}).total, 6.0);
  EXPECT_EQ(code_of([] { total_loss(std::nan(""), 0, 0, 0); }), ErrorCode::kNonFiniteComponent);
  EXPECT_EQ(code_of([] { total_loss(0, 0, HUGE_VAL, 0); }), ErrorCode::kNonFiniteComponent);
}

TEST(OracleEquivalence, SmallBatches) {
  Rng rng(21, Stream::kChecks);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + rng.below(4), d = 1 + rng.below(6);
    const Matrix a = rng.normal_matrix(n, d), b = rng.normal_matrix(n, d);
    const double tau = pipeline::log_uniform(rng, 0.05, 5.0), alpha = rng.uniform();
    const auto tags = pipeline::random_tags(rng, n, 1 + rng.below(5));
    const auto oa = to_oracle(a), ob = to_oracle(b);

    const auto s = similarity(batch(a), batch(b), tau);
    ASSERT_LE(max_abs_diff(s.p, oracle::similarity(oa, ob, tau)), 1e-12);
    const auto soft = soft_labels(tags, tau);
    ASSERT_LE(max_abs_diff(soft.rows, oracle::soft_labels(to_bits(tags), tau)), 1e-12);
    const auto mixed = mix_labels(hard_labels(n), soft, alpha);
    const auto omixed = oracle::mix(oracle::soft_labels(to_bits(tags), tau), alpha);
    ASSERT_LE(max_abs_diff(mixed.rows, omixed), 1e-12);
    ASSERT_NEAR(ira_loss(batch(a), batch(b), tau), oracle::symmetric_infonce(oa, ob, tau), 1e-12);
    ASSERT_NEAR(soft_loss(mixed, batch(a), batch(b), tau),
                oracle::symmetric_kl(omixed, oa, ob, tau), 1e-12);
  }
}

TEST(Gradients, ContrastiveObjectivesMatchFiniteDifferences) {
  Rng rng(31, Stream::kChecks);
  for (int k = 0; k < 5; ++k) {
    const auto g = pipeline::random_gradient_instance(rng);
    for (auto obj : {ContrastiveObjective::kIra, ContrastiveObjective::kArsa,
                     ContrastiveObjective::kSoft}) {
      EXPECT_LE(contrastive_grad_check(obj, g.raw_a, g.head_a, g.raw_b, g.head_b, g.tau, &g.target),
                1e-4);
    }
  }
}

TEST(Gradients, AnalyticLossEqualsForward) {
  Rng rng(32, Stream::kChecks);
  const auto g = pipeline::random_gradient_instance(rng);
  const auto ia = project(batch(g.raw_a), g.head_a), ib = project(batch(g.raw_b), g.head_b);
  EXPECT_NEAR(projected_contrastive_grad(g.raw_a, g.head_a, g.raw_b, g.head_b, g.tau, nullptr).loss,
              ira_loss(ia, ib, g.tau), 1e-12);
  EXPECT_NEAR(projected_contrastive_grad(g.raw_a, g.head_a, g.raw_b, g.head_b, g.tau, &g.target).loss,
              soft_loss(g.target, ia, ib, g.tau), 1e-12);
}

TEST(Gradients, SoftObjectiveNeedsTarget) {
  Rng rng(33, Stream::kChecks);
  const auto g = pipeline::random_gradient_instance(rng);
  EXPECT_EQ(code_of([&] {
              contrastive_grad_check(ContrastiveObjective::kSoft, g.raw_a, g.head_a, g.raw_b,
                                     g.head_b, g.tau, nullptr);
            }),
            ErrorCode::kInvalidArgument);
}

TEST(GradCheck, RelativeErrorFloorAndNonFinite) {
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 1e-6);
  const std::vector<double> a = {1.0, std::nan("")}, b = {1.0, 1.0};
  EXPECT_TRUE(std::isinf(max_relative_error(a, b)));
}

}  // namespace
}  // namespace asg
