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

// Contrastive alignment objectives over paired embedding batches.
//
//   project       x -> elu(x W1 + b1) W2 + b2, then L2-normalize each row
//   similarity    p_ij = softmax_j(cos(a_i, b_j) / tau)
//   infonce       (1/N) sum_i -log p_ii
//   L_ira         (infonce(p_img->txt) + infonce(p_txt->img)) / 2
//   L_arsa        same form over region/sentence pairs, flattened over batch
//   soft labels   softmax_j(cos(l_i, l_j) / tau), cos = 0 for a zero tag vector
//   mixed labels  (1 - alpha) * onehot + alpha * soft
//   L_soft        (KL(target || p_img->txt) + KL(target || p_txt->img)) / 2
//   total         L_ira + L_arsa + L_bce + L_soft
//
// All sums run row-major and sequentially. Gradients are accumulated in
// reverse mode by the *_grad / *_backward functions below.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asg/error.hpp"
#include "asg/grad_check.hpp"
#include "asg/matrix.hpp"
#include "asg/report_parsing.hpp"
#include "asg/rng.hpp"

namespace asg {

inline constexpr double kDefaultTemperature = 0.07;
inline constexpr double kDefaultAlpha = 0.5;
inline constexpr double kZeroNormThreshold = 1e-12;

enum class EmbeddingRole { kImage, kText, kRegion, kSentence };

class EmbeddingBatch {
 public:
  EmbeddingBatch(Matrix vectors, EmbeddingRole role) : vectors_(std::move(vectors)), role_(role) {
    if (vectors_.rows() == 0 || vectors_.cols() == 0) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding batch must be at least 1x1");
    }
    if (!vectors_.all_finite()) {
      throw Error(ErrorCode::kNonFiniteComponent, "embedding batch has non-finite entries");
    }
  }

  const Matrix& vectors() const noexcept { return vectors_; }
  EmbeddingRole role() const noexcept { return role_; }
  std::size_t size() const noexcept { return vectors_.rows(); }
  std::size_t dim() const noexcept { return vectors_.cols(); }

 private:
  Matrix vectors_;
  EmbeddingRole role_;
};

// Global representation of a token sequence: the mean of its rows.
inline std::vector<double> average_pool(const Matrix& tokens) {
  if (tokens.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot pool an empty token sequence");
  }
  std::vector<double> mean(tokens.cols(), 0.0);
  for (std::size_t i = 0; i < tokens.rows(); ++i) {
    for (std::size_t j = 0; j < tokens.cols(); ++j) mean[j] += tokens(i, j);
  }
  for (double& v : mean) v /= static_cast<double>(tokens.rows());
  return mean;
}

// ELU with unit scale: identity for x > 0, continuously differentiable.
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

struct ProjectionHead {
  Matrix w1;               // d x h
  std::vector<double> b1;  // h
  Matrix w2;               // h x d'
  std::vector<double> b2;  // d'

  std::size_t input_dim() const { return w1.rows(); }
  std::size_t hidden_dim() const { return w1.cols(); }
  std::size_t output_dim() const { return w2.cols(); }

  void validate() const {
    if (w1.rows() == 0 || b1.size() != w1.cols() || w2.rows() != w1.cols() ||
        b2.size() != w2.cols() || w2.cols() == 0) {
      throw Error(ErrorCode::kDimensionMismatch, "projection head shapes are inconsistent");
    }
    if (output_dim() > input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "projection output exceeds input dimension");
    }
    auto finite = [](std::span<const double> v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!w1.all_finite() || !w2.all_finite() || !finite(b1) || !finite(b2)) {
      throw Error(ErrorCode::kNonFiniteComponent, "projection head has non-finite parameters");
    }
  }

  static ProjectionHead identity(std::size_t d) {
    return {Matrix::identity(d), std::vector<double>(d, 0.0), Matrix::identity(d),
            std::vector<double>(d, 0.0)};
  }

  // Gaussian weights scaled by 1/sqrt(fan_in), small Gaussian biases.
  static ProjectionHead random(std::size_t d, std::size_t hidden, std::size_t out, Rng& rng) {
    ProjectionHead h;
    h.w1 = rng.normal_matrix(d, hidden, 1.0 / std::sqrt(static_cast<double>(d)));
    h.b1.resize(hidden);
    for (double& v : h.b1) v = 0.1 * rng.normal();
    h.w2 = rng.normal_matrix(hidden, out, 1.0 / std::sqrt(static_cast<double>(hidden)));
    h.b2.resize(out);
    for (double& v : h.b2) v = 0.1 * rng.normal();
    return h;
  }
};

struct ProjectionGrad {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  static ProjectionGrad zeros_like(const ProjectionHead& h) {
    return {Matrix(h.w1.rows(), h.w1.cols()), std::vector<double>(h.b1.size(), 0.0),
            Matrix(h.w2.rows(), h.w2.cols()), std::vector<double>(h.b2.size(), 0.0)};
  }
};

// Intermediate values of a projection forward pass, kept for backward.
struct ProjectionCache {
  Matrix input;
  Matrix pre_activation;
  Matrix activation;
  std::vector<double> norms;
  Matrix output;
};

inline ProjectionCache project_forward(const Matrix& x, const ProjectionHead& head) {
  head.validate();
  if (x.cols() != head.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding width differs from projection input");
  }
  ProjectionCache c;
  c.input = x;
  c.pre_activation = matmul(x, head.w1);
  c.activation = Matrix(x.rows(), head.hidden_dim());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < head.hidden_dim(); ++j) {
      c.pre_activation(i, j) += head.b1[j];
      c.activation(i, j) = elu(c.pre_activation(i, j));
    }
  }
  c.output = matmul(c.activation, head.w2);
  c.norms.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = c.output.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += head.b2[j];
    const double n = l2_norm(r);
    if (!(n >= kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector,
                  "projected row " + std::to_string(i) + " has norm below 1e-12",
                  std::to_string(i));
    }
    c.norms[i] = n;
    for (double& v : r) v /= n;
  }
  return c;
}

inline EmbeddingBatch project(const EmbeddingBatch& batch, const ProjectionHead& head) {
  return EmbeddingBatch(project_forward(batch.vectors(), head).output, batch.role());
}

// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline Matrix project_backward(const ProjectionCache& c, const ProjectionHead& head,
                               const Matrix& d_output, ProjectionGrad& grad) {
  const std::size_t n = c.input.rows();
  Matrix d_input(n, head.input_dim());
  std::vector<double> dy(head.output_dim());
  std::vector<double> dpre(head.hidden_dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = c.output.row(i);
    const auto dz = d_output.row(i);
    const double zdz = dot(z, dz);
    for (std::size_t k = 0; k < dy.size(); ++k) dy[k] = (dz[k] - z[k] * zdz) / c.norms[i];

    for (std::size_t j = 0; j < head.hidden_dim(); ++j) {
      const double a = c.activation(i, j);
      double da = 0.0;
      for (std::size_t k = 0; k < dy.size(); ++k) {
        grad.w2(j, k) += a * dy[k];
        da += dy[k] * head.w2(j, k);
      }
      dpre[j] = da * elu_derivative(c.pre_activation(i, j));
    }
    for (std::size_t k = 0; k < dy.size(); ++k) grad.b2[k] += dy[k];
    for (std::size_t j = 0; j < head.hidden_dim(); ++j) grad.b1[j] += dpre[j];
    for (std::size_t m = 0; m < head.input_dim(); ++m) {
      const double xm = c.input(i, m);
      double dx = 0.0;
      for (std::size_t j = 0; j < head.hidden_dim(); ++j) {
        grad.w1(m, j) += xm * dpre[j];
        dx += dpre[j] * head.w1(m, j);
      }
      d_input(i, m) = dx;
    }
  }
  return d_input;
}

enum class Direction { kImageToText, kTextToImage };

struct SimilarityMatrix {
  Matrix p;
  Direction direction = Direction::kImageToText;
  double temperature = kDefaultTemperature;

  std::size_t size() const { return p.rows(); }
};

inline void require_positive_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kNonPositiveTemperature,
                "temperature must be positive and finite, got " + std::to_string(tau));
  }
}

// Row i holds softmax_j(cos(a_i, b_j) / tau).
inline SimilarityMatrix similarity(const EmbeddingBatch& a, const EmbeddingBatch& b, double tau,
                                   Direction direction = Direction::kImageToText) {
  require_positive_temperature(tau);
  if (a.size() != b.size() || a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "similarity needs batches of equal shape");
  }
  const std::size_t n = a.size();
  std::vector<double> na(n), nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    na[i] = l2_norm(a.vectors().row(i));
    nb[i] = l2_norm(b.vectors().row(i));
    if (!(na[i] >= kZeroNormThreshold) || !(nb[i] >= kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector, "cosine similarity of a zero vector");
    }
  }
  SimilarityMatrix s{Matrix(n, n), direction, tau};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s.p(i, j) = dot(a.vectors().row(i), b.vectors().row(j)) / (na[i] * nb[j]) / tau;
    }
  }
  softmax_rows(s.p);
  return s;
}

inline double infonce(const SimilarityMatrix& s) {
  const std::size_t n = s.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += -std::log(s.p(i, i));
  return sum / static_cast<double>(n);
}

inline double ira_loss(const EmbeddingBatch& images, const EmbeddingBatch& texts, double tau) {
  const double v2t = infonce(similarity(images, texts, tau, Direction::kImageToText));
  const double t2v = infonce(similarity(texts, images, tau, Direction::kTextToImage));
  return 0.5 * (v2t + t2v);
}

struct ArsaLoss {
  double value = 0.0;
  std::optional<std::string> diagnostic;
};

// Region-sentence InfoNCE. Row k of `regions` and `sentences` come from the
// same aligned pair; pairs from the whole batch are pooled together.
inline ArsaLoss arsa_loss(const Matrix& regions, const Matrix& sentences, double tau) {
  require_positive_temperature(tau);
  if (regions.rows() != sentences.rows()) {
    throw Error(ErrorCode::kLengthMismatch, "region and sentence counts differ");
  }
  if (regions.rows() == 0) return {0.0, std::string("EmptyPairSet")};
  return {ira_loss(EmbeddingBatch(regions, EmbeddingRole::kRegion),
                   EmbeddingBatch(sentences, EmbeddingRole::kSentence), tau),
          std::nullopt};
}

enum class LabelKind { kHard, kSoft, kMixed };

struct LabelMatrix {
  Matrix rows;
  LabelKind kind = LabelKind::kHard;
  double alpha = 0.0;

  std::size_t size() const { return rows.rows(); }
};

inline LabelMatrix hard_labels(std::size_t n) { return {Matrix::identity(n), LabelKind::kHard, 0.0}; }

inline double tag_cosine(const TagVector& a, const TagVector& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    ab += static_cast<double>(a[j] * b[j]);
    aa += static_cast<double>(a[j]);
    bb += static_cast<double>(b[j]);
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline LabelMatrix soft_labels(std::span<const TagVector> tags, double tau) {
  require_positive_temperature(tau);
  const std::size_t n = tags.size();
  for (const auto& t : tags) {
    if (t.size() != tags.front().size()) {
      throw Error(ErrorCode::kLengthMismatch, "tag vectors differ in length");
    }
  }
  LabelMatrix out{Matrix(n, n), LabelKind::kSoft, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out.rows(i, j) = tag_cosine(tags[i], tags[j]) / tau;
  }
  softmax_rows(out.rows);
  return out;
}

inline LabelMatrix mix_labels(const LabelMatrix& hard, const LabelMatrix& soft, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kAlphaOutOfRange, "alpha must lie in [0, 1]");
  }
  if (hard.size() != soft.size() || hard.rows.cols() != soft.rows.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "label matrices differ in shape");
  }
  LabelMatrix out{Matrix(hard.size(), hard.rows.cols()), LabelKind::kMixed, alpha};
  for (std::size_t i = 0; i < hard.size(); ++i) {
    for (std::size_t j = 0; j < hard.rows.cols(); ++j) {
      out.rows(i, j) = (1.0 - alpha) * hard.rows(i, j) + alpha * soft.rows(i, j);
    }
  }
  return out;
}

// (1/N) sum_i KL(target_i || p_i), with 0 log 0 = 0.
inline double kl_soft_loss(const LabelMatrix& target, const SimilarityMatrix& s) {
  if (target.size() != s.size() || target.rows.cols() != s.p.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "label and similarity matrices differ in shape");
  }
  const std::size_t n = s.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double t = target.rows(i, j);
      if (t > 0.0) sum += t * (std::log(t) - std::log(s.p(i, j)));
    }
  }
  return sum / static_cast<double>(n);
}

inline double soft_loss(const LabelMatrix& target, const EmbeddingBatch& images,
                        const EmbeddingBatch& texts, double tau) {
  const double v2t = kl_soft_loss(target, similarity(images, texts, tau, Direction::kImageToText));
  const double t2v = kl_soft_loss(target, similarity(texts, images, tau, Direction::kTextToImage));
  return 0.5 * (v2t + t2v);
}

struct LossWeights {
  double ira = 1.0;
  double arsa = 1.0;
  double bce = 1.0;
  double soft = 1.0;
};

struct LossBreakdown {
  double l_ira = 0.0;
  double l_arsa = 0.0;
  double l_bce = 0.0;
  double l_soft = 0.0;
  double total = 0.0;
};

// Components are stored unweighted; the total applies the weights in the
// fixed order ira, arsa, bce, soft.
inline LossBreakdown total_loss(double l_ira, double l_arsa, double l_bce, double l_soft,
                                const LossWeights& w = {}) {
  for (double v : {l_ira, l_arsa, l_bce, l_soft, w.ira, w.arsa, w.bce, w.soft}) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteComponent, "loss component is not finite");
    }
  }
  LossBreakdown b{l_ira, l_arsa, l_bce, l_soft, 0.0};
  b.total = w.ira * l_ira + w.arsa * l_arsa + w.bce * l_bce + w.soft * l_soft;
  return b;
}

// ---------------------------------------------------------------------------
// Reverse mode.

struct ContrastiveGrad {
  double loss = 0.0;
  Matrix d_a;
  Matrix d_b;
};

// Two-direction objective between unit-norm rows a and b (logits a_i.b_j/tau).
// With `target` null this is the InfoNCE form of L_ira / L_arsa, otherwise
// the KL form of L_soft against the given target rows.
inline ContrastiveGrad contrastive_grad(const Matrix& a, const Matrix& b, double tau,
                                        const Matrix* target) {
  require_positive_temperature(tau);
  const std::size_t n = a.rows();
  Matrix logits = matmul_bt(a, b);
  for (double& v : logits.values()) v /= tau;
  Matrix p_ab = logits;
  Matrix p_ba = transpose(logits);
  softmax_rows(p_ab);
  softmax_rows(p_ba);

  auto t = [&](std::size_t i, std::size_t j) {
    return target ? (*target)(i, j) : (i == j ? 1.0 : 0.0);
  };
  const double scale = 0.5 / static_cast<double>(n);

  ContrastiveGrad g;
  Matrix d_logits(n, n);
  double loss_ab = 0.0, loss_ba = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_mass = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_mass += t(i, j);
    for (std::size_t j = 0; j < n; ++j) {
      const double tij = t(i, j);
      if (tij > 0.0) {
        const double ent = target ? std::log(tij) : 0.0;
        loss_ab += tij * (ent - std::log(p_ab(i, j)));
        loss_ba += tij * (ent - std::log(p_ba(i, j)));
      }
      d_logits(i, j) += scale * (p_ab(i, j) * row_mass - tij);
      // direction b->a works on the transposed logits
      d_logits(j, i) += scale * (p_ba(i, j) * row_mass - tij);
    }
  }
  g.loss = 0.5 * (loss_ab / static_cast<double>(n) + loss_ba / static_cast<double>(n));
  g.d_a = matmul(d_logits, b);
  g.d_b = matmul_at(d_logits, a);
  for (double& v : g.d_a.values()) v /= tau;
  for (double& v : g.d_b.values()) v /= tau;
  return g;
}

struct ProjectedContrastiveGrad {
  double loss = 0.0;
  Matrix d_raw_a;
  Matrix d_raw_b;
  ProjectionGrad d_head_a;
  ProjectionGrad d_head_b;
};

// Contrastive objective as a function of raw (pre-projection) embeddings and
// both projection heads.
inline ProjectedContrastiveGrad projected_contrastive_grad(const Matrix& raw_a,
                                                           const ProjectionHead& head_a,
                                                           const Matrix& raw_b,
                                                           const ProjectionHead& head_b,
                                                           double tau,
                                                           const LabelMatrix* target) {
  const ProjectionCache ca = project_forward(raw_a, head_a);
  const ProjectionCache cb = project_forward(raw_b, head_b);
  if (ca.output.rows() != cb.output.rows() || ca.output.cols() != cb.output.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "projected batches differ in shape");
  }
  const ContrastiveGrad g =
      contrastive_grad(ca.output, cb.output, tau, target ? &target->rows : nullptr);
  ProjectedContrastiveGrad out;
  out.loss = g.loss;
  out.d_head_a = ProjectionGrad::zeros_like(head_a);
  out.d_head_b = ProjectionGrad::zeros_like(head_b);
  out.d_raw_a = project_backward(ca, head_a, g.d_a, out.d_head_a);
  out.d_raw_b = project_backward(cb, head_b, g.d_b, out.d_head_b);
  return out;
}

enum class ContrastiveObjective { kIra, kArsa, kSoft };

inline std::vector<double*> parameter_refs(ProjectionHead& h) {
  std::vector<double*> refs;
  for (double& v : h.w1.values()) refs.push_back(&v);
  for (double& v : h.b1) refs.push_back(&v);
  for (double& v : h.w2.values()) refs.push_back(&v);
  for (double& v : h.b2) refs.push_back(&v);
  return refs;
}

inline void append_flat(std::vector<double>& out, const ProjectionGrad& g) {
  out.insert(out.end(), g.w1.values().begin(), g.w1.values().end());
  out.insert(out.end(), g.b1.begin(), g.b1.end());
  out.insert(out.end(), g.w2.values().begin(), g.w2.values().end());
  out.insert(out.end(), g.b2.begin(), g.b2.end());
}

// Max relative error between projected_contrastive_grad and central
// differences of the forward loss (project -> similarity -> loss), over the
// raw embeddings and all parameters of both heads. `target` is required for
// kSoft and ignored otherwise.
inline double contrastive_grad_check(ContrastiveObjective objective, const Matrix& raw_a,
                                     const ProjectionHead& head_a, const Matrix& raw_b,
                                     const ProjectionHead& head_b, double tau,
                                     const LabelMatrix* target = nullptr,
                                     double step = kFiniteDifferenceStep) {
  if (objective == ContrastiveObjective::kSoft && target == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "soft objective needs a target label matrix");
  }
  const LabelMatrix* t = objective == ContrastiveObjective::kSoft ? target : nullptr;
  const auto g = projected_contrastive_grad(raw_a, head_a, raw_b, head_b, tau, t);
  std::vector<double> analytic(g.d_raw_a.values().begin(), g.d_raw_a.values().end());
  analytic.insert(analytic.end(), g.d_raw_b.values().begin(), g.d_raw_b.values().end());
  append_flat(analytic, g.d_head_a);
  append_flat(analytic, g.d_head_b);

  Matrix a = raw_a, b = raw_b;
  ProjectionHead ha = head_a, hb = head_b;
  std::vector<double*> refs;
  for (double& v : a.values()) refs.push_back(&v);
  for (double& v : b.values()) refs.push_back(&v);
  for (double* p : parameter_refs(ha)) refs.push_back(p);
  for (double* p : parameter_refs(hb)) refs.push_back(p);

  const EmbeddingRole role_a =
      objective == ContrastiveObjective::kArsa ? EmbeddingRole::kRegion : EmbeddingRole::kImage;
  const EmbeddingRole role_b =
      objective == ContrastiveObjective::kArsa ? EmbeddingRole::kSentence : EmbeddingRole::kText;
  auto loss = [&] {
    const EmbeddingBatch pa = project(EmbeddingBatch(a, role_a), ha);
    const EmbeddingBatch pb = project(EmbeddingBatch(b, role_b), hb);
    switch (objective) {
      case ContrastiveObjective::kIra: return ira_loss(pa, pb, tau);
      case ContrastiveObjective::kArsa: return arsa_loss(pa.vectors(), pb.vectors(), tau).value;
      case ContrastiveObjective::kSoft: return soft_loss(*target, pa, pb, tau);
    }
    return 0.0;
  };
  return max_relative_error(analytic, central_differences(loss, refs, step));
}

}  // namespace asg
