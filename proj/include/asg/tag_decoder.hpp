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

// Image-tag recognition decoder: one single-head cross-attention layer in
// which disease-class queries attend over visual tokens, followed by a
// shared linear readout and a logistic per class.
//
//   attn    = rowsoftmax((Q Wq) (Z Wk)^T / sqrt(d))     M_Q x M_Z
//   context = attn (Z Wv)                               M_Q x d
//   prob_j  = logistic(context_j . w_out + b_out)

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "asg/error.hpp"
#include "asg/grad_check.hpp"
#include "asg/io.hpp"
#include "asg/matrix.hpp"
#include "asg/report_parsing.hpp"
#include "asg/rng.hpp"

namespace asg {

inline constexpr double kProbabilityEpsilon = 1e-12;

struct VisualTokens {
  Matrix z;  // M_Z x d
};

struct QuerySet {
  Matrix q;  // M_Q x d
};

struct DecoderParams {
  Matrix wq, wk, wv;           // d x d
  std::vector<double> w_out;   // d
  double b_out = 0.0;

  std::size_t dim() const { return wq.rows(); }

  void validate(std::size_t d) const {
    for (const Matrix* m : {&wq, &wk, &wv}) {
      if (m->rows() != d || m->cols() != d) {
        throw Error(ErrorCode::kDimensionMismatch, "decoder projections must be d x d");
      }
      if (!m->all_finite()) {
        throw Error(ErrorCode::kNonFiniteComponent, "decoder parameters are not finite");
      }
    }
    if (w_out.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "decoder readout must have length d");
    }
    if (!std::isfinite(b_out) ||
        !std::all_of(w_out.begin(), w_out.end(), [](double v) { return std::isfinite(v); })) {
      throw Error(ErrorCode::kNonFiniteComponent, "decoder parameters are not finite");
    }
  }

  static DecoderParams random(std::size_t d, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    DecoderParams p;
    p.wq = rng.normal_matrix(d, d, s);
    p.wk = rng.normal_matrix(d, d, s);
    p.wv = rng.normal_matrix(d, d, s);
    p.w_out.resize(d);
    for (double& v : p.w_out) v = s * rng.normal();
    p.b_out = 0.1 * rng.normal();
    return p;
  }

  std::vector<double*> parameter_refs() {
    std::vector<double*> refs;
    for (Matrix* m : {&wq, &wk, &wv}) {
      for (double& v : m->values()) refs.push_back(&v);
    }
    for (double& v : w_out) refs.push_back(&v);
    refs.push_back(&b_out);
    return refs;
  }
};

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct DecoderTrace {
  Matrix q_proj;     // Q Wq
  Matrix k_proj;     // Z Wk
  Matrix v_proj;     // Z Wv
  Matrix attention;  // M_Q x M_Z
  Matrix context;    // M_Q x d
  std::vector<double> logits;
  std::vector<double> probs;
};

inline DecoderTrace decode_tags_trace(const VisualTokens& tokens, const QuerySet& queries,
                                      const DecoderParams& params) {
  const std::size_t d = queries.q.cols();
  if (tokens.z.cols() != d || tokens.z.rows() == 0 || queries.q.rows() == 0 ||
      params.dim() != d) {
    throw Error(ErrorCode::kDimensionMismatch,
                "tokens, queries and decoder parameters must share width d");
  }
  params.validate(d);
  DecoderTrace t;
  t.q_proj = matmul(queries.q, params.wq);
  t.k_proj = matmul(tokens.z, params.wk);
  t.v_proj = matmul(tokens.z, params.wv);
  t.attention = matmul_bt(t.q_proj, t.k_proj);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& v : t.attention.values()) v *= scale;
  softmax_rows(t.attention);
  t.context = matmul(t.attention, t.v_proj);
  t.logits.resize(queries.q.rows());
  t.probs.resize(queries.q.rows());
  for (std::size_t j = 0; j < queries.q.rows(); ++j) {
    t.logits[j] = dot(t.context.row(j), params.w_out) + params.b_out;
    t.probs[j] = logistic(t.logits[j]);
  }
  return t;
}

inline std::vector<double> decode_tags(const VisualTokens& tokens, const QuerySet& queries,
                                       const DecoderParams& params) {
  return decode_tags_trace(tokens, queries, params).probs;
}

// Binary cross-entropy averaged over classes; probabilities are clamped to
// [eps, 1 - eps] before the logarithms.
inline double bce_loss(std::span<const double> probs, const TagVector& labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "probability and label lengths differ");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double p = std::clamp(probs[j], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    sum += labels[j] ? std::log(p) : std::log1p(-p);
  }
  return -sum / static_cast<double>(probs.size());
}

// Batch mean of the per-sample bce_loss.
inline double bce_batch_loss(std::span<const std::vector<double>> probs,
                             std::span<const TagVector> labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "batch sizes of probabilities and labels differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) sum += bce_loss(probs[i], labels[i]);
  return sum / static_cast<double>(probs.size());
}

struct DecoderGrad {
  double loss = 0.0;
  Matrix wq, wk, wv;
  std::vector<double> w_out;
  double b_out = 0.0;

  std::vector<double> flatten() const {
    std::vector<double> out;
    for (const Matrix* m : {&wq, &wk, &wv}) out.insert(out.end(), m->values().begin(), m->values().end());
    out.insert(out.end(), w_out.begin(), w_out.end());
    out.push_back(b_out);
    return out;
  }
};

// Gradient of bce_loss(decode_tags(...), labels) w.r.t. every decoder
// parameter. Clamped probabilities contribute zero gradient.
inline DecoderGrad bce_decoder_grad(const VisualTokens& tokens, const QuerySet& queries,
                                    const DecoderParams& params, const TagVector& labels) {
  const DecoderTrace t = decode_tags_trace(tokens, queries, params);
  const std::size_t d = params.dim();
  const std::size_t mq = queries.q.rows();
  DecoderGrad g;
  g.loss = bce_loss(t.probs, labels);

  std::vector<double> d_logit(mq);
  for (std::size_t j = 0; j < mq; ++j) {
    const double p = t.probs[j];
    if (p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon) {
      d_logit[j] = 0.0;
      continue;
    }
    const double dp = labels[j] ? -1.0 / p : 1.0 / (1.0 - p);
    d_logit[j] = dp * p * (1.0 - p) / static_cast<double>(mq);
  }

  g.w_out.assign(d, 0.0);
  Matrix d_context(mq, d);
  for (std::size_t j = 0; j < mq; ++j) {
    g.b_out += d_logit[j];
    for (std::size_t k = 0; k < d; ++k) {
      g.w_out[k] += d_logit[j] * t.context(j, k);
      d_context(j, k) = d_logit[j] * params.w_out[k];
    }
  }

  const Matrix d_attention = matmul_bt(d_context, t.v_proj);  // M_Q x M_Z
  const Matrix d_vproj = matmul_at(t.attention, d_context);   // M_Z x d

  Matrix d_scores(mq, tokens.z.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t j = 0; j < mq; ++j) {
    const double inner = dot(t.attention.row(j), d_attention.row(j));
    for (std::size_t m = 0; m < tokens.z.rows(); ++m) {
      d_scores(j, m) = t.attention(j, m) * (d_attention(j, m) - inner) * scale;
    }
  }
  const Matrix d_qproj = matmul(d_scores, t.k_proj);     // M_Q x d
  const Matrix d_kproj = matmul_at(d_scores, t.q_proj);  // M_Z x d

  g.wq = matmul_at(queries.q, d_qproj);
  g.wk = matmul_at(tokens.z, d_kproj);
  g.wv = matmul_at(tokens.z, d_vproj);
  return g;
}

// Max relative error between bce_decoder_grad and central differences over
// every decoder parameter.
inline double decoder_grad_check(const VisualTokens& tokens, const QuerySet& queries,
                                 const DecoderParams& params, const TagVector& labels,
                                 double step = kFiniteDifferenceStep) {
  const std::vector<double> analytic = bce_decoder_grad(tokens, queries, params, labels).flatten();
  DecoderParams probe = params;
  const auto refs = probe.parameter_refs();
  const std::vector<double> numeric = central_differences(
      [&] { return bce_loss(decode_tags(tokens, queries, probe), labels); }, refs, step);
  return max_relative_error(analytic, numeric);
}

// Binary layout: uint64 d, uint64 M_Q, then Wq, Wk, Wv (row-major d x d),
// w_out (d), b_out, queries (row-major M_Q x d); all little-endian float64.
inline void write_decoder_bin(std::ostream& out, const DecoderParams& p, const QuerySet& q) {
  const std::uint64_t header[2] = {p.dim(), q.q.rows()};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  auto put = [&](std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  put(p.wq.values());
  put(p.wk.values());
  put(p.wv.values());
  put(p.w_out);
  put(std::span<const double>(&p.b_out, 1));
  put(q.q.values());
}

inline std::pair<DecoderParams, QuerySet> read_decoder_bin(std::istream& in) {
  std::uint64_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header) || header[0] == 0 ||
      header[0] > 4096 || header[1] > (1u << 20)) {
    throw Error(ErrorCode::kMalformedRecord, "bad decoder parameter header");
  }
  const std::size_t d = header[0];
  DecoderParams p{Matrix(d, d), Matrix(d, d), Matrix(d, d), std::vector<double>(d), 0.0};
  QuerySet q{Matrix(header[1], d)};
  auto get = [&](std::span<double> v) {
    if (!in.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)))) {
      throw Error(ErrorCode::kMalformedRecord, "truncated decoder parameter file");
    }
  };
  get(p.wq.values());
  get(p.wk.values());
  get(p.wv.values());
  get(p.w_out);
  get(std::span<double>(&p.b_out, 1));
  get(q.q.values());
  p.validate(d);
  return {std::move(p), std::move(q)};
}

inline nlohmann::json decoder_to_json(const DecoderParams& p, const QuerySet& q) {
  return {{"d", p.dim()},
          {"m_q", q.q.rows()},
          {"wq", io::matrix_to_json(p.wq)},
          {"wk", io::matrix_to_json(p.wk)},
          {"wv", io::matrix_to_json(p.wv)},
          {"w_out", p.w_out},
          {"b_out", p.b_out},
          {"queries", io::matrix_to_json(q.q)}};
}

inline std::pair<DecoderParams, QuerySet> decoder_from_json(const nlohmann::json& doc) {
  try {
    DecoderParams p;
    p.wq = io::matrix_from_json(doc.at("wq"));
    p.wk = io::matrix_from_json(doc.at("wk"));
    p.wv = io::matrix_from_json(doc.at("wv"));
    p.w_out = doc.at("w_out").get<std::vector<double>>();
    p.b_out = doc.at("b_out").get<double>();
    QuerySet q{io::matrix_from_json(doc.at("queries"))};
    const auto d = doc.at("d").get<std::size_t>();
    p.validate(d);
    if (q.q.cols() != d || q.q.rows() != doc.at("m_q").get<std::size_t>()) {
      throw Error(ErrorCode::kDimensionMismatch, "query matrix does not match header");
    }
    return {std::move(p), std::move(q)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, std::string("decoder parameters: ") + e.what());
  }
}

}  // namespace asg
