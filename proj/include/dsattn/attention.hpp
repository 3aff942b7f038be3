// Copyright 2026 The dsattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "dsattn/birkhoff.hpp"
#include "dsattn/core.hpp"
#include "dsattn/qontot.hpp"
#include "dsattn/qr_dsm.hpp"
#include "dsattn/sinkhorn.hpp"

namespace dsattn {

/// Row-major rows x cols matrix for queries, keys and values.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw DimensionError("DenseMatrix: entry count does not match shape");
    for (double v : data_)
      if (!std::isfinite(v)) throw UsageError("DenseMatrix: non-finite entry");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  const std::vector<double>& values() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

template <class Rng>
DenseMatrix gaussian_dense(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = dist(rng);
  return DenseMatrix(rows, cols, std::move(v));
}

/// a * b^T for a, b with equal column counts; square when rows agree.
inline SquareMatrix outer_logits(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols() || a.rows() != b.rows())
    throw DimensionError("attention: query and key shapes must match (T x d_k)");
  const std::size_t t = a.rows();
  SquareMatrix s(t);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      s(i, j) = acc;
    }
  return s;
}

inline DenseMatrix apply_weights(const SquareMatrix& attn, const DenseMatrix& v) {
  if (attn.n() != v.rows()) throw DimensionError("attention: value rows must equal sequence length");
  DenseMatrix out(v.rows(), v.cols());
  for (std::size_t i = 0; i < attn.n(); ++i)
    for (std::size_t k = 0; k < attn.n(); ++k) {
      const double w = attn(i, k);
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, j) += w * v(k, j);
    }
  return out;
}

/// Row-wise softmax of m / tau, max-subtracted.
inline SquareMatrix softmax_rows(const SquareMatrix& m, double tau) {
  if (!(tau > 0.0)) throw UsageError("softmax: temperature must be > 0");
  const std::size_t n = m.n();
  SquareMatrix y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = m.row(i);
    const double hi = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y(i, j) = std::exp((m(i, j) - hi) / tau);
      s += y(i, j);
    }
    for (double& v : y.row(i)) v /= s;
  }
  return y;
}

inline constexpr double kNormSoftmaxFloor = 1e-6;

/// Temperature actually used by norm_softmax: max(min(stat, tau), 1e-6)
/// with stat the population std (power 1) or variance (power 2) of all
/// entries of m.
inline double norm_softmax_temperature(const SquareMatrix& m, double tau, int power) {
  if (power != 1 && power != 2) throw UsageError("norm_softmax: power must be 1 or 2");
  const double count = static_cast<double>(m.size());
  double mean = 0.0;
  for (double v : m.data()) mean += v;
  mean /= count;
  double var = 0.0;
  for (double v : m.data()) var += (v - mean) * (v - mean);
  var /= count;
  const double stat = power == 1 ? std::sqrt(var) : var;
  return std::max(std::min(stat, tau), kNormSoftmaxFloor);
}

inline SquareMatrix norm_softmax(const SquareMatrix& m, double tau, int power) {
  if (!(tau > 0.0)) throw UsageError("norm_softmax: temperature must be > 0");
  return softmax_rows(m, norm_softmax_temperature(m, tau, power));
}

namespace normalizer {
struct Softmax {};
struct SoftmaxSigma {};
struct SoftmaxSigma2 {};
struct SinkhornNaive {
  int k = 3;
};
struct SinkhornOT {
  int k = 3;
};
struct QrDsm {
  std::uint64_t seed = 0;
};
struct Qontot {
  CircuitConfig config;
  ParamVec theta;
};
struct BirkhoffProject {
  ProjectionSettings settings;
};
}  // namespace normalizer

using NormalizerKind =
    std::variant<normalizer::Softmax, normalizer::SoftmaxSigma, normalizer::SoftmaxSigma2, normalizer::SinkhornNaive,
                 normalizer::SinkhornOT, normalizer::QrDsm, normalizer::Qontot, normalizer::BirkhoffProject>;

inline bool is_softmax_family(const NormalizerKind& k) {
  return std::holds_alternative<normalizer::Softmax>(k) || std::holds_alternative<normalizer::SoftmaxSigma>(k) ||
         std::holds_alternative<normalizer::SoftmaxSigma2>(k);
}

struct AttentionConfig {
  std::size_t seq_len = 8;
  std::size_t head_dim = 64;
  std::optional<double> temperature;  // default sqrt(head_dim)
  NormalizerKind normalizer = normalizer::Softmax{};

  double tau() const { return temperature.value_or(std::sqrt(static_cast<double>(head_dim))); }

  void validate() const {
    if (seq_len < 1) throw UsageError("attention: seq_len must be >= 1");
    if (head_dim < 1) throw UsageError("attention: head_dim must be >= 1");
    if (!(tau() > 0.0)) throw UsageError("attention: temperature must be > 0");
  }
};

/// Normalizes the raw score matrix Q K^T.
///
/// Softmax family: softmax(S / tau) (NormSoftmax swaps in its own
/// temperature, computed from S). Sinkhorn: exp_scale(S, tau) then k
/// passes. QR, QontOT and the projection take S / tau directly, since they
/// accept arbitrary real matrices.
inline SquareMatrix normalize_scores(const SquareMatrix& scores, double tau, const NormalizerKind& kind) {
  return std::visit(
      [&](const auto& nk) -> SquareMatrix {
        using K = std::decay_t<decltype(nk)>;
        if constexpr (std::is_same_v<K, normalizer::Softmax>) {
          return softmax_rows(scores, tau);
        } else if constexpr (std::is_same_v<K, normalizer::SoftmaxSigma>) {
          return norm_softmax(scores, tau, 1);
        } else if constexpr (std::is_same_v<K, normalizer::SoftmaxSigma2>) {
          return norm_softmax(scores, tau, 2);
        } else if constexpr (std::is_same_v<K, normalizer::SinkhornNaive>) {
          return sinkhorn_naive(exp_scale(scores, tau), nk.k);
        } else if constexpr (std::is_same_v<K, normalizer::SinkhornOT>) {
          return sinkhorn_ot_log(scores * (1.0 / tau), nk.k);
        } else if constexpr (std::is_same_v<K, normalizer::QrDsm>) {
          return qr_dsm(scores * (1.0 / tau), nk.seed).matrix();
        } else if constexpr (std::is_same_v<K, normalizer::Qontot>) {
          return simulate_dsm(nk.config, nk.theta, scores * (1.0 / tau)).matrix();
        } else {
          return project(scores * (1.0 / tau), nk.settings).matrix();
        }
      },
      kind);
}

struct AttentionResult {
  DenseMatrix output;
  SquareMatrix attn;
};

inline AttentionResult attention_forward(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v,
                                         const AttentionConfig& config) {
  config.validate();
  if (q.rows() != config.seq_len || q.cols() != config.head_dim)
    throw DimensionError("attention: queries must be seq_len x head_dim");
  if (v.rows() != config.seq_len) throw DimensionError("attention: values must have seq_len rows");
  SquareMatrix attn = normalize_scores(outer_logits(q, k), config.tau(), config.normalizer);
  DenseMatrix out = apply_weights(attn, v);
  return {std::move(out), std::move(attn)};
}

/// Reverse-mode derivative of <upstream, sinkhorn_naive(m, k)> w.r.t. m.
/// The forward iterates are recorded and each normalization pass is
/// differentiated in reverse: for y = x / s with s the column (row) sum,
/// dx = (g - <g, y>) / s along that column (row).
inline SquareMatrix sinkhorn_naive_vjp(const SquareMatrix& m, int k, const SquareMatrix& upstream) {
  if (upstream.n() != m.n()) throw DimensionError("sinkhorn_naive_vjp: upstream shape mismatch");
  detail::require_sinkhorn_input(m, k);
  const std::size_t n = m.n();
  std::vector<SquareMatrix> iterates;
  iterates.reserve(static_cast<std::size_t>(k) + 1);
  iterates.push_back(m);
  for (int t = 0; t < k; ++t) {
    SquareMatrix x = iterates.back();
    if (t % 2 == 1)
      detail::normalize_columns(x);
    else
      detail::normalize_rows(x);
    iterates.push_back(std::move(x));
  }
  SquareMatrix g = upstream;
  for (int t = k - 1; t >= 0; --t) {
    const SquareMatrix& x = iterates[static_cast<std::size_t>(t)];
    const SquareMatrix& y = iterates[static_cast<std::size_t>(t) + 1];
    SquareMatrix dx(n);
    if (t % 2 == 1) {
      for (std::size_t j = 0; j < n; ++j) {
        const double s = x.col_sum(j);
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += g(i, j) * y(i, j);
        for (std::size_t i = 0; i < n; ++i) dx(i, j) = (g(i, j) - dot) / s;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double s = x.row_sum(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * y(i, j);
        for (std::size_t j = 0; j < n; ++j) dx(i, j) = (g(i, j) - dot) / s;
      }
    }
    g = std::move(dx);
  }
  return g;
}

/// Reverse-mode derivative of <upstream, softmax_rows(m, tau)> w.r.t. m:
/// row-wise y (.) (g - <g, y>) / tau.
inline SquareMatrix softmax_vjp(const SquareMatrix& m, double tau, const SquareMatrix& upstream) {
  if (upstream.n() != m.n()) throw DimensionError("softmax_vjp: upstream shape mismatch");
  const SquareMatrix y = softmax_rows(m, tau);
  const std::size_t n = m.n();
  SquareMatrix dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += upstream(i, j) * y(i, j);
    for (std::size_t j = 0; j < n; ++j) dx(i, j) = y(i, j) * (upstream(i, j) - dot) / tau;
  }
  return dx;
}

}  // namespace dsattn
