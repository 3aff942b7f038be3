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

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "dsattn/core.hpp"

// Sinkhorn normalization of strictly positive matrices.
//
// Both flavors run exactly k passes numbered t = 1..k: odd t normalizes
// rows, even t normalizes columns. k must be odd so the first and last
// passes are row passes and the result is row-stochastic to round-off. The naive flavor
// rescales the matrix in place; the OT flavor keeps log-domain dual
// potentials (u, v) against unit marginals and only exponentiates at the end.

namespace dsattn {

enum class SinkhornFlavor { Naive, OT };

struct SinkhornSettings {
  int iterations = 21;
  SinkhornFlavor flavor = SinkhornFlavor::Naive;
  double temperature = 1.0;

  void validate() const {
    if (iterations < 1 || iterations % 2 == 0)
      throw UsageError("sinkhorn: iteration count must be a positive odd integer, got " +
                       std::to_string(iterations));
    if (!(temperature > 0.0)) throw UsageError("sinkhorn: temperature must be > 0");
  }
};

/// exp(m / tau) shifted by the global max so the largest entry is 1.
inline SquareMatrix exp_scale(const SquareMatrix& m, double tau) {
  if (!(tau > 0.0)) throw UsageError("exp_scale: temperature must be > 0");
  const double shift = m.max_entry() / tau;
  SquareMatrix out(m.n());
  for (std::size_t k = 0; k < m.size(); ++k) out.data()[k] = std::exp(m.data()[k] / tau - shift);
  return out;
}

namespace detail {

inline void require_sinkhorn_input(const SquareMatrix& m, int k) {
  if (k < 1 || k % 2 == 0)
    throw UsageError("sinkhorn: iteration count must be a positive odd integer, got " + std::to_string(k));
  for (double v : m.data()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("sinkhorn: input entries must be finite and > 0");
  }
}

inline void normalize_columns(SquareMatrix& x) {
  const std::size_t n = x.n();
  for (std::size_t j = 0; j < n; ++j) {
    const double s = x.col_sum(j);
    for (std::size_t i = 0; i < n; ++i) x(i, j) /= s;
  }
}

inline void normalize_rows(SquareMatrix& x) {
  for (std::size_t i = 0; i < x.n(); ++i) {
    const double s = x.row_sum(i);
    for (double& v : x.row(i)) v /= s;
  }
}

inline double log_sum_exp(const double* first, std::size_t count, std::size_t stride, const double* offset,
                          std::size_t offset_stride) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < count; ++t) hi = std::max(hi, first[t * stride] + offset[t * offset_stride]);
  double s = 0.0;
  for (std::size_t t = 0; t < count; ++t) s += std::exp(first[t * stride] + offset[t * offset_stride] - hi);
  return hi + std::log(s);
}

}  // namespace detail

/// Alternating row/column normalization; `k` passes, starting with rows.
inline SquareMatrix sinkhorn_naive(const SquareMatrix& m, int k) {
  detail::require_sinkhorn_input(m, k);
  SquareMatrix x = m;
  for (int t = 0; t < k; ++t) {
    if (t % 2 == 1)
      detail::normalize_columns(x);
    else
      detail::normalize_rows(x);
  }
  return x;
}

/// Log-domain Sinkhorn on a log-kernel. Accepts arbitrary finite logits, so
/// callers holding logits never need to exponentiate them first.
inline SquareMatrix sinkhorn_ot_log(const SquareMatrix& log_kernel, int k) {
  if (k < 1 || k % 2 == 0)
    throw UsageError("sinkhorn: iteration count must be a positive odd integer, got " + std::to_string(k));
  if (!log_kernel.all_finite()) throw UsageError("sinkhorn: non-finite log-kernel");
  const std::size_t n = log_kernel.n();
  const double* lk = log_kernel.data().data();
  std::vector<double> u(n, 0.0), v(n, 0.0);
  for (int t = 0; t < k; ++t) {
    if (t % 2 == 1) {
      for (std::size_t j = 0; j < n; ++j) v[j] = -detail::log_sum_exp(lk + j, n, n, u.data(), 1);
    } else {
      for (std::size_t i = 0; i < n; ++i) u[i] = -detail::log_sum_exp(lk + i * n, n, 1, v.data(), 1);
    }
  }
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = std::exp(log_kernel(i, j) + u[i] + v[j]);
  return out;
}

inline SquareMatrix sinkhorn_ot(const SquareMatrix& m, int k) {
  detail::require_sinkhorn_input(m, k);
  SquareMatrix log_kernel(m.n());
  for (std::size_t q = 0; q < m.size(); ++q) log_kernel.data()[q] = std::log(m.data()[q]);
  return sinkhorn_ot_log(log_kernel, k);
}

inline SquareMatrix sinkhorn(const SquareMatrix& m, const SinkhornSettings& s) {
  s.validate();
  return s.flavor == SinkhornFlavor::Naive ? sinkhorn_naive(m, s.iterations) : sinkhorn_ot(m, s.iterations);
}

/// Full pipeline from real-valued logits: exp_scale(m, tau) then Sinkhorn.
/// The OT flavor skips the explicit exponentiation and works on m / tau.
inline SquareMatrix sinkhorn_from_logits(const SquareMatrix& logits, const SinkhornSettings& s) {
  s.validate();
  if (s.flavor == SinkhornFlavor::Naive) return sinkhorn_naive(exp_scale(logits, s.temperature), s.iterations);
  return sinkhorn_ot_log(logits * (1.0 / s.temperature), s.iterations);
}

}  // namespace dsattn
