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
#include <cstdint>
#include <optional>
#include <random>

#include "dsattn/core.hpp"

namespace dsattn {

inline constexpr double kRankDeficiencyThreshold = 1e-10;
inline constexpr double kRankNoiseStddev = 1e-7;
inline constexpr int kMaxNoiseRestarts = 5;

namespace detail {

// Modified Gram-Schmidt with one re-orthogonalization sweep per column.
// Returns nullopt when a pivot norm falls below `threshold`.
inline std::optional<SquareMatrix> mgs_orthonormalize(const SquareMatrix& m, double threshold) {
  const std::size_t n = m.n();
  SquareMatrix q = m;  // columns are orthonormalized in place
  for (std::size_t j = 0; j < n; ++j) {
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (std::size_t k = 0; k < j; ++k) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    if (norm < threshold) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

inline double max_column_norm(const SquareMatrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.n(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.n(); ++i) s += m(i, j) * m(i, j);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

}  // namespace detail

/// Orthogonal factor Q of m = QR (diag(R) > 0). Rank-deficient inputs get
/// N(0, 1e-7) entrywise noise from `noise_seed` and are retried, at most
/// five times.
inline SquareMatrix qr_orthonormalize(const SquareMatrix& m, std::uint64_t noise_seed) {
  // pivot threshold is relative to the input scale so that QR(lambda m) = QR(m)
  const double scale = detail::max_column_norm(m);
  const double threshold = kRankDeficiencyThreshold * (scale > 0.0 ? scale : 1.0);
  if (auto q = detail::mgs_orthonormalize(m, threshold)) return *std::move(q);

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, kRankNoiseStddev);
  SquareMatrix perturbed = m;
  for (int restart = 0; restart < kMaxNoiseRestarts; ++restart) {
    for (double& v : perturbed.data()) v += noise(rng);
    const double s = detail::max_column_norm(perturbed);
    if (auto q = detail::mgs_orthonormalize(perturbed, kRankDeficiencyThreshold * (s > 0.0 ? s : 1.0)))
      return *std::move(q);
  }
  throw NumericalError("qr_orthonormalize: input remains rank deficient after noise injection");
}

/// Orthostochastic DSM Q (.) Q.
inline Dsm qr_dsm(const SquareMatrix& m, std::uint64_t noise_seed) {
  SquareMatrix q = qr_orthonormalize(m, noise_seed);
  for (double& v : q.data()) v *= v;
  return Dsm(std::move(q));
}

}  // namespace dsattn
