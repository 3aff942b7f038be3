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
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "dsattn/attention.hpp"
#include "dsattn/core.hpp"

namespace dsattn {

/// Central-difference gradient of <upstream, f(m)> with step h.
inline SquareMatrix finite_difference_vjp(const std::function<SquareMatrix(const SquareMatrix&)>& f,
                                          const SquareMatrix& m, const SquareMatrix& upstream, double h = 1e-5) {
  auto loss = [&](const SquareMatrix& x) {
    const SquareMatrix y = f(x);
    double s = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) s += upstream.data()[k] * y.data()[k];
    return s;
  };
  SquareMatrix g(m.n());
  SquareMatrix x = m;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double orig = x.data()[k];
    x.data()[k] = orig + h;
    const double up = loss(x);
    x.data()[k] = orig - h;
    const double down = loss(x);
    x.data()[k] = orig;
    g.data()[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b||_F / max(||a||_F, ||b||_F), 0 when both vanish.
inline double relative_error(const SquareMatrix& a, const SquareMatrix& b) {
  const double scale = std::max(frobenius_norm(a), frobenius_norm(b));
  if (scale == 0.0) return 0.0;
  return frobenius_distance(a, b) / scale;
}

enum class GradientTarget { SinkhornNaive, Softmax };

/// Max relative error between the analytic VJP and central differences over
/// `trials` random n x n inputs (entries U(0.1, 10) for Sinkhorn, N(0,1)
/// for softmax) with N(0,1) upstream gradients.
inline double gradcheck(GradientTarget target, int k, std::size_t n, int trials, std::uint64_t seed,
                        double tau = 1.0) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const SquareMatrix g = gaussian_matrix(n, rng);
    if (target == GradientTarget::SinkhornNaive) {
      const SquareMatrix m = uniform_matrix(n, rng, 0.1, 10.0);
      const SquareMatrix analytic = sinkhorn_naive_vjp(m, k, g);
      const SquareMatrix numeric =
          finite_difference_vjp([k](const SquareMatrix& x) { return sinkhorn_naive(x, k); }, m, g);
      worst = std::max(worst, relative_error(analytic, numeric));
    } else {
      const SquareMatrix m = gaussian_matrix(n, rng);
      const SquareMatrix analytic = softmax_vjp(m, tau, g);
      const SquareMatrix numeric =
          finite_difference_vjp([tau](const SquareMatrix& x) { return softmax_rows(x, tau); }, m, g);
      worst = std::max(worst, relative_error(analytic, numeric));
    }
  }
  return worst;
}

}  // namespace dsattn
