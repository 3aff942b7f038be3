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

// Slow, independent reference implementations used only by the tests. None
// of these call into the library code they are checking.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "dsattn/core.hpp"
#include "dsattn/qontot.hpp"

namespace oracle {

using dsattn::SquareMatrix;

inline Eigen::MatrixXd to_eigen(const SquareMatrix& m) {
  Eigen::MatrixXd e(m.n(), m.n());
  for (std::size_t i = 0; i < m.n(); ++i)
    for (std::size_t j = 0; j < m.n(); ++j) e(i, j) = m(i, j);
  return e;
}

inline SquareMatrix from_eigen(const Eigen::MatrixXd& e) {
  SquareMatrix m(static_cast<std::size_t>(e.rows()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

// ---- extended-precision sums -----------------------------------------------

inline long double frobenius_distance(const SquareMatrix& a, const SquareMatrix& b) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const long double d = static_cast<long double>(a.data()[k]) - b.data()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

inline long double row_entropy(const SquareMatrix& p) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < p.n(); ++i)
    for (std::size_t j = 0; j < p.n(); ++j) {
      const long double v = p(i, j);
      if (v > 0) total -= v * std::log(v);
    }
  return total / p.n();
}

// ---- Sinkhorn ------------------------------------------------------------

// k alternating passes (rows first) in long double.
inline SquareMatrix sinkhorn(const SquareMatrix& m, int k) {
  const std::size_t n = m.n();
  std::vector<long double> x(m.data().begin(), m.data().end());
  for (int t = 0; t < k; ++t) {
    for (std::size_t a = 0; a < n; ++a) {
      long double s = 0.0L;
      for (std::size_t b = 0; b < n; ++b) s += (t % 2 == 1) ? x[b * n + a] : x[a * n + b];
      for (std::size_t b = 0; b < n; ++b) ((t % 2 == 1) ? x[b * n + a] : x[a * n + b]) /= s;
    }
  }
  SquareMatrix out(n);
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = static_cast<double>(x[i]);
  return out;
}

// Sinkhorn on exp(logits) with the potentials kept in long double logs, so
// extreme logits cannot overflow.
inline SquareMatrix sinkhorn_logits(const SquareMatrix& logits, int k) {
  const std::size_t n = logits.n();
  std::vector<long double> f(n, 0.0L), g(n, 0.0L);
  auto lse = [&](bool rows, std::size_t a) {
    long double hi = -INFINITY;
    for (std::size_t b = 0; b < n; ++b) {
      const long double v = rows ? logits(a, b) + g[b] : logits(b, a) + f[b];
      hi = std::max(hi, v);
    }
    long double s = 0.0L;
    for (std::size_t b = 0; b < n; ++b) {
      const long double v = rows ? logits(a, b) + g[b] : logits(b, a) + f[b];
      s += std::exp(v - hi);
    }
    return hi + std::log(s);
  };
  for (int t = 0; t < k; ++t) {
    if (t % 2 == 1)
      for (std::size_t j = 0; j < n; ++j) g[j] = -lse(false, j);
    else
      for (std::size_t i = 0; i < n; ++i) f[i] = -lse(true, i);
  }
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = static_cast<double>(std::exp(logits(i, j) + f[i] + g[j]));
  return out;
}

// ---- affine projection -----------------------------------------------------

// Least-norm correction onto {Y : Y1 = 1, Y^T 1 = 1} using the full,
// rank-deficient 2n x n^2 constraint matrix and a pseudo-inverse.
inline SquareMatrix affine_project(const SquareMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.n());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, i * n + j) = 1.0;
      a(n + j, i * n + j) = 1.0;
    }
  Eigen::VectorXd x(n * n);
  for (Eigen::Index k = 0; k < n * n; ++k) x(k) = m.data()[static_cast<std::size_t>(k)];
  const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(2 * n) - a * x;
  const Eigen::MatrixXd gram = a * a.transpose();
  const Eigen::VectorXd nu = gram.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd y = x + a.transpose() * nu;
  SquareMatrix out(m.n());
  for (Eigen::Index k = 0; k < n * n; ++k) out.data()[static_cast<std::size_t>(k)] = y(k);
  return out;
}

// Largest violation of the projection's variational inequality
// <m - x, P - x> <= 0 over every permutation matrix P. Since the permutation
// matrices are the vertices of the polytope, a value <= 0 (up to round-off)
// certifies that x is the Frobenius-nearest DSM. Exhaustive: n <= 7.
inline double optimality_gap(const SquareMatrix& m, const SquareMatrix& x) {
  const std::size_t n = m.n();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double rx = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) rx += (m.data()[k] - x.data()[k]) * x.data()[k];
  double worst = -INFINITY;
  do {
    double rp = 0.0;
    for (std::size_t i = 0; i < n; ++i) rp += m(i, perm[i]) - x(i, perm[i]);
    worst = std::max(worst, rp - rx);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return worst;
}

// ---- QR ----------------------------------------------------------------------

// Householder Q with the sign convention diag(R) > 0.
inline SquareMatrix householder_q(const SquareMatrix& m) {
  const Eigen::MatrixXd a = to_eigen(m);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return from_eigen(q);
}

// ---- circuits ----------------------------------------------------------------

using CMat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

// Single-qubit gate on qubit `k` (bit k of the basis index) of a q-qubit
// register: I (x) ... (x) g (x) ... (x) I with the most significant qubit first.
inline CMat embed1(const Eigen::Matrix2cd& g, std::size_t k, std::size_t q) {
  CMat out = CMat::Identity(1, 1);
  for (std::size_t bit = q; bit-- > 0;) {
    const CMat factor = bit == k ? CMat(g) : CMat(CMat::Identity(2, 2));
    CMat next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = out(i, j) * factor;
    out = next;
  }
  return out;
}

inline Eigen::Matrix2cd ry(double a) {
  Eigen::Matrix2cd g;
  g << std::cos(a / 2), -std::sin(a / 2), std::sin(a / 2), std::cos(a / 2);
  return g;
}

inline Eigen::Matrix2cd rx(double a) {
  Eigen::Matrix2cd g;
  g << std::cos(a / 2), cplx(0, -std::sin(a / 2)), cplx(0, -std::sin(a / 2)), std::cos(a / 2);
  return g;
}

// RZ(a) on `target` conditioned on `control` = 1; the diagonal of the gate.
inline Eigen::VectorXcd crz(double a, std::size_t control, std::size_t target, std::size_t q) {
  const std::size_t dim = std::size_t{1} << q;
  Eigen::VectorXcd d = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    if ((i >> control) & 1U) d(static_cast<Eigen::Index>(i)) = std::polar(1.0, ((i >> target) & 1U) ? a / 2 : -a / 2);
  return d;
}

// exp(-i a Z_j Z_k); the diagonal of the gate.
inline Eigen::VectorXcd zz(double a, std::size_t j, std::size_t k, std::size_t q) {
  const std::size_t dim = std::size_t{1} << q;
  Eigen::VectorXcd d(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const int z = (((i >> j) & 1U) == ((i >> k) & 1U)) ? 1 : -1;
    d(static_cast<Eigen::Index>(i)) = std::polar(1.0, -a * z);
  }
  return d;
}

// Dense circuit unitary from the injected angles.
inline CMat circuit_unitary(const dsattn::CircuitConfig& c, const std::vector<double>& phi) {
  const std::size_t q = c.total_qubits();
  const std::size_t dim = std::size_t{1} << q;
  CMat w = CMat::Identity(dim, dim);
  std::size_t k = 0;
  for (std::size_t l = 0; l < c.layers; ++l) {
    if (c.ansatz == dsattn::Ansatz::Simple) {
      for (std::size_t a = l % 2; a + 1 < q; a += 2) {
        const double* t = &phi[k];
        // RY(t3) on a, then CRZ(t2), then RY(t0) on a and RY(t1) on a+1
        w = embed1(ry(t[3]), a, q) * w;
        w = crz(t[2], a, a + 1, q).asDiagonal() * w;
        w = embed1(ry(t[1]), a + 1, q) * (embed1(ry(t[0]), a, q) * w);
        k += 4;
      }
    } else {
      Eigen::VectorXcd zz_step = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(dim));
      for (std::size_t j = 0; j + 1 < q; ++j) zz_step = zz_step.cwiseProduct(zz(phi[k++], j, j + 1, q));
      CMat x_step = CMat::Identity(dim, dim);
      for (std::size_t j = 0; j < q; ++j) x_step = embed1(rx(phi[k++]), j, q) * x_step;
      w = x_step * (zz_step.asDiagonal() * (x_step * w));
    }
  }
  return w;
}

// |W|^2 folded into T x T by summing blocks and dividing by the block count.
inline SquareMatrix circuit_dsm(const dsattn::CircuitConfig& c, const std::vector<double>& theta,
                                const SquareMatrix& m) {
  std::vector<double> phi(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) phi[k] = theta[k] * m.data()[k % m.size()];
  const CMat w = circuit_unitary(c, phi);
  const std::size_t t = c.dsm_dim;
  const std::size_t blocks = std::size_t{1} << c.aux_qubits;
  SquareMatrix out(t);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index col = 0; col < w.cols(); ++col)
      out(static_cast<std::size_t>(r) % t, static_cast<std::size_t>(col) % t) += std::norm(w(r, col));
  out *= 1.0 / static_cast<double>(blocks);
  return out;
}

// ---- deduplication -----------------------------------------------------------

// Counts distinct matrices after rounding, by pairwise comparison.
inline std::size_t count_distinct(const std::vector<SquareMatrix>& outs, int decimals) {
  const double scale = std::pow(10.0, decimals);
  std::vector<std::vector<long long>> keys;
  for (const auto& m : outs) {
    std::vector<long long> key;
    for (double v : m.data()) {
      long long r = std::llround(v * scale);
      key.push_back(r == 0 ? 0 : r);
    }
    bool seen = false;
    for (const auto& k : keys) seen = seen || k == key;
    if (!seen) keys.push_back(std::move(key));
  }
  return keys.size();
}

// ---- counting ----------------------------------------------------------------

// Full n x n integer matrices with entries in {0..p-1} and every row and
// column summing to p-1, counted by plain recursion over all cells.
inline std::uint64_t count_full_dsm(int n, int p) {
  std::vector<int> rows(n, 0), cols(n, 0);
  std::uint64_t count = 0;
  std::function<void(int)> walk = [&](int cell) {
    if (cell == n * n) {
      for (int i = 0; i < n; ++i)
        if (rows[i] != p - 1 || cols[i] != p - 1) return;
      ++count;
      return;
    }
    const int i = cell / n, j = cell % n;
    for (int v = 0; v < p; ++v) {
      if (rows[i] + v > p - 1 || cols[j] + v > p - 1) break;
      rows[i] += v;
      cols[j] += v;
      walk(cell + 1);
      rows[i] -= v;
      cols[j] -= v;
    }
  };
  walk(0);
  return count;
}

// ---- gradients ---------------------------------------------------------------

// Five-point stencil gradient of <g, f(x)>.
inline SquareMatrix fd_gradient(const std::function<SquareMatrix(const SquareMatrix&)>& f, const SquareMatrix& x,
                                const SquareMatrix& g, double h = 1e-4) {
  auto loss = [&](const SquareMatrix& y) {
    const SquareMatrix out = f(y);
    long double s = 0.0L;
    for (std::size_t k = 0; k < out.size(); ++k) s += static_cast<long double>(g.data()[k]) * out.data()[k];
    return s;
  };
  SquareMatrix grad(x.n());
  SquareMatrix y = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = y.data()[k];
    long double acc = 0.0L;
    const double steps[4] = {-2 * h, -h, h, 2 * h};
    const long double weights[4] = {1.0L, -8.0L, 8.0L, -1.0L};
    for (int s = 0; s < 4; ++s) {
      y.data()[k] = orig + steps[s];
      acc += weights[s] * loss(y);
    }
    y.data()[k] = orig;
    grad.data()[k] = static_cast<double>(acc / (12.0L * h));
  }
  return grad;
}

}  // namespace oracle
