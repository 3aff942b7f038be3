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
#include <initializer_list>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsattn {

// Error hierarchy. UsageError covers malformed arguments and shapes,
// NumericalError covers operators that could not deliver their contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public UsageError {
 public:
  using UsageError::UsageError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major n x n matrix of finite doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;

  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {
    if (n == 0) throw DimensionError("SquareMatrix: dimension must be >= 1");
  }

  SquareMatrix(std::size_t n, std::vector<double> data) : n_(n), data_(std::move(data)) {
    if (n == 0) throw DimensionError("SquareMatrix: dimension must be >= 1");
    if (data_.size() != n * n) {
      throw DimensionError("SquareMatrix: expected " + std::to_string(n * n) + " entries, got " +
                           std::to_string(data_.size()));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) throw UsageError("SquareMatrix: non-finite entry");
    }
  }

  static SquareMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    std::vector<double> data;
    data.reserve(n * n);
    for (const auto& r : rows) {
      if (r.size() != n) throw DimensionError("SquareMatrix::from_rows: ragged or non-square input");
      data.insert(data.end(), r.begin(), r.end());
    }
    return SquareMatrix(n, std::move(data));
  }

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static SquareMatrix ones(std::size_t n) { return SquareMatrix(n, 1.0); }

  /// J/n, the center of the Birkhoff polytope.
  static SquareMatrix uniform(std::size_t n) { return SquareMatrix(n, 1.0 / static_cast<double>(n)); }

  /// Row i of the result has a single 1 at column perm[i].
  static SquareMatrix permutation(std::span<const std::size_t> perm) {
    SquareMatrix m(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) m(i, perm[i]) = 1.0;
    return m;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * n_, n_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * n_, n_}; }

  double row_sum(std::size_t i) const {
    const auto r = row(i);
    return std::accumulate(r.begin(), r.end(), 0.0);
  }

  double col_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, j);
    return s;
  }

  double min_entry() const { return *std::min_element(data_.begin(), data_.end()); }
  double max_entry() const { return *std::max_element(data_.begin(), data_.end()); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  SquareMatrix transpose() const {
    SquareMatrix t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  SquareMatrix& operator+=(const SquareMatrix& o) {
    require_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  SquareMatrix& operator-=(const SquareMatrix& o) {
    require_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  SquareMatrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) { return a += b; }
  friend SquareMatrix operator-(SquareMatrix a, const SquareMatrix& b) { return a -= b; }
  friend SquareMatrix operator*(SquareMatrix a, double s) { return a *= s; }
  friend SquareMatrix operator*(double s, SquareMatrix a) { return a *= s; }
  friend SquareMatrix operator-(SquareMatrix a) { return a *= -1.0; }

  friend bool operator==(const SquareMatrix& a, const SquareMatrix& b) {
    return a.n_ == b.n_ && a.data_ == b.data_;
  }

 private:
  void require_same(const SquareMatrix& o) const {
    if (o.n_ != n_) throw DimensionError("SquareMatrix: dimension mismatch");
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline SquareMatrix matmul(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.n() != b.n()) throw DimensionError("matmul: dimension mismatch");
  const std::size_t n = a.n();
  SquareMatrix c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline double max_abs_diff(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.n() != b.n()) throw DimensionError("max_abs_diff: dimension mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

struct StochasticityReport {
  double max_row_deviation = 0.0;
  double max_col_deviation = 0.0;
  double min_entry = 0.0;
  std::optional<double> frobenius_to_birkhoff;

  bool within(double tolerance) const {
    return max_row_deviation <= tolerance && max_col_deviation <= tolerance && min_entry >= -tolerance;
  }
};

inline StochasticityReport check_stochasticity(const SquareMatrix& m) {
  StochasticityReport r;
  for (std::size_t i = 0; i < m.n(); ++i) {
    r.max_row_deviation = std::max(r.max_row_deviation, std::abs(m.row_sum(i) - 1.0));
    r.max_col_deviation = std::max(r.max_col_deviation, std::abs(m.col_sum(i) - 1.0));
  }
  r.min_entry = m.min_entry();
  return r;
}

inline constexpr double kDefaultDsmTolerance = 1e-9;

/// A matrix that passed the doubly-stochastic check at `tolerance`.
class Dsm {
 public:
  explicit Dsm(SquareMatrix m, double tolerance = kDefaultDsmTolerance)
      : matrix_(std::move(m)), tolerance_(tolerance), report_(check_stochasticity(matrix_)) {
    if (!report_.within(tolerance_)) {
      throw NumericalError("Dsm: matrix is not doubly stochastic within " + std::to_string(tolerance_) +
                           " (row dev " + std::to_string(report_.max_row_deviation) + ", col dev " +
                           std::to_string(report_.max_col_deviation) + ", min " +
                           std::to_string(report_.min_entry) + ")");
    }
  }

  const SquareMatrix& matrix() const noexcept { return matrix_; }
  double tolerance() const noexcept { return tolerance_; }
  const StochasticityReport& report() const noexcept { return report_; }
  std::size_t n() const noexcept { return matrix_.n(); }

  SquareMatrix release() && { return std::move(matrix_); }

 private:
  SquareMatrix matrix_;
  double tolerance_;
  StochasticityReport report_;
};

/// Mean over rows of -sum_j p_ij ln p_ij (natural log, 0 ln 0 = 0).
/// Negative round-off entries are clamped to zero.
inline double shannon_entropy(const SquareMatrix& p) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    double h = 0.0;
    for (double v : p.row(i)) {
      if (v > 0.0) h -= v * std::log(v);
    }
    total += h;
  }
  return total / static_cast<double>(p.n());
}

inline double shannon_entropy(const Dsm& p) { return shannon_entropy(p.matrix()); }

inline double frobenius_norm(const SquareMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

inline double frobenius_distance(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.n() != b.n()) throw DimensionError("frobenius_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.data()[k] - b.data()[k];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace detail {

// Average ranks (1-based), ties share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

}  // namespace detail

/// Spearman rank correlation over all n^2 flattened entries.
/// Throws NumericalError when either argument has zero rank variance.
inline double spearman_rho(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.n() != b.n()) throw DimensionError("spearman_rho: dimension mismatch");
  const auto ra = detail::average_ranks(a.data());
  const auto rb = detail::average_ranks(b.data());
  const double count = static_cast<double>(ra.size());
  const double mean = (count + 1.0) / 2.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    const double da = ra[k] - mean;
    const double db = rb[k] - mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericalError("spearman_rho: zero rank variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Standard-normal entries, the default random logit source.
template <class Rng>
SquareMatrix gaussian_matrix(std::size_t n, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> data(n * n);
  for (double& v : data) v = dist(rng);
  return SquareMatrix(n, std::move(data));
}

template <class Rng>
SquareMatrix uniform_matrix(std::size_t n, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(n * n);
  for (double& v : data) v = dist(rng);
  return SquareMatrix(n, std::move(data));
}

template <class Rng>
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Pi_1 * m * Pi_2 where Pi is built by SquareMatrix::permutation.
inline SquareMatrix permute(const SquareMatrix& m, std::span<const std::size_t> left,
                            std::span<const std::size_t> right) {
  return matmul(matmul(SquareMatrix::permutation(left), m), SquareMatrix::permutation(right));
}

}  // namespace dsattn
