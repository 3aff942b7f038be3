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

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dsattn/core.hpp"
#include "dsattn/parallel.hpp"

// Census of n x n DSMs whose entries lie on {0, 1/(p-1), ..., 1}.
//
// A DSM is fixed by its leading (n-1) x (n-1) block. Scaling by (p-1) turns
// the block into integers in {0..p-1}; the completion is a DSM iff every
// block row and column sums to at most p-1 (constraint 1) and the block
// total is at least (n-2)(p-1) (constraint 2). Everything here is exact
// integer arithmetic.

namespace dsattn {

using BigInt = boost::multiprecision::cpp_int;

struct CensusQuery {
  int n = 3;
  int p = 2;

  int cells() const { return (n - 1) * (n - 1); }
  std::int64_t total_floor() const { return static_cast<std::int64_t>(n - 2) * (p - 1); }

  void validate() const {
    if (n < 2) throw UsageError("count: n must be >= 2");
    if (p < 2) throw UsageError("count: p must be >= 2");
  }

  /// (n-1)^2 log2(p) <= 48
  void require_enumerable() const {
    validate();
    if (static_cast<double>(cells()) * std::log2(static_cast<double>(p)) > 48.0 + 1e-12)
      throw UsageError("count: enumeration of " + std::to_string(p) + "^" + std::to_string(cells()) +
                       " candidates exceeds the 2^48 feasibility bound");
  }
};

namespace detail {

// Depth-first odometer over the block in row-major order, pruning as soon as
// a row or column budget of p-1 is exceeded.
struct CensusWalker {
  int k;       // block side, n-1
  int top;     // p-1
  std::int64_t floor_total;
  std::vector<int> row_sum;
  std::vector<int> col_sum;
  std::uint64_t accepted = 0;

  CensusWalker(int side, int p, std::int64_t floor)
      : k(side), top(p - 1), floor_total(floor), row_sum(side, 0), col_sum(side, 0) {}

  void walk(int cell, std::int64_t total) {
    if (cell == k * k) {
      if (total >= floor_total) ++accepted;
      return;
    }
    const int r = cell / k, c = cell % k;
    const int cap = std::min(top - row_sum[r], top - col_sum[c]);
    for (int v = 0; v <= cap; ++v) {
      row_sum[r] += v;
      col_sum[c] += v;
      walk(cell + 1, total + v);
      row_sum[r] -= v;
      col_sum[c] -= v;
    }
  }
};

inline BigInt binomial(std::int64_t top, std::int64_t k) {
  if (k < 0 || top < 0 || k > top) return 0;
  k = std::min(k, top - k);
  BigInt r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r *= top - k + i;
    r /= i;
  }
  return r;
}

}  // namespace detail

/// Exact number f(n, p) of discretized n x n DSMs by pruned enumeration.
/// The first block row is split across workers; partial counts are summed.
inline BigInt count_brute(const CensusQuery& q, std::size_t workers = 1) {
  q.require_enumerable();
  const int k = q.n - 1;
  if (k == 0) return 1;  // 1x1: the single DSM [1]
  // enumerate first-row prefixes, each walked independently
  std::vector<std::vector<int>> prefixes;
  std::vector<int> cur(static_cast<std::size_t>(k), 0);
  const int top = q.p - 1;
  for (;;) {
    int s = 0;
    for (int v : cur) s += v;
    if (s <= top) prefixes.push_back(cur);
    int pos = k - 1;
    while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == top) cur[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++cur[static_cast<std::size_t>(pos)];
  }
  std::vector<std::uint64_t> counts(prefixes.size(), 0);
  parallel_chunks(prefixes.size(), workers, [&](std::size_t c) {
    detail::CensusWalker w(k, q.p, q.total_floor());
    std::int64_t total = 0;
    for (int j = 0; j < k; ++j) {
      const int v = prefixes[c][static_cast<std::size_t>(j)];
      w.row_sum[0] += v;
      w.col_sum[static_cast<std::size_t>(j)] += v;
      total += v;
    }
    w.walk(k, total);
    counts[c] = w.accepted;
  });
  BigInt f = 0;
  for (auto c : counts) f += c;
  return f;
}

/// Closed-form census for 3x3 DSMs: the quadruple sum over
/// D(p) = {1<=i<=p, 1<=j,k<=p-i+1, 1<=l<=min(p-j+1, p-k+1)}
/// of the indicator [i + j + k + l - 3 >= p].
inline BigInt f3_analytic(int p) {
  if (p < 2) throw UsageError("f3_analytic: p must be >= 2");
  BigInt f = 0;
  for (std::int64_t i = 1; i <= p; ++i)
    for (std::int64_t j = 1; j <= p - i + 1; ++j)
      for (std::int64_t k = 1; k <= p - i + 1; ++k) {
        const std::int64_t lmax = std::min(p - j + 1, p - k + 1);
        // count l in [1, lmax] with l >= p + 3 - i - j - k
        const std::int64_t lmin = std::max<std::int64_t>(1, p + 3 - i - j - k);
        if (lmax >= lmin) f += lmax - lmin + 1;
      }
  return f;
}

/// Number of blocks violating constraint 2 (total < (n-2)(p-1)), counted
/// over all p^((n-1)^2) candidates with no other constraint.
inline BigInt c2_brute(const CensusQuery& q) {
  q.require_enumerable();
  const int cells = q.cells();
  const std::int64_t bound = q.total_floor();  // strict: total < bound
  if (bound <= 0) return 0;
  // depth-first enumeration of every tuple, abandoning a branch once its
  // partial sum reaches the bound
  std::uint64_t count = 0;
  auto walk = [&](auto&& self, int cell, std::int64_t sum) -> void {
    if (cell == cells) {
      ++count;
      return;
    }
    for (std::int64_t v = 0; v < q.p && sum + v < bound; ++v) self(self, cell + 1, sum + v);
  };
  walk(walk, 0, 0);
  return BigInt(count);
}

/// Stars-and-bars with inclusion-exclusion over cells exceeding p-1:
///   sum_{s=0}^{(n-2)(p-1)-1} sum_{m} (-1)^m C(K, m) C(s - m p + K - 1, K - 1),
/// K = (n-1)^2, where a term is present iff s - m p >= 0.
inline BigInt c2_closed(const CensusQuery& q) {
  q.validate();
  const std::int64_t cells = q.cells();
  const std::int64_t bound = q.total_floor();
  BigInt total = 0;
  for (std::int64_t s = 0; s < bound; ++s) {
    for (std::int64_t m = 0; m <= cells; ++m) {
      const std::int64_t rest = s - m * q.p;
      if (rest < 0) break;
      BigInt term = detail::binomial(cells, m) * detail::binomial(rest + cells - 1, cells - 1);
      if (m % 2 == 0)
        total += term;
      else
        total -= term;
    }
  }
  return total;
}

struct Decomposition {
  BigInt total;
  BigInt c1;
  BigInt c2;
  BigInt c12;
  BigInt f;

  bool identity_holds() const { return total - c1 - c2 + c12 == f; }
};

/// One full odometer pass (no pruning) classifying every candidate block by
/// which constraints it violates.
inline Decomposition decomposition_check(const CensusQuery& q) {
  q.require_enumerable();
  const int k = q.n - 1;
  const int cells = q.cells();
  const int top = q.p - 1;
  const std::int64_t floor_total = q.total_floor();
  std::vector<int> x(static_cast<std::size_t>(cells), 0);
  std::vector<int> row(static_cast<std::size_t>(k), 0), col(static_cast<std::size_t>(k), 0);
  std::int64_t total = 0;
  std::uint64_t candidates = 0, c1 = 0, c2 = 0, c12 = 0, f = 0;
  for (;;) {
    ++candidates;
    bool v1 = false;
    for (int i = 0; i < k && !v1; ++i) v1 = row[static_cast<std::size_t>(i)] > top || col[static_cast<std::size_t>(i)] > top;
    const bool v2 = total < floor_total;
    if (v1) ++c1;
    if (v2) ++c2;
    if (v1 && v2) ++c12;
    if (!v1 && !v2) ++f;
    int pos = 0;
    while (pos < cells && x[static_cast<std::size_t>(pos)] == top) {
      x[static_cast<std::size_t>(pos)] = 0;
      row[static_cast<std::size_t>(pos / k)] -= top;
      col[static_cast<std::size_t>(pos % k)] -= top;
      total -= top;
      ++pos;
    }
    if (pos == cells) break;
    ++x[static_cast<std::size_t>(pos)];
    ++row[static_cast<std::size_t>(pos / k)];
    ++col[static_cast<std::size_t>(pos % k)];
    ++total;
  }
  Decomposition d;
  d.total = candidates;
  d.c1 = c1;
  d.c2 = c2;
  d.c12 = c12;
  d.f = f;
  return d;
}

}  // namespace dsattn
