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
#include <limits>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dsattn/core.hpp"
#include "dsattn/operators.hpp"
#include "dsattn/parallel.hpp"

// Exhaustive grid sweeps over discretized inputs, uniqueness census,
// entropy/residual tradeoff, and invariance probes for any MatrixOperator.

namespace dsattn {

enum class GridDomain { Hypercube, Hypersphere };

inline constexpr std::uint64_t kDefaultGridLimit = std::uint64_t{1} << 32;

/// Matrices whose columns are drawn from {0, 1/(d-1), ..., 1}^n, either all
/// such columns (hypercube) or only those of unit 2-norm (hypersphere).
struct GridSpec {
  std::size_t n = 4;
  std::size_t d = 3;
  GridDomain domain = GridDomain::Hypercube;
  int rounding_decimals = 3;
};

/// Index-addressable, lexicographically ordered grid. Matrix index i is read
/// as n base-B digits, column 0 most significant, where B is the number of
/// admissible columns; column digits decode with row 0 most significant.
class Grid {
 public:
  explicit Grid(const GridSpec& spec, std::uint64_t limit = kDefaultGridLimit) : spec_(spec) {
    if (spec.n < 1) throw UsageError("grid: n must be >= 1");
    if (spec.d < 2) throw UsageError("grid: d must be >= 2");
    const double log_columns = static_cast<double>(spec.n) * std::log2(static_cast<double>(spec.d));
    if (log_columns > 40.0) throw UsageError("grid: column space too large to enumerate");
    const std::uint64_t top = spec.d - 1;
    std::uint64_t col_count = 1;
    for (std::size_t r = 0; r < spec.n; ++r) col_count *= spec.d;
    for (std::uint64_t c = 0; c < col_count; ++c) {
      std::vector<double> col(spec.n);
      std::uint64_t rest = c, sq = 0;
      for (std::size_t r = spec.n; r-- > 0;) {
        const std::uint64_t digit = rest % spec.d;
        rest /= spec.d;
        col[r] = static_cast<double>(digit) / static_cast<double>(top);
        sq += digit * digit;
      }
      if (spec.domain == GridDomain::Hypercube || sq == top * top) columns_.push_back(std::move(col));
    }
    if (columns_.empty()) throw UsageError("grid: no admissible columns");
    const double log_total = static_cast<double>(spec.n) * std::log2(static_cast<double>(columns_.size()));
    if (log_total >= 64.0 || !fits(limit)) {
      throw UsageError("grid: " + std::to_string(columns_.size()) + "^" + std::to_string(spec.n) +
                       " matrices exceed the enumeration limit (override required)");
    }
    size_ = 1;
    for (std::size_t j = 0; j < spec.n; ++j) size_ *= columns_.size();
  }

  const GridSpec& spec() const noexcept { return spec_; }
  std::uint64_t size() const noexcept { return size_; }
  const std::vector<std::vector<double>>& columns() const noexcept { return columns_; }

  SquareMatrix at(std::uint64_t index) const {
    if (index >= size_) throw UsageError("grid: index out of range");
    const std::size_t n = spec_.n;
    SquareMatrix m(n);
    for (std::size_t j = n; j-- > 0;) {
      const auto& col = columns_[index % columns_.size()];
      index /= columns_.size();
      for (std::size_t r = 0; r < n; ++r) m(r, j) = col[r];
    }
    return m;
  }

 private:
  bool fits(std::uint64_t limit) const {
    std::uint64_t total = 1;
    for (std::size_t j = 0; j < spec_.n; ++j) {
      if (total > limit / columns_.size()) return false;
      total *= columns_.size();
    }
    return total <= limit;
  }

  GridSpec spec_;
  std::vector<std::vector<double>> columns_;
  std::uint64_t size_ = 0;
};

/// Streams grid matrices in order starting at `offset`.
class GridStream {
 public:
  GridStream(const Grid& grid, std::uint64_t offset = 0) : grid_(&grid), next_(offset) {}

  bool next(SquareMatrix& out) {
    if (next_ >= grid_->size()) return false;
    out = grid_->at(next_++);
    return true;
  }
  std::uint64_t position() const noexcept { return next_; }

 private:
  const Grid* grid_;
  std::uint64_t next_;
};

struct SummaryStats {
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

inline SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  if (values.empty()) return s;
  double total = 0.0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    total += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = total / static_cast<double>(values.size());
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  if (values.size() % 2 == 1) {
    s.median = values[mid];
  } else {
    const double upper = values[mid];
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
    s.median = 0.5 * (lower + upper);
  }
  return s;
}

struct SweepReport {
  std::uint64_t total_inputs = 0;
  std::uint64_t unique_outputs = 0;
  std::vector<std::uint64_t> count_multiset;  // descending multiplicities
  SummaryStats entropy_stats;
  SummaryStats residual_stats;
};

/// Raised when an operator fails on a grid element.
class SweepError : public NumericalError {
 public:
  SweepError(const std::string& what, std::uint64_t index, SquareMatrix input)
      : NumericalError(what), index_(index), input_(std::move(input)) {}
  std::uint64_t index() const noexcept { return index_; }
  const SquareMatrix& input() const noexcept { return input_; }

 private:
  std::uint64_t index_;
  SquareMatrix input_;
};

namespace detail {

struct Key128 {
  std::uint64_t lo;
  std::uint64_t hi;
  bool operator==(const Key128&) const = default;
};

struct Key128Hash {
  std::size_t operator()(const Key128& k) const noexcept { return static_cast<std::size_t>(k.lo ^ (k.hi * 0x9e3779b97f4a7c15ULL)); }
};

inline std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Two independent 64-bit digests of the rounded integer entries.
inline Key128 rounded_key(const SquareMatrix& m, double scale) {
  std::uint64_t a = 0xcbf29ce484222325ULL;  // FNV-1a over bytes
  std::uint64_t b = 0x243f6a8885a308d3ULL;
  for (double v : m.data()) {
    const auto q = static_cast<std::uint64_t>(std::llround(v * scale));
    for (int byte = 0; byte < 8; ++byte) {
      a ^= (q >> (8 * byte)) & 0xffU;
      a *= 0x100000001b3ULL;
    }
    b = splitmix(b ^ q);
  }
  return {a, b};
}

inline constexpr std::uint64_t kSweepChunk = 1024;

}  // namespace detail

/// Applies `op` (raw logits allowed, see on_logits) to every grid matrix,
/// rounds outputs to spec.rounding_decimals and counts distinct results.
/// Residuals are ||m - op(m)||_F; entropies are row-averaged.
inline SweepReport uniqueness_sweep(const Grid& grid, const MatrixOperator& op, std::size_t workers = 1) {
  const std::uint64_t total = grid.size();
  const std::uint64_t chunks = (total + detail::kSweepChunk - 1) / detail::kSweepChunk;
  const double scale = std::pow(10.0, grid.spec().rounding_decimals);
  using Counts = std::unordered_map<detail::Key128, std::uint64_t, detail::Key128Hash>;
  std::vector<Counts> partial(chunks);
  std::vector<double> entropies(total), residuals(total);

  parallel_chunks(chunks, workers, [&](std::size_t chunk) {
    Counts local;
    const std::uint64_t begin = chunk * detail::kSweepChunk;
    const std::uint64_t end = std::min(total, begin + detail::kSweepChunk);
    for (std::uint64_t i = begin; i < end; ++i) {
      const SquareMatrix m = grid.at(i);
      SquareMatrix out;
      try {
        out = op(m);
      } catch (const std::exception& e) {
        throw SweepError(op.name + " failed on grid index " + std::to_string(i) + ": " + e.what(), i, m);
      }
      ++local[detail::rounded_key(out, scale)];
      entropies[i] = shannon_entropy(out);
      residuals[i] = frobenius_distance(m, out);
    }
    partial[chunk] = std::move(local);
  });

  Counts merged;
  for (auto& p : partial)
    for (const auto& [k, c] : p) merged[k] += c;

  SweepReport r;
  r.total_inputs = total;
  r.unique_outputs = merged.size();
  r.count_multiset.reserve(merged.size());
  for (const auto& [k, c] : merged) r.count_multiset.push_back(c);
  std::sort(r.count_multiset.begin(), r.count_multiset.end(), std::greater<>());
  r.entropy_stats = summarize(std::move(entropies));
  r.residual_stats = summarize(std::move(residuals));
  return r;
}

struct TradeoffRow {
  double entropy;
  double residual;
};

inline std::vector<TradeoffRow> tradeoff_sweep(const std::vector<SquareMatrix>& inputs, const MatrixOperator& op) {
  std::vector<TradeoffRow> rows;
  rows.reserve(inputs.size());
  for (const auto& m : inputs) {
    const SquareMatrix out = op(m);
    rows.push_back({shannon_entropy(out), frobenius_distance(m, out)});
  }
  return rows;
}

enum class WitnessKind { Scale, Permutation };

/// A reproducible counterexample: trial `trial` of a probe seeded with
/// `seed` draws `input` and (for permutations) `left`/`right`.
struct Witness {
  WitnessKind kind;
  std::uint64_t seed;
  int trial;
  SquareMatrix input;
  double lambda = 1.0;
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  double discrepancy = 0.0;
};

struct InvarianceReport {
  bool scale_invariant = true;
  bool permutation_equivariant = true;
  std::vector<Witness> witnesses;
};

inline constexpr double kInvarianceTolerance = 1e-8;
inline constexpr double kProbeScales[] = {0.5, 2.0, 10.0};

/// Random probe input for trial `trial`; positive operators get exp(N(0,1)).
inline SquareMatrix probe_input(std::size_t n, bool positive, std::uint64_t seed, int trial,
                                std::mt19937_64& rng_out) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(trial)};
  rng_out.seed(seq);
  SquareMatrix m = gaussian_matrix(n, rng_out);
  if (positive)
    for (double& v : m.data()) v = std::exp(v);
  return m;
}

/// Tests f(lambda m) = f(m) for lambda in {0.5, 2, 10} and
/// f(P1 m P2) = P1 f(m) P2 for random permutations, at 1e-8 max-abs.
inline InvarianceReport probe_invariances(const MatrixOperator& op, std::size_t n, int trials, std::uint64_t seed) {
  InvarianceReport report;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng;
    const SquareMatrix m = probe_input(n, op.requires_positive, seed, t, rng);
    const SquareMatrix base = op(m);
    for (double lambda : kProbeScales) {
      const double gap = max_abs_diff(op(m * lambda), base);
      if (gap > kInvarianceTolerance) {
        if (report.scale_invariant) report.witnesses.push_back({WitnessKind::Scale, seed, t, m, lambda, {}, {}, gap});
        report.scale_invariant = false;
      }
    }
    const auto left = random_permutation(n, rng);
    const auto right = random_permutation(n, rng);
    const double gap = max_abs_diff(op(permute(m, left, right)), permute(base, left, right));
    if (gap > kInvarianceTolerance) {
      if (report.permutation_equivariant)
        report.witnesses.push_back({WitnessKind::Permutation, seed, t, m, 1.0, left, right, gap});
      report.permutation_equivariant = false;
    }
  }
  return report;
}

}  // namespace dsattn
