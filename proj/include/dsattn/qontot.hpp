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
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dsattn/core.hpp"
#include "dsattn/parallel.hpp"

// Statevector simulation of a parametric circuit whose squared-modulus
// unitary W (.) conj(W) is doubly stochastic.
//
// Qubit k is bit k of the basis index; the log2(T) data qubits are the least
// significant bits, the auxiliary qubits sit above them. The full
// 2^q x 2^q DSM is folded down to T x T by summing its T x T blocks and
// dividing by the block count, which keeps the result doubly stochastic.

namespace dsattn {

using cplx = std::complex<double>;

enum class Ansatz { Simple, Trotter };

inline constexpr std::size_t kMaxSimulatedQubits = 24;

struct CircuitConfig {
  std::size_t dsm_dim = 4;
  std::size_t aux_qubits = 0;
  std::size_t layers = 1;
  Ansatz ansatz = Ansatz::Simple;

  std::size_t data_qubits() const {
    std::size_t q = 0;
    while ((std::size_t{1} << q) < dsm_dim) ++q;
    return q;
  }
  std::size_t total_qubits() const { return data_qubits() + aux_qubits; }
  std::size_t block_count() const { return std::size_t{1} << aux_qubits; }

  void validate() const {
    if (dsm_dim < 2 || (dsm_dim & (dsm_dim - 1)) != 0)
      throw UsageError("qontot: DSM dimension must be a power of two >= 2, got " + std::to_string(dsm_dim));
    if (layers < 1) throw UsageError("qontot: layers must be >= 1");
    if (total_qubits() > kMaxSimulatedQubits)
      throw UsageError("qontot: " + std::to_string(total_qubits()) + " qubits exceed the simulation bound of " +
                       std::to_string(kMaxSimulatedQubits));
  }

  /// Simple: 4 parameters per two-qubit block, blocks on (0,1),(2,3),...
  /// in even layers and (1,2),(3,4),... in odd layers.
  /// Trotter: q-1 ZZ couplings plus q X fields per layer.
  std::size_t param_count() const {
    const std::size_t q = total_qubits();
    std::size_t total = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      if (ansatz == Ansatz::Simple) {
        const std::size_t shifted = q >= (l % 2) ? q - (l % 2) : 0;
        total += 4 * (shifted / 2);
      } else {
        total += (q - 1) + q;
      }
    }
    return total;
  }
};

/// Circuit parameters theta.
class ParamVec {
 public:
  ParamVec() = default;
  explicit ParamVec(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// theta (.) vec(M), i.e. the angles actually fed to the gates.
class InjectedParams {
 public:
  explicit InjectedParams(std::vector<double> values) : values_(std::move(values)) {}
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// theta_k ~ U(-1, 1).
inline ParamVec random_params(const CircuitConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(config.param_count());
  for (double& x : v) x = dist(rng);
  return ParamVec(std::move(v));
}

/// phi_k = theta_k * vec(m)[k mod n^2], vec row-major.
inline InjectedParams inject(const ParamVec& theta, const SquareMatrix& m) {
  const auto flat = m.data();
  std::vector<double> phi(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) phi[k] = theta[k] * flat[k % flat.size()];
  return InjectedParams(std::move(phi));
}

/// Row-major 4x4 operator on a qubit pair, basis index 2*b_first + b_second.
using Block4 = std::array<cplx, 16>;

namespace detail {

inline Block4 block_matmul(const Block4& a, const Block4& b) {
  Block4 c{};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j < 4; ++j) c[i * 4 + j] += a[i * 4 + k] * b[k * 4 + j];
  return c;
}

inline Block4 kron2(const std::array<cplx, 4>& a, const std::array<cplx, 4>& b) {
  Block4 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) c[(2 * i + k) * 4 + (2 * j + l)] = a[i * 2 + j] * b[k * 2 + l];
  return c;
}

inline std::array<cplx, 4> ry(double angle) {
  const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
  return {cplx(c), cplx(-s), cplx(s), cplx(c)};
}

}  // namespace detail

/// [RY(a0) (x) RY(a1)] . CRZ(a2) . [RY(a3) (x) I]; the identity at a = 0.
/// The first tensor factor acts on the lower-indexed qubit of the pair,
/// which is also the CRZ control.
inline Block4 build_block(const std::array<double, 4>& a) {
  const std::array<cplx, 4> id{cplx(1), cplx(0), cplx(0), cplx(1)};
  Block4 crz{};
  crz[0] = 1.0;
  crz[5] = 1.0;
  crz[10] = std::polar(1.0, -a[2] / 2.0);
  crz[15] = std::polar(1.0, a[2] / 2.0);
  const Block4 first = detail::kron2(detail::ry(a[3]), id);
  const Block4 last = detail::kron2(detail::ry(a[0]), detail::ry(a[1]));
  return detail::block_matmul(last, detail::block_matmul(crz, first));
}

namespace detail {

struct PairGate {
  std::size_t first;
  std::size_t second;
  Block4 u;
};

struct XRotation {
  std::size_t qubit;
  double c;  // cos(angle/2)
  double s;  // sin(angle/2)
};

struct ZzPhase {
  std::size_t first;
  std::size_t second;
  cplx aligned;  // phase when the two Z eigenvalues agree
};

// One Trotter layer: X half-step, ZZ step, X half-step.
struct TrotterLayer {
  std::vector<XRotation> x_half;
  std::vector<ZzPhase> zz;
};

struct CompiledCircuit {
  std::size_t qubits = 0;
  Ansatz ansatz = Ansatz::Simple;
  std::vector<PairGate> blocks;        // Simple, in application order
  std::vector<TrotterLayer> trotter;   // Trotter
};

inline CompiledCircuit compile(const CircuitConfig& config, const InjectedParams& phi) {
  CompiledCircuit c;
  c.qubits = config.total_qubits();
  c.ansatz = config.ansatz;
  const std::size_t q = c.qubits;
  std::size_t k = 0;
  for (std::size_t l = 0; l < config.layers; ++l) {
    if (config.ansatz == Ansatz::Simple) {
      for (std::size_t a = l % 2; a + 1 < q; a += 2) {
        c.blocks.push_back({a, a + 1, build_block({phi[k], phi[k + 1], phi[k + 2], phi[k + 3]})});
        k += 4;
      }
    } else {
      TrotterLayer layer;
      for (std::size_t j = 0; j + 1 < q; ++j) {
        // exp(-i a Z_j Z_{j+1}): phase e^{-ia} on aligned spins, e^{+ia} otherwise
        layer.zz.push_back({j, j + 1, std::polar(1.0, -phi[k])});
        ++k;
      }
      for (std::size_t j = 0; j < q; ++j) {
        // exp(-i/2 b X) = RX(b)
        layer.x_half.push_back({j, std::cos(phi[k] / 2.0), std::sin(phi[k] / 2.0)});
        ++k;
      }
      c.trotter.push_back(std::move(layer));
    }
  }
  return c;
}

inline void apply_pair(std::vector<cplx>& psi, const PairGate& g) {
  const std::size_t ba = std::size_t{1} << g.first;
  const std::size_t bb = std::size_t{1} << g.second;
  const auto& u = g.u;
  for (std::size_t base = 0; base < psi.size(); ++base) {
    if (base & (ba | bb)) continue;
    const std::size_t idx[4] = {base, base | bb, base | ba, base | ba | bb};
    const cplx in[4] = {psi[idx[0]], psi[idx[1]], psi[idx[2]], psi[idx[3]]};
    for (int r = 0; r < 4; ++r)
      psi[idx[r]] = u[r * 4 + 0] * in[0] + u[r * 4 + 1] * in[1] + u[r * 4 + 2] * in[2] + u[r * 4 + 3] * in[3];
  }
}

inline void apply_rx(std::vector<cplx>& psi, const XRotation& g) {
  const std::size_t bit = std::size_t{1} << g.qubit;
  const cplx mis(0.0, -g.s);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (i & bit) continue;
    const cplx a0 = psi[i], a1 = psi[i | bit];
    psi[i] = g.c * a0 + mis * a1;
    psi[i | bit] = mis * a0 + g.c * a1;
  }
}

inline void apply_zz(std::vector<cplx>& psi, const ZzPhase& g) {
  const cplx anti = std::conj(g.aligned);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const bool za = (i >> g.first) & 1U;
    const bool zb = (i >> g.second) & 1U;
    psi[i] *= (za == zb) ? g.aligned : anti;
  }
}

inline void run_circuit(const CompiledCircuit& c, std::vector<cplx>& psi) {
  if (c.ansatz == Ansatz::Simple) {
    for (const auto& g : c.blocks) apply_pair(psi, g);
    return;
  }
  for (const auto& layer : c.trotter) {
    for (const auto& g : layer.x_half) apply_rx(psi, g);
    for (const auto& g : layer.zz) apply_zz(psi, g);
    for (const auto& g : layer.x_half) apply_rx(psi, g);
  }
}

inline void check_circuit_inputs(const CircuitConfig& config, const ParamVec& theta, const SquareMatrix& m) {
  config.validate();
  if (m.n() != config.dsm_dim)
    throw DimensionError("qontot: input is " + std::to_string(m.n()) + "x" + std::to_string(m.n()) +
                         " but the circuit emits " + std::to_string(config.dsm_dim) + "x" +
                         std::to_string(config.dsm_dim));
  if (theta.size() != config.param_count())
    throw DimensionError("qontot: expected " + std::to_string(config.param_count()) + " parameters, got " +
                         std::to_string(theta.size()));
}

inline constexpr std::size_t kColumnChunk = 64;

}  // namespace detail

/// Folded DSM of the data-injected circuit. Streams one unitary column at a
/// time; per-chunk partial sums are reduced in chunk order so the result
/// does not depend on `workers`.
inline Dsm simulate_dsm(const CircuitConfig& config, const ParamVec& theta, const SquareMatrix& m,
                        std::size_t workers = 1) {
  detail::check_circuit_inputs(config, theta, m);
  const detail::CompiledCircuit circuit = detail::compile(config, inject(theta, m));
  const std::size_t dim = std::size_t{1} << circuit.qubits;
  const std::size_t t = config.dsm_dim;
  const std::size_t mask = t - 1;
  const std::size_t chunks = (dim + detail::kColumnChunk - 1) / detail::kColumnChunk;

  std::vector<std::vector<double>> partial(chunks);
  parallel_chunks(chunks, workers, [&](std::size_t chunk) {
    std::vector<double> acc(t * t, 0.0);
    std::vector<cplx> psi(dim);
    const std::size_t end = std::min(dim, (chunk + 1) * detail::kColumnChunk);
    for (std::size_t col = chunk * detail::kColumnChunk; col < end; ++col) {
      std::fill(psi.begin(), psi.end(), cplx(0.0));
      psi[col] = 1.0;
      detail::run_circuit(circuit, psi);
      double* out_col = acc.data() + (col & mask);
      for (std::size_t r = 0; r < dim; ++r) out_col[(r & mask) * t] += std::norm(psi[r]);
    }
    partial[chunk] = std::move(acc);
  });

  SquareMatrix s(t);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < p.size(); ++k) s.data()[k] += p[k];
  s *= 1.0 / static_cast<double>(config.block_count());
  return Dsm(std::move(s));
}

/// Finite-shot estimate of the exact DSM: floor(shots / T) categorical draws
/// per column, returned as empirical column frequencies.
inline SquareMatrix sample_columns(const SquareMatrix& exact, std::size_t shots, std::uint64_t seed) {
  const std::size_t t = exact.n();
  if (shots < t) throw UsageError("sample_shots: shots must be >= T (" + std::to_string(t) + ")");
  const std::size_t per_column = shots / t;
  std::mt19937_64 rng(seed);
  SquareMatrix freq(t);
  std::vector<double> weights(t);
  for (std::size_t j = 0; j < t; ++j) {
    for (std::size_t i = 0; i < t; ++i) weights[i] = std::max(exact(i, j), 0.0);
    std::discrete_distribution<std::size_t> column(weights.begin(), weights.end());
    for (std::size_t s = 0; s < per_column; ++s) freq(column(rng), j) += 1.0;
    for (std::size_t i = 0; i < t; ++i) freq(i, j) /= static_cast<double>(per_column);
  }
  return freq;
}

inline SquareMatrix sample_shots(const CircuitConfig& config, const ParamVec& theta, const SquareMatrix& m,
                                 std::size_t shots, std::uint64_t seed) {
  if (shots < config.dsm_dim)
    throw UsageError("sample_shots: shots must be >= T (" + std::to_string(config.dsm_dim) + ")");
  return sample_columns(simulate_dsm(config, theta, m).matrix(), shots, seed);
}

struct BenchRow {
  std::size_t dsm_dim;
  std::size_t layers;
  std::size_t qubits;
  double median_seconds;
};

/// Median wall time of simulate_dsm for every (layers, aux_qubits) cell.
inline std::vector<BenchRow> bench_circuit(std::size_t dsm_dim, const std::vector<std::size_t>& layer_grid,
                                           const std::vector<std::size_t>& aux_grid, Ansatz ansatz,
                                           int repetitions, std::uint64_t seed) {
  if (repetitions < 5) throw UsageError("bench: at least 5 repetitions per cell");
  std::vector<BenchRow> rows;
  std::mt19937_64 rng(seed);
  for (std::size_t aux : aux_grid) {
    for (std::size_t layers : layer_grid) {
      const CircuitConfig config{dsm_dim, aux, layers, ansatz};
      config.validate();
      const ParamVec theta = random_params(config, rng());
      const SquareMatrix m = gaussian_matrix(dsm_dim, rng);
      std::vector<double> times;
      for (int r = 0; r < repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const Dsm out = simulate_dsm(config, theta, m);
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(stop - start).count());
        (void)out;
      }
      std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
      rows.push_back({dsm_dim, layers, config.total_qubits(), times[times.size() / 2]});
    }
  }
  return rows;
}

/// Mean over DSM cells of (max - min) across `samples` random theta for one
/// fixed input matrix.
inline double mean_cell_range(const CircuitConfig& config, const SquareMatrix& m, std::size_t samples,
                              std::uint64_t seed) {
  config.validate();
  const std::size_t t = config.dsm_dim;
  std::vector<double> lo(t * t, 2.0), hi(t * t, -1.0);
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    const Dsm p = simulate_dsm(config, random_params(config, rng()), m);
    for (std::size_t k = 0; k < t * t; ++k) {
      lo[k] = std::min(lo[k], p.matrix().data()[k]);
      hi[k] = std::max(hi[k], p.matrix().data()[k]);
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < t * t; ++k) total += hi[k] - lo[k];
  return total / static_cast<double>(t * t);
}

}  // namespace dsattn
