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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsattn/birkhoff.hpp"
#include "dsattn/core.hpp"
#include "dsattn/qontot.hpp"
#include "dsattn/qr_dsm.hpp"
#include "dsattn/sinkhorn.hpp"

namespace dsattn {

/// A named map SquareMatrix -> SquareMatrix. Operators flagged
/// `requires_positive` are only defined on strictly positive inputs.
struct MatrixOperator {
  std::string name;
  bool requires_positive = false;
  std::function<SquareMatrix(const SquareMatrix&)> apply;

  SquareMatrix operator()(const SquareMatrix& m) const { return apply(m); }
};

struct OperatorOptions {
  int sinkhorn_iterations = 201;
  std::uint64_t qr_seed = 0;
  std::size_t qontot_layers = 8;
  std::optional<std::size_t> qontot_aux_qubits;  // default log2(T) + 1
  Ansatz qontot_ansatz = Ansatz::Simple;
  std::uint64_t theta_seed = 0;
  std::optional<ParamVec> theta;  // overrides theta_seed
  ProjectionSettings projection;
};

inline const std::vector<std::string>& operator_names() {
  static const std::vector<std::string> names{"sinkhorn-naive", "sinkhorn-ot", "birkhoff-project", "qr", "qontot"};
  return names;
}

inline CircuitConfig qontot_config_for(std::size_t n, const OperatorOptions& o) {
  CircuitConfig c;
  c.dsm_dim = n;
  c.layers = o.qontot_layers;
  c.ansatz = o.qontot_ansatz;
  c.aux_qubits = o.qontot_aux_qubits.value_or(c.data_qubits() + 1);
  c.validate();
  return c;
}

/// Builds the raw operator for matrices of dimension n.
inline MatrixOperator make_operator(const std::string& name, std::size_t n, const OperatorOptions& o = {}) {
  if (name == "sinkhorn-naive") {
    const int k = o.sinkhorn_iterations;
    SinkhornSettings{k, SinkhornFlavor::Naive, 1.0}.validate();
    return {name, true, [k](const SquareMatrix& m) { return sinkhorn_naive(m, k); }};
  }
  if (name == "sinkhorn-ot") {
    const int k = o.sinkhorn_iterations;
    SinkhornSettings{k, SinkhornFlavor::OT, 1.0}.validate();
    return {name, true, [k](const SquareMatrix& m) { return sinkhorn_ot(m, k); }};
  }
  if (name == "birkhoff-project") {
    const ProjectionSettings s = o.projection;
    s.validate();
    return {name, false, [s](const SquareMatrix& m) { return project(m, s).matrix(); }};
  }
  if (name == "qr") {
    const std::uint64_t seed = o.qr_seed;
    return {name, false, [seed](const SquareMatrix& m) { return qr_dsm(m, seed).matrix(); }};
  }
  if (name == "qontot") {
    const CircuitConfig config = qontot_config_for(n, o);
    ParamVec theta = o.theta ? *o.theta : random_params(config, o.theta_seed);
    if (theta.size() != config.param_count())
      throw DimensionError("qontot: expected " + std::to_string(config.param_count()) + " parameters, got " +
                           std::to_string(theta.size()));
    return {name, false, [config, theta = std::move(theta)](const SquareMatrix& m) {
              return simulate_dsm(config, theta, m).matrix();
            }};
  }
  throw UsageError("unknown operator '" + name + "'");
}

/// Adapts an operator to arbitrary real logits: positive-only operators see
/// exp_scale(m, 1) instead of m.
inline MatrixOperator on_logits(MatrixOperator op) {
  if (!op.requires_positive) return op;
  auto inner = std::move(op.apply);
  op.apply = [inner = std::move(inner)](const SquareMatrix& m) { return inner(exp_scale(m, 1.0)); };
  op.requires_positive = false;
  return op;
}

}  // namespace dsattn
