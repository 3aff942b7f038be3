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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dsattn/core.hpp"

// Frobenius-nearest projection onto the Birkhoff polytope.
//
// The default solver is Dykstra's alternating projection between the affine
// set {Y : Y1 = 1, Y^T 1 = 1} and the non-negative orthant. Both pieces have
// closed forms. A second, independent solver treats the problem as the
// explicit QP  min 1/2 x^T x - q^T x  s.t.  A x = 1, x >= 0  with
// x = vec(X^T), q = vec(M^T), and the last row of A removed (rank 2n - 1).
// It is an ADMM operator-splitting method followed by an active-set polish.

namespace dsattn {

enum class ProjectionMethod { Dykstra, SplittingQP };

struct ProjectionSettings {
  double tolerance = 1e-10;
  int max_iterations = 50000;
  ProjectionMethod method = ProjectionMethod::Dykstra;

  void validate() const {
    if (!(tolerance > 0.0)) throw UsageError("projection: tolerance must be > 0");
    if (max_iterations < 1) throw UsageError("projection: max_iterations must be >= 1");
  }
};

/// Tolerance at which projection outputs are certified as Dsm.
inline constexpr double kProjectionDsmTolerance = 1e-8;

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, SquareMatrix last, StochasticityReport report)
      : NumericalError(what), last_iterate_(std::move(last)), report_(report) {}

  const SquareMatrix& last_iterate() const noexcept { return last_iterate_; }
  const StochasticityReport& report() const noexcept { return report_; }

 private:
  SquareMatrix last_iterate_;
  StochasticityReport report_;
};

/// Nearest matrix with unit row and column sums (entries unconstrained).
///
/// The normal space of the affine set is {a 1^T + 1 b^T}; with the gauge
/// 1^T b fixed, the KKT solution is
///   Y = M - r 1^T / n - 1 c^T / n + (sigma / n^2) J,
/// where r, c are the row/column sum residuals and sigma their common total.
inline SquareMatrix affine_project(const SquareMatrix& m) {
  const std::size_t n = m.n();
  const double dn = static_cast<double>(n);
  std::vector<double> r(n), c(n);
  double sigma = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = m.row_sum(i) - 1.0;
    c[i] = m.col_sum(i) - 1.0;
    sigma += r[i];
  }
  const double corner = sigma / (dn * dn);
  SquareMatrix y(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) y(i, j) = m(i, j) - r[i] / dn - c[j] / dn + corner;
  return y;
}

namespace detail {

inline double marginal_deviation(const SquareMatrix& x) {
  const auto r = check_stochasticity(x);
  return std::max(r.max_row_deviation, r.max_col_deviation);
}

inline SquareMatrix project_dykstra(const SquareMatrix& m, const ProjectionSettings& s) {
  const std::size_t n = m.n();
  SquareMatrix x = m;
  SquareMatrix correction(n);  // Dykstra increment for the orthant step
  for (int it = 0; it < s.max_iterations; ++it) {
    const SquareMatrix y = affine_project(x);
    SquareMatrix next(n);
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double shifted = y.data()[k] + correction.data()[k];
      next.data()[k] = std::max(shifted, 0.0);
      correction.data()[k] = shifted - next.data()[k];
    }
    const double step = frobenius_distance(next, x);
    x = std::move(next);
    if (step < s.tolerance && marginal_deviation(x) < s.tolerance) return x;
  }
  throw ConvergenceError("birkhoff projection (Dykstra): max_iterations exceeded", x, check_stochasticity(x));
}

/// min 1/2 x^T P x + c^T x  s.t.  A x = b, x >= 0, with P positive definite.
/// ADMM in the OSQP splitting (constraints stacked as [A; I]) with
/// over-relaxation, then an active-set polish that solves the reduced
/// equality-constrained KKT system exactly.
struct BoundedQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct QpResult {
  Eigen::VectorXd x;
  bool polished = false;
  int iterations = 0;
};

inline bool polish(const BoundedQp& qp, const Eigen::VectorXd& x_admm, const Eigen::VectorXd& y_bound,
                   double tol, Eigen::VectorXd& out) {
  const Eigen::Index dim = x_admm.size();
  std::vector<Eigen::Index> free_idx;
  std::vector<bool> active(static_cast<std::size_t>(dim), false);
  for (Eigen::Index i = 0; i < dim; ++i) {
    // lower bound active when the ADMM iterate sits closer to 0 than the dual pushes it
    if (x_admm(i) < -y_bound(i)) {
      active[static_cast<std::size_t>(i)] = true;
    } else {
      free_idx.push_back(i);
    }
  }
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  const Eigen::Index me = qp.A.rows();
  // KKT on free variables: [P_FF A_F^T; A_F 0] [x_F; nu] = [-c_F; b]
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + me, nf + me);
  Eigen::VectorXd rhs(nf + me);
  for (Eigen::Index a = 0; a < nf; ++a) {
    for (Eigen::Index bb = 0; bb < nf; ++bb) kkt(a, bb) = qp.P(free_idx[a], free_idx[bb]);
    for (Eigen::Index r = 0; r < me; ++r) {
      kkt(a, nf + r) = qp.A(r, free_idx[a]);
      kkt(nf + r, a) = qp.A(r, free_idx[a]);
    }
    rhs(a) = -qp.c(free_idx[a]);
  }
  rhs.tail(me) = qp.b;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index a = 0; a < nf; ++a) x(free_idx[a]) = sol(a);
  const Eigen::VectorXd nu = sol.tail(me);

  if ((qp.A * x - qp.b).cwiseAbs().maxCoeff() > tol) return false;
  if (nf > 0 && x.minCoeff() < -tol) return false;
  // multipliers of active bounds must be non-negative: P x + c + A^T nu = mu
  const Eigen::VectorXd mu = qp.P * x + qp.c + qp.A.transpose() * nu;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (active[static_cast<std::size_t>(i)] && mu(i) < -tol) return false;
  }
  out = x.cwiseMax(0.0);
  return true;
}

inline QpResult solve_bounded_qp(const BoundedQp& qp, double eps, int max_iterations) {
  const Eigen::Index dim = qp.P.rows();
  const Eigen::Index me = qp.A.rows();
  const double sigma = 1e-6;
  const double alpha = 1.6;
  const double rho = 0.1;
  const double rho_eq = 1e3 * rho;

  const Eigen::MatrixXd kkt = qp.P + sigma * Eigen::MatrixXd::Identity(dim, dim) +
                              rho_eq * qp.A.transpose() * qp.A + rho * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::LLT<Eigen::MatrixXd> chol(kkt);
  if (chol.info() != Eigen::Success) throw NumericalError("splitting QP: KKT factorization failed");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd z_eq = qp.b;
  Eigen::VectorXd z_bd = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd y_eq = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd y_bd = Eigen::VectorXd::Zero(dim);

  QpResult result;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXd rhs =
        sigma * x - qp.c + qp.A.transpose() * (rho_eq * z_eq - y_eq) + (rho * z_bd - y_bd);
    const Eigen::VectorXd x_tilde = chol.solve(rhs);
    const Eigen::VectorXd zt_eq = qp.A * x_tilde;
    const Eigen::VectorXd& zt_bd = x_tilde;

    x = alpha * x_tilde + (1.0 - alpha) * x;
    const Eigen::VectorXd relaxed_eq = alpha * zt_eq + (1.0 - alpha) * z_eq;
    const Eigen::VectorXd relaxed_bd = alpha * zt_bd + (1.0 - alpha) * z_bd;
    z_eq = qp.b;
    z_bd = (relaxed_bd + y_bd / rho).cwiseMax(0.0);
    y_eq += rho_eq * (relaxed_eq - z_eq);
    y_bd += rho * (relaxed_bd - z_bd);

    if (it % 25 == 0 || it == max_iterations) {
      const double primal = std::max((qp.A * x - z_eq).cwiseAbs().maxCoeff(), (x - z_bd).cwiseAbs().maxCoeff());
      const double dual = (qp.P * x + qp.c + qp.A.transpose() * y_eq + y_bd).cwiseAbs().maxCoeff();
      if (primal < eps && dual < eps) {
        Eigen::VectorXd polished;
        if (polish(qp, x, y_bd, 1e-11, polished)) {
          result.x = std::move(polished);
          result.polished = true;
          result.iterations = it;
          return result;
        }
        eps *= 0.1;  // active set not identified yet; tighten and continue
      }
    }
  }
  result.x = x;
  result.iterations = max_iterations;
  return result;
}

inline SquareMatrix project_splitting(const SquareMatrix& m, const ProjectionSettings& s) {
  const std::size_t n = m.n();
  const auto nn = static_cast<Eigen::Index>(n * n);
  const auto rows = static_cast<Eigen::Index>(2 * n - 1);
  BoundedQp qp;
  qp.P = Eigen::MatrixXd::Identity(nn, nn);
  qp.c.resize(nn);
  for (Eigen::Index k = 0; k < nn; ++k) qp.c(k) = -m.data()[static_cast<std::size_t>(k)];
  // x = vec(X^T): entry (i, j) lives at i * n + j
  qp.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * n), nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const auto k = static_cast<Eigen::Index>(i * n + j);
      qp.A(static_cast<Eigen::Index>(i), k) = 1.0;
      qp.A(static_cast<Eigen::Index>(n + j), k) = 1.0;
    }
  qp.A.conservativeResize(rows, nn);
  qp.b = Eigen::VectorXd::Ones(rows);

  const QpResult res = solve_bounded_qp(qp, 1e-6, s.max_iterations);
  SquareMatrix x(n);
  for (Eigen::Index k = 0; k < nn; ++k) x.data()[static_cast<std::size_t>(k)] = res.x(k);
  if (!res.polished && marginal_deviation(x) > s.tolerance)
    throw ConvergenceError("birkhoff projection (splitting QP): max_iterations exceeded", x,
                           check_stochasticity(x));
  return x;
}

}  // namespace detail

inline Dsm project(const SquareMatrix& m, const ProjectionSettings& settings = {}) {
  settings.validate();
  SquareMatrix x = settings.method == ProjectionMethod::Dykstra ? detail::project_dykstra(m, settings)
                                                                : detail::project_splitting(m, settings);
  return Dsm(std::move(x), kProjectionDsmTolerance);
}

/// ||m - project(m)||_F
inline double birkhoff_distance(const SquareMatrix& m, const ProjectionSettings& settings = {}) {
  return frobenius_distance(m, project(m, settings).matrix());
}

/// check_stochasticity plus the distance-to-polytope field.
inline StochasticityReport stochasticity_with_distance(const SquareMatrix& m,
                                                       const ProjectionSettings& settings = {}) {
  StochasticityReport r = check_stochasticity(m);
  r.frobenius_to_birkhoff = birkhoff_distance(m, settings);
  return r;
}

}  // namespace dsattn
