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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dsattn/dsattn.hpp"
#include "oracles.hpp"

namespace dsattn {
namespace {

ProjectionSettings splitting() {
  ProjectionSettings s;
  s.method = ProjectionMethod::SplittingQP;
  return s;
}

TEST(AffineProject, FixesDsms) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const SquareMatrix p = qr_dsm(gaussian_matrix(5, rng), 0).matrix();
    EXPECT_LE(max_abs_diff(affine_project(p), p), 1e-15);
  }
}

TEST(AffineProject, ZeroGoesToCenter) {
  EXPECT_LE(max_abs_diff(affine_project(SquareMatrix(2)), SquareMatrix::uniform(2)), 1e-15);
}

TEST(AffineProject, TopRowOnes) {
  // the nearest unit-marginal matrix to [[1,1],[0,0]] is J/2: on the affine
  // set [[a,1-a],[1-a,a]] the objective 2(a-1/2)^2 + 1/2 is minimal at 1/2
  const auto m = SquareMatrix::from_rows({{1, 1}, {0, 0}});
  const SquareMatrix expected = oracle::affine_project(m);
  EXPECT_LE(max_abs_diff(expected, SquareMatrix::uniform(2)), 1e-14);
  EXPECT_LE(max_abs_diff(affine_project(m), expected), 1e-15);
}

TEST(AffineProject, MatchesLeastSquaresOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + t % 7;
    const SquareMatrix m = gaussian_matrix(n, rng, 3.0);
    const SquareMatrix y = affine_project(m);
    EXPECT_LE(max_abs_diff(y, oracle::affine_project(m)), 1e-12);
    const auto r = check_stochasticity(y);
    EXPECT_LE(r.max_row_deviation, 1e-12);
    EXPECT_LE(r.max_col_deviation, 1e-12);
  }
}

TEST(Project, IdentityIsFixed) {
  for (auto s : {ProjectionSettings{}, splitting()})
    EXPECT_LE(max_abs_diff(project(SquareMatrix::identity(4), s).matrix(), SquareMatrix::identity(4)), 1e-12);
}

TEST(Project, TopRowOnesGoesToCenter) {
  const auto m = SquareMatrix::from_rows({{1, 1}, {0, 0}});
  EXPECT_LE(max_abs_diff(project(m).matrix(), SquareMatrix::uniform(2)), 1e-10);
  EXPECT_LE(max_abs_diff(project(m, splitting()).matrix(), SquareMatrix::uniform(2)), 1e-10);
}

TEST(Project, CheckerboardPerturbation) {
  std::mt19937_64 rng(3);
  const SquareMatrix base = qr_dsm(gaussian_matrix(4, rng), 0).matrix();
  SquareMatrix m = base;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) += 0.3 * (((i + j) % 2 == 0) ? 1.0 : -1.0);
  const SquareMatrix a = project(m).matrix();
  const SquareMatrix b = project(m, splitting()).matrix();
  EXPECT_LE(frobenius_distance(a, b), 1e-7);
  EXPECT_LE(oracle::optimality_gap(m, a), 1e-9);
}

TEST(Project, SatisfiesOptimalityCertificate) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + t % 5;
    const SquareMatrix m = gaussian_matrix(n, rng);
    const Dsm x = project(m);
    EXPECT_GE(x.report().min_entry, 0.0);
    EXPECT_LE(oracle::optimality_gap(m, x.matrix()), 1e-9) << "n=" << n;
  }
}

TEST(Project, MethodsAgree) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const SquareMatrix m = gaussian_matrix(8, rng);
    EXPECT_LE(frobenius_distance(project(m).matrix(), project(m, splitting()).matrix()), 1e-7);
  }
}

TEST(Project, Idempotent) {
  std::mt19937_64 rng(6);
  const ProjectionSettings s;
  for (int t = 0; t < 50; ++t) {
    const SquareMatrix p = project(gaussian_matrix(6, rng)).matrix();
    EXPECT_LE(frobenius_distance(project(p).matrix(), p), 2 * s.tolerance);
  }
}

TEST(Project, NonExpansive) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const SquareMatrix a = gaussian_matrix(5, rng);
    const SquareMatrix b = a + gaussian_matrix(5, rng, 0.3);
    EXPECT_LE(frobenius_distance(project(a).matrix(), project(b).matrix()), frobenius_distance(a, b) + 1e-9);
  }
}

TEST(Project, PermutationEquivariant) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const SquareMatrix m = gaussian_matrix(6, rng);
    const auto left = random_permutation(6, rng);
    const auto right = random_permutation(6, rng);
    EXPECT_LE(max_abs_diff(project(permute(m, left, right)).matrix(), permute(project(m).matrix(), left, right)),
              1e-9);
  }
}

TEST(Project, BudgetExhaustionCarriesLastIterate) {
  std::mt19937_64 rng(9);
  const SquareMatrix m = gaussian_matrix(8, rng, 5.0);
  ProjectionSettings s;
  s.max_iterations = 2;
  try {
    project(m, s);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().n(), 8u);
    EXPECT_GT(std::max(e.report().max_row_deviation, e.report().max_col_deviation), 0.0);
  }
}

TEST(Project, RejectsInvalidSettings) {
  ProjectionSettings s;
  s.tolerance = 0.0;
  EXPECT_THROW(project(SquareMatrix::identity(2), s), UsageError);
  s = {};
  s.max_iterations = 0;
  EXPECT_THROW(project(SquareMatrix::identity(2), s), UsageError);
}

TEST(BirkhoffDistance, ZeroOnThePolytope) {
  const std::vector<std::size_t> perm{3, 1, 0, 2};
  EXPECT_LE(birkhoff_distance(SquareMatrix::permutation(perm)), 1e-12);
  EXPECT_LE(birkhoff_distance(SquareMatrix::uniform(5)), 1e-12);
}

TEST(BirkhoffDistance, SoftmaxIsOnlyRowStochastic) {
  std::mt19937_64 rng(10);
  std::vector<double> d;
  for (int t = 0; t < 100; ++t) d.push_back(birkhoff_distance(softmax_rows(gaussian_matrix(8, rng), 1.0)));
  std::nth_element(d.begin(), d.begin() + 50, d.end());
  EXPECT_GT(d[50], 0.1);
}

TEST(BirkhoffDistance, ReportField) {
  const auto r = stochasticity_with_distance(SquareMatrix::from_rows({{1, 1}, {0, 0}}));
  ASSERT_TRUE(r.frobenius_to_birkhoff.has_value());
  EXPECT_NEAR(*r.frobenius_to_birkhoff, 1.0, 1e-9);
}

}  // namespace
}  // namespace dsattn
