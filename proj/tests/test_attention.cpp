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

#include <cmath>
#include <random>

#include "dsattn/dsattn.hpp"
#include "oracles.hpp"

namespace dsattn {
namespace {

TEST(Softmax, Examples) {
  const SquareMatrix y = softmax_rows(SquareMatrix::from_rows({{0, std::log(3.0)}, {5, 5}}), 1.0);
  EXPECT_NEAR(y(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(y(0, 1), 0.75, 1e-15);
  EXPECT_EQ(y(1, 0), 0.5);
  // huge logits do not overflow
  const SquareMatrix big = softmax_rows(SquareMatrix::from_rows({{1000, 0}, {0, -1000}}), 1.0);
  EXPECT_TRUE(big.all_finite());
  EXPECT_EQ(big(0, 0), 1.0);
  EXPECT_THROW(softmax_rows(SquareMatrix(2), 0.0), UsageError);
}

TEST(Softmax, TemperatureFlattens) {
  std::mt19937_64 rng(1);
  const SquareMatrix m = gaussian_matrix(6, rng);
  EXPECT_GT(shannon_entropy(softmax_rows(m, 4.0)), shannon_entropy(softmax_rows(m, 1.0)));
  EXPECT_GT(shannon_entropy(softmax_rows(m, 1.0)), shannon_entropy(softmax_rows(m, 0.25)));
}

TEST(NormSoftmax, TemperatureRule) {
  const auto m = SquareMatrix::from_rows({{0, 4}, {0, 4}});  // std 2, variance 4
  EXPECT_DOUBLE_EQ(norm_softmax_temperature(m, 10.0, 1), 2.0);
  EXPECT_DOUBLE_EQ(norm_softmax_temperature(m, 3.0, 2), 3.0);
  EXPECT_DOUBLE_EQ(norm_softmax_temperature(m, 10.0, 2), 4.0);
  EXPECT_DOUBLE_EQ(norm_softmax_temperature(SquareMatrix::ones(3), 1.0, 1), kNormSoftmaxFloor);
  EXPECT_THROW(norm_softmax_temperature(m, 1.0, 3), UsageError);
  EXPECT_EQ(norm_softmax(m, 10.0, 1), softmax_rows(m, 2.0));
}

DenseMatrix dense(std::size_t r, std::size_t c, std::vector<double> v) { return DenseMatrix(r, c, std::move(v)); }

TEST(AttentionForward, ZeroScoresAverageTheValues) {
  AttentionConfig c;
  c.seq_len = 2;
  c.head_dim = 1;
  const DenseMatrix zero = dense(2, 1, {0, 0});
  const DenseMatrix v = dense(2, 2, {1, 2, 3, 4});
  const AttentionResult r = attention_forward(zero, zero, v, c);
  EXPECT_EQ(r.attn, SquareMatrix::uniform(2));
  EXPECT_EQ(r.output.values(), (std::vector<double>{2, 3, 2, 3}));
}

TEST(AttentionForward, IdentityCircuitPassesValuesThrough) {
  std::mt19937_64 rng(2);
  AttentionConfig c;
  c.seq_len = 4;
  c.head_dim = 8;
  const CircuitConfig circuit{4, 1, 2, Ansatz::Simple};
  c.normalizer = normalizer::Qontot{circuit, ParamVec(std::vector<double>(circuit.param_count(), 0.0))};
  const DenseMatrix q = gaussian_dense(4, 8, rng), k = gaussian_dense(4, 8, rng), v = gaussian_dense(4, 3, rng);
  const AttentionResult r = attention_forward(q, k, v, c);
  EXPECT_EQ(r.attn, SquareMatrix::identity(4));
  EXPECT_EQ(r.output.values(), v.values());
}

TEST(AttentionForward, EveryNormalizerIsRowStochastic) {
  std::mt19937_64 rng(3);
  const CircuitConfig circuit{8, 1, 4, Ansatz::Trotter};
  const std::vector<NormalizerKind> kinds{
      normalizer::Softmax{},        normalizer::SoftmaxSigma{},          normalizer::SoftmaxSigma2{},
      normalizer::SinkhornNaive{3}, normalizer::SinkhornOT{21},          normalizer::QrDsm{0},
      normalizer::Qontot{circuit, random_params(circuit, 4)}, normalizer::BirkhoffProject{}};
  const DenseMatrix q = gaussian_dense(8, 16, rng), k = gaussian_dense(8, 16, rng), v = gaussian_dense(8, 4, rng);
  for (const auto& kind : kinds) {
    AttentionConfig c;
    c.seq_len = 8;
    c.head_dim = 16;
    c.normalizer = kind;
    const AttentionResult r = attention_forward(q, k, v, c);
    const auto rep = check_stochasticity(r.attn);
    EXPECT_LE(rep.max_row_deviation, 1e-9) << kind.index();
    if (!is_softmax_family(kind) && !std::holds_alternative<normalizer::SinkhornNaive>(kind)) {
      EXPECT_LE(rep.max_col_deviation, 1e-6) << kind.index();
    }
  }
}

TEST(AttentionForward, SinkhornFlavorsAgree) {
  std::mt19937_64 rng(4);
  const SquareMatrix s = gaussian_matrix(8, rng, 3.0);
  EXPECT_LE(max_abs_diff(normalize_scores(s, 2.0, normalizer::SinkhornNaive{21}),
                         normalize_scores(s, 2.0, normalizer::SinkhornOT{21})),
            1e-12);
}

TEST(AttentionForward, RejectsMismatchedShapes) {
  AttentionConfig c;
  c.seq_len = 2;
  c.head_dim = 2;
  const DenseMatrix q = dense(2, 2, {1, 0, 0, 1});
  EXPECT_THROW(attention_forward(q, dense(2, 1, {1, 1}), q, c), DimensionError);
  EXPECT_THROW(attention_forward(q, q, dense(3, 1, {1, 1, 1}), c), DimensionError);
  c.temperature = 0.0;
  EXPECT_THROW(attention_forward(q, q, q, c), UsageError);
}

TEST(AttentionForward, DefaultTemperatureIsSqrtHeadDim) {
  AttentionConfig c;
  c.head_dim = 64;
  EXPECT_EQ(c.tau(), 8.0);
}

TEST(SinkhornVjp, MatchesFivePointDifferences) {
  std::mt19937_64 rng(5);
  for (int k : {1, 3, 7, 21})
    for (int t = 0; t < 5; ++t) {
      const SquareMatrix m = uniform_matrix(5, rng, 0.1, 10.0);
      const SquareMatrix g = gaussian_matrix(5, rng);
      const SquareMatrix numeric =
          oracle::fd_gradient([k](const SquareMatrix& x) { return sinkhorn_naive(x, k); }, m, g);
      EXPECT_LE(relative_error(sinkhorn_naive_vjp(m, k, g), numeric), 1e-7) << "k=" << k;
    }
}

TEST(SinkhornVjp, ConstantUpstreamAlongTheLastPassVanishes) {
  // the final pass normalizes rows, so g(i, j) = c_i has zero effect
  std::mt19937_64 rng(6);
  const SquareMatrix m = uniform_matrix(4, rng, 0.1, 10.0);
  SquareMatrix g(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) g(i, j) = static_cast<double>(i) - 1.5;
  const SquareMatrix dx = sinkhorn_naive_vjp(m, 3, g);
  for (double v : dx.data()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(SoftmaxVjp, MatchesFivePointDifferences) {
  std::mt19937_64 rng(7);
  for (double tau : {0.5, 1.0, 3.0})
    for (int t = 0; t < 5; ++t) {
      const SquareMatrix m = gaussian_matrix(6, rng);
      const SquareMatrix g = gaussian_matrix(6, rng);
      const SquareMatrix numeric =
          oracle::fd_gradient([tau](const SquareMatrix& x) { return softmax_rows(x, tau); }, m, g);
      EXPECT_LE(relative_error(softmax_vjp(m, tau, g), numeric), 1e-8) << "tau=" << tau;
    }
}

TEST(SoftmaxVjp, RowConstantUpstreamVanishes) {
  std::mt19937_64 rng(8);
  const SquareMatrix m = gaussian_matrix(4, rng);
  SquareMatrix g(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) g(i, j) = static_cast<double>(i);
  const SquareMatrix dx = softmax_vjp(m, 1.0, g);
  for (double v : dx.data()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Gradcheck, BothTargetsPass) {
  EXPECT_LE(gradcheck(GradientTarget::SinkhornNaive, 21, 8, 5, 1), 1e-6);
  EXPECT_LE(gradcheck(GradientTarget::Softmax, 0, 8, 5, 1), 1e-6);
}

}  // namespace
}  // namespace dsattn
