#include <gtest/gtest.h>

#include <cmath>

#include "eigennoise/eigen.hpp"
#include "eigennoise/glove.hpp"

using namespace eigennoise;

namespace {

void expect_orthonormal_columns(const Matrix& u, double tol) {
  EXPECT_LT(max_abs_diff(matmul(u.transpose(), u), Matrix::identity(u.cols())), tol);
}

double col_diff_up_to_sign(const Matrix& a, std::size_t ca, const Matrix& b, std::size_t cb) {
  double plus = 0.0, minus = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    plus = std::max(plus, std::abs(a(r, ca) - b(r, cb)));
    minus = std::max(minus, std::abs(a(r, ca) + b(r, cb)));
  }
  return std::min(plus, minus);
}

Matrix symmetric_2x2() {
  Matrix a(2, 2);
  a(0, 0) = 2;
  a(0, 1) = 1;
  a(1, 0) = 1;
  a(1, 1) = 2;
  return a;
}

}  // namespace

TEST(Analytic, LinearTwoByTwo) {
  AnalyticOptions opt;
  const auto f = eigennoise_analytic(HarmonicModel(2, 1), 1, opt);
  ASSERT_EQ(f.d, 1u);
  EXPECT_NEAR(f.eigenvalues[0], 10.0 / 3.0, 1e-14);
  EXPECT_NEAR(f.u(0, 0), 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(f.u(1, 0), 1.0 / std::sqrt(5.0), 1e-15);
}

TEST(Analytic, FullDimensionReconstructsModel) {
  for (bool rotate : {false, true}) {
    AnalyticOptions opt;
    if (!rotate) opt.rotation_seed.reset();
    HarmonicModel m(4, 3);
    const auto f = eigennoise_analytic(m, 4, opt);
    expect_orthonormal_columns(f.u, 1e-12);
    EXPECT_LT(max_abs_diff(f.reconstruction(), m.materialize().values), 1e-8);
  }
}

TEST(Analytic, VColumnsAreScaledU) {
  const auto f = eigennoise_analytic(HarmonicModel(30, 5), 6, {EigenMode::log});
  for (std::size_t k = 0; k < f.d; ++k)
    for (std::size_t r = 0; r < f.n; ++r)
      EXPECT_NEAR(f.v(r, k), f.eigenvalues[k] * f.u(r, k), 1e-12 * std::abs(f.eigenvalues[k]));
  const auto rec = f.reconstruction();
  EXPECT_LT(max_abs_diff(rec, rec.transpose()), 1e-8);
}

TEST(Analytic, RejectsDAboveN) {
  EXPECT_THROW(eigennoise_analytic(HarmonicModel(3, 1), 4), InvalidArgument);
  EXPECT_THROW(eigennoise_analytic(HarmonicModel(3, 1, MinEntryMode::floor_at_one), 2),
               InvalidArgument);
}

TEST(Analytic, MatchesJacobiOracle) {
  for (std::size_t n : {2u, 3u, 9u, 31u, 64u}) {
    HarmonicModel m(n, 5);
    for (EigenMode mode : {EigenMode::linear, EigenMode::log}) {
      const auto f = eigennoise_analytic(m, std::min<std::size_t>(n, 4), {mode});
      const auto full = dense_eigh(mode == EigenMode::linear ? m.materialize().values
                                                             : m.log_matrix());
      const auto oracle = truncate(full, n, Ordering::by_magnitude);
      const std::size_t nonzero = mode == EigenMode::linear ? 1 : 2;
      for (std::size_t k = 0; k < nonzero; ++k) {
        EXPECT_NEAR(f.eigenvalues[k], oracle.eigenvalues[k], 1e-8 * std::abs(oracle.eigenvalues[k]));
        EXPECT_LT(col_diff_up_to_sign(f.u, k, oracle.u, k), 1e-8);
      }
      for (std::size_t k = nonzero; k < n; ++k)
        EXPECT_LT(std::abs(oracle.eigenvalues[k]), 1e-8 * std::abs(oracle.eigenvalues[0]));
    }
  }
}

TEST(Analytic, CompletionIsOrthonormalAndDeterministic) {
  HarmonicModel m(200, 5);
  for (EigenMode mode : {EigenMode::linear, EigenMode::log}) {
    for (bool rotate : {false, true}) {
      AnalyticOptions opt{mode};
      if (!rotate) opt.rotation_seed.reset();
      const auto a = eigennoise_analytic(m, 25, opt);
      const auto b = eigennoise_analytic(m, 25, opt);
      expect_orthonormal_columns(a.u, 1e-8);
      EXPECT_EQ(a.u, b.u);
      for (std::size_t k = (mode == EigenMode::linear ? 1 : 2); k < 25; ++k)
        EXPECT_EQ(a.eigenvalues[k], 0.0);
    }
  }
  AnalyticOptions s1, s2;
  s2.rotation_seed = 99;
  EXPECT_NE(eigennoise_analytic(m, 10, s1).u, eigennoise_analytic(m, 10, s2).u);
}

TEST(Analytic, RetainedFactorIsScaleInvariant) {
  for (EigenMode mode : {EigenMode::linear}) {
    const auto a = eigennoise_analytic(HarmonicModel(40, 1), 8, {mode});
    const auto b = eigennoise_analytic(HarmonicModel(40, 7), 8, {mode});
    for (std::size_t k = 0; k < 8; ++k) EXPECT_LT(col_diff_up_to_sign(a.u, k, b.u, k), 1e-14);
    EXPECT_NEAR(b.eigenvalues[0] / a.eigenvalues[0], 7.0, 1e-12);
  }
  // Oracle side: scaling the dense matrix leaves the Jacobi eigenvectors alone.
  const auto x1 = HarmonicModel(20, 2).materialize().values;
  const auto x2 = HarmonicModel(20, 6).materialize().values;
  const auto t1 = truncate(dense_eigh(x1), 1);
  const auto t2 = truncate(dense_eigh(x2), 1);
  EXPECT_LT(col_diff_up_to_sign(t1.u, 0, t2.u, 0), 1e-10);
}

TEST(Analytic, UniformRanksGiveFlatVector) {
  // A rank-one model with every rank equal to one has u = 1/sqrt(N).
  const std::size_t n = 9;
  Matrix ones(n, n, 3.0);
  const auto t = truncate(dense_eigh(ones), 1);
  for (std::size_t r = 0; r < n; ++r) EXPECT_NEAR(t.u(r, 0), 1.0 / 3.0, 1e-12);
}

TEST(Analytic, ByValueOrdersLogPairBySign) {
  HarmonicModel m(16, 5);
  const auto mag = eigennoise_analytic(m, 2, {EigenMode::log, Ordering::by_magnitude});
  const auto val = eigennoise_analytic(m, 2, {EigenMode::log, Ordering::by_value});
  EXPECT_GE(std::abs(mag.eigenvalues[0]), std::abs(mag.eigenvalues[1]));
  EXPECT_GT(val.eigenvalues[0], val.eigenvalues[1]);
  EXPECT_LT(mag.eigenvalues[0] * mag.eigenvalues[1], 0.0);
}

TEST(Truncate, RankOneIsExact) {
  const auto x = HarmonicModel(12, 2).materialize().values;
  const auto full = dense_eigh(x);
  for (std::size_t d : {1u, 3u, 12u})
    EXPECT_LT(max_abs_diff(truncate(full, d).reconstruction(), x), 1e-9);
}

TEST(Truncate, DiscardedEigenvalueEnergy) {
  const auto full = dense_eigh(symmetric_2x2());
  const auto t = truncate(full, 1, Ordering::by_magnitude);
  Matrix diff = t.reconstruction();
  const auto x = symmetric_2x2();
  for (std::size_t i = 0; i < 4; ++i) diff.data()[i] -= x.data()[i];
  EXPECT_NEAR(frobenius_sq(diff), 1.0, 1e-12);
  EXPECT_NEAR(discarded_energy(full, 1, Ordering::by_magnitude), 1.0, 1e-12);
}

TEST(Truncate, FullDimensionIsTheDecomposition) {
  const auto full = dense_eigh(symmetric_2x2());
  const auto t = truncate(full, 2);
  EXPECT_EQ(t.eigenvalues, full.values);
  EXPECT_LT(max_abs_diff(t.u, full.vectors), 1e-15);
}

TEST(Truncate, EckartYoungOnLogTarget) {
  for (std::size_t n : {4u, 16u, 32u}) {
    const auto target = HarmonicModel(n, 5).log_matrix();
    const auto full = dense_eigh(target);
    for (std::size_t d : {1u, 2u, 4u}) {
      const auto t = truncate(full, d, Ordering::by_magnitude);
      const double loss = glove::loss_eq2({t.u, t.v}, target);
      const double expect = discarded_energy(full, d, Ordering::by_magnitude);
      // Zero residual (d >= rank) is judged against the target's energy.
      EXPECT_LE(std::abs(loss - expect), 1e-6 * std::max(expect, 1e-12 * frobenius_sq(target)));
    }
  }
}

TEST(ToEmbedding, RowsFollowRanks) {
  const auto f = eigennoise_analytic(HarmonicModel(2, 1), 1);
  const auto table = to_embedding(f);
  EXPECT_EQ(table.vocab_size(), 2u);
  EXPECT_EQ(table.storage().rows(), 4u);
  EXPECT_NEAR(table.vector(1)[0], 0.8944, 1e-4);
  EXPECT_NEAR(table.vector(2)[0], 0.4472, 1e-4);
  EXPECT_EQ(table.vector(kOovRank)[0], 0.0);
  EXPECT_EQ(table.vector(kPadRank)[0], 0.0);
  const auto vt = to_embedding(f, FactorSide::v);
  EXPECT_NEAR(vt.vector(1)[0], f.eigenvalues[0] * f.u(0, 0), 1e-14);
}

TEST(ToEmbedding, FullVocabularyShape) {
  const auto f = eigennoise_analytic(HarmonicModel(20000, 5), 50);
  const auto table = to_embedding(f);
  EXPECT_EQ(table.storage().rows(), 20002u);
  EXPECT_EQ(table.dim(), 50u);
  // spot-check orthonormality of a few columns at full scale
  for (std::size_t a = 0; a < 50; a += 7)
    for (std::size_t b = a; b < 50; b += 11) {
      double s = 0.0;
      for (std::size_t r = 0; r < 20000; ++r) s += f.u(r, a) * f.u(r, b);
      EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-8);
    }
}
