#include <gtest/gtest.h>

#include <cmath>

#include "eigennoise/jacobi.hpp"
#include "eigennoise/rng.hpp"

using namespace eigennoise;

namespace {

Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.uniform(-1.0, 1.0);
  return a;
}

void expect_orthonormal(const Matrix& q, double tol) {
  const auto gram = matmul(q.transpose(), q);
  EXPECT_LT(max_abs_diff(gram, Matrix::identity(q.cols())), tol);
}

}  // namespace

TEST(DenseEigh, Identity) {
  const auto e = dense_eigh(Matrix::identity(3));
  for (double l : e.values) EXPECT_DOUBLE_EQ(l, 1.0);
  expect_orthonormal(e.vectors, 1e-14);
}

TEST(DenseEigh, TwoByTwoByHand) {
  Matrix a(2, 2);
  a(0, 0) = 2;
  a(0, 1) = 1;
  a(1, 0) = 1;
  a(1, 1) = 2;
  const auto e = dense_eigh(a);
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(e.vectors(0, 0), h, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), h, 1e-14);
  // (1, -1)/sqrt 2 under the sign rule: tie on magnitude keeps index 0 positive.
  EXPECT_NEAR(e.vectors(0, 1), h, 1e-14);
  EXPECT_NEAR(e.vectors(1, 1), -h, 1e-14);
}

TEST(DenseEigh, RankOneHarmonic) {
  const auto e = dense_eigh(HarmonicModel(2, 1).materialize().values);
  EXPECT_NEAR(e.values[0], 10.0 / 3.0, 1e-13);
  EXPECT_NEAR(e.values[1], 0.0, 1e-13);
  EXPECT_NEAR(e.vectors(0, 0), 2.0 / std::sqrt(5.0), 1e-13);
  EXPECT_NEAR(e.vectors(1, 0), 1.0 / std::sqrt(5.0), 1e-13);
}

TEST(DenseEigh, ReconstructsRandomSymmetric) {
  Rng rng(42);
  for (std::size_t n : {1u, 2u, 5u, 17u, 64u, 256u}) {
    const auto a = random_symmetric(n, rng);
    const auto e = dense_eigh(a);
    EXPECT_LT(max_abs_diff(reconstruct(e), a), 1e-7) << n;
    expect_orthonormal(e.vectors, 1e-10);
    for (std::size_t k = 1; k < n; ++k) EXPECT_GE(e.values[k - 1], e.values[k]);
  }
}

TEST(DenseEigh, SignRule) {
  Rng rng(5);
  const auto e = dense_eigh(random_symmetric(12, rng));
  for (std::size_t k = 0; k < 12; ++k) {
    auto col = e.vectors.col(k);
    std::size_t best = 0;
    for (std::size_t i = 1; i < col.size(); ++i)
      if (std::abs(col[i]) > std::abs(col[best])) best = i;
    EXPECT_GT(col[best], 0.0);
  }
}

TEST(DenseEigh, RejectsAsymmetry) {
  Matrix a(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(dense_eigh(a), DataError);
}

TEST(DenseEigh, ReportsNonConvergence) {
  Rng rng(9);
  JacobiOptions opt;
  opt.max_sweeps = 0;
  EXPECT_THROW(dense_eigh(random_symmetric(6, rng), opt), NumericalError);
}
