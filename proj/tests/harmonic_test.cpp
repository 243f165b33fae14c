#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "eigennoise/harmonic.hpp"
#include "eigennoise/jacobi.hpp"

using namespace eigennoise;

TEST(XhatEntry, DirectEvaluation) {
  HarmonicModel m(4, 2);
  // 2*2*4 / (1*1*25/12) = 16*12/25
  EXPECT_NEAR(xhat_entry(m, 1, 1), 7.68, 1e-12);
  EXPECT_NEAR(xhat_entry(m, 4, 4), 0.48, 1e-12);
  for (std::size_t i = 1; i <= 4; ++i)
    for (std::size_t j = 1; j <= 4; ++j) {
      EXPECT_EQ(xhat_entry(m, i, j), xhat_entry(m, j, i));
      EXPECT_GT(xhat_entry(m, i, j), 0.0);
    }
}

TEST(XhatEntry, OutOfRange) {
  HarmonicModel m(4, 2);
  EXPECT_THROW(xhat_entry(m, 0, 1), InvalidArgument);
  EXPECT_THROW(xhat_entry(m, 1, 5), InvalidArgument);
  EXPECT_THROW(HarmonicModel(0, 1), InvalidArgument);
  EXPECT_THROW(HarmonicModel(3, 0), InvalidArgument);
}

TEST(Materialize, TwoByTwo) {
  const auto c = HarmonicModel(2, 1).materialize();
  const double k = 8.0 / 3.0;
  EXPECT_NEAR(c.values(0, 0), k, 1e-14);
  EXPECT_NEAR(c.values(0, 1), k / 2, 1e-14);
  EXPECT_NEAR(c.values(1, 0), k / 2, 1e-14);
  EXPECT_NEAR(c.values(1, 1), k / 4, 1e-14);
  EXPECT_NEAR(c.row_marginals[0], 4.0, 1e-12);
}

TEST(Materialize, SingleRank) {
  const auto c = HarmonicModel(1, 1).materialize();
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c.values(0, 0), 2.0);
}

TEST(Materialize, MarginalsMatchSelfSampling) {
  for (std::size_t n : {1u, 5u, 64u, 300u}) {
    for (std::size_t w : {1u, 5u}) {
      HarmonicModel m(n, w);
      const auto c = m.materialize();
      for (std::size_t i = 1; i <= n; ++i) {
        const double expect = 2.0 * w * n / static_cast<double>(i);
        EXPECT_NEAR(c.row_marginals[i - 1], expect, 1e-9 * expect);
        EXPECT_NEAR(m.analytic_row_marginal(i), expect, 1e-9 * expect);
      }
      const double total = 2.0 * w * n * harmonic_number(n);
      EXPECT_NEAR(c.total, total, 1e-9 * total);
    }
  }
}

TEST(Materialize, DenseCap) {
  EXPECT_THROW(HarmonicModel(kDenseCap + 1, 1).materialize(), InvalidArgument);
}

TEST(Materialize, DoublingWindowDoublesEverything) {
  const auto a = HarmonicModel(30, 3).materialize();
  const auto b = HarmonicModel(30, 6).materialize();
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_DOUBLE_EQ(b.row_marginals[i], 2.0 * a.row_marginals[i]);
    for (std::size_t j = 0; j < 30; ++j) EXPECT_DOUBLE_EQ(b.values(i, j), 2.0 * a.values(i, j));
  }
}

TEST(PmiShifted, ZeroOnTheIndependentModel) {
  for (std::size_t n : {2u, 10u, 100u}) {
    const auto c = HarmonicModel(n, 5).materialize();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        EXPECT_LT(std::abs(pmi_shifted(c, i, j, 1.0)), 1e-10);
        EXPECT_NEAR(pmi_shifted(c, i, j, 5.0), -std::log(5.0), 1e-9);
      }
  }
}

TEST(PmiShifted, HandBuiltMatrix) {
  Matrix x(2, 2);
  x(0, 0) = 2;
  x(0, 1) = 1;
  x(1, 0) = 1;
  x(1, 1) = 2;
  const auto c = CoocMatrix::from_values(x);
  EXPECT_NEAR(pmi_shifted(c, 0, 0, 1.0), std::log(4.0 / 3.0), 1e-14);
  x(0, 1) = 0;
  EXPECT_THROW(pmi_shifted(CoocMatrix::from_values(x), 0, 1, 1.0), DataError);
}

TEST(LogXhat, ValuesAndRankIdentity) {
  HarmonicModel m(4, 2);
  EXPECT_NEAR(log_xhat_entry(m, 1, 1), std::log(7.68), 1e-12);
  EXPECT_EQ(log_xhat_entry(m, 1, 2), log_xhat_entry(m, 2, 1));
  HarmonicModel big(50, 5);
  const double base = log_xhat_entry(big, 1, 1);
  for (std::size_t i = 1; i <= 50; ++i)
    for (std::size_t j = 1; j <= 50; ++j) {
      const double id = log_xhat_entry(big, i, j) - base + std::log(double(i)) + std::log(double(j));
      EXPECT_NEAR(id, 0.0, 1e-12);
      EXPECT_NEAR(log_xhat_entry(big, i, j), std::log(xhat_entry(big, i, j)), 1e-12);
    }
}

TEST(StructuralRank, LinearOneLogTwo) {
  for (std::size_t n : {2u, 7u, 33u, 64u}) {
    HarmonicModel m(n, 5);
    const auto lin = dense_eigh(m.materialize().values);
    EXPECT_EQ(count_above(lin.values, 1e-8), 1u) << n;
    const auto lg = dense_eigh(m.log_matrix());
    EXPECT_EQ(count_above(lg.values, 1e-8), 2u) << n;
  }
}

TEST(MinEntryModes, RescaleAndFloor) {
  HarmonicModel verbatim(10, 2);
  const double min_entry = xhat_entry(verbatim, 10, 10);
  EXPECT_NEAR(min_entry, 4.0 / (10.0 * harmonic_number(10)), 1e-14);

  HarmonicModel rescaled(10, 2, MinEntryMode::rescale);
  EXPECT_NEAR(xhat_entry(rescaled, 10, 10), 1.0, 1e-14);
  EXPECT_NEAR(xhat_entry(rescaled, 1, 3) / xhat_entry(verbatim, 1, 3), 1.0 / min_entry, 1e-9);

  HarmonicModel floored(10, 2, MinEntryMode::floor_at_one);
  for (std::size_t i = 1; i <= 10; ++i)
    for (std::size_t j = 1; j <= 10; ++j) EXPECT_GE(xhat_entry(floored, i, j), 1.0);
}

TEST(DumpGrid, OneRowPerLine) {
  std::ostringstream os;
  dump_grid(os, HarmonicModel(2, 1).materialize().values);
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    double a, b;
    ASSERT_TRUE(fields >> a >> b);
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}
