#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "eigennoise/rng.hpp"
#include "eigennoise/vocab.hpp"

using namespace eigennoise;

TEST(BuildVocab, CountsAndRanks) {
  const auto v = Vocabulary::build({"the", "cat", "the"}, false);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v.at_rank(1).token, "the");
  EXPECT_EQ(v.at_rank(1).count, 2u);
  EXPECT_EQ(v.at_rank(2).token, "cat");
  EXPECT_EQ(v.at_rank(2).count, 1u);
}

TEST(BuildVocab, TieBreakIsFirstOccurrence) {
  const auto v = Vocabulary::build({"a", "b"}, false);
  EXPECT_EQ(v.rank_of("a"), 1u);
  EXPECT_EQ(v.rank_of("b"), 2u);
  const auto w = Vocabulary::build({"b", "a"}, false);
  EXPECT_EQ(w.rank_of("b"), 1u);
}

TEST(BuildVocab, UniformDrawsMatchDirectCount) {
  Rng rng(7);
  std::vector<std::string> tokens;
  std::map<std::string, std::uint64_t> oracle;
  for (int i = 0; i < 1000; ++i) {
    std::string t = "t" + std::to_string(rng.below(10));
    ++oracle[t];
    tokens.push_back(t);
  }
  const auto v = Vocabulary::build(tokens, false);
  ASSERT_EQ(v.size(), 10u);
  for (std::size_t r = 1; r <= v.size(); ++r) {
    const auto& e = v.at_rank(r);
    EXPECT_EQ(e.rank, r);
    EXPECT_EQ(e.count, oracle.at(e.token));
    if (r > 1) {
      EXPECT_GE(v.at_rank(r - 1).count, e.count);
    }
  }
}

TEST(BuildVocab, EmptyStreamIsAnError) {
  EXPECT_THROW(Vocabulary::build({}, false), InvalidArgument);
}

TEST(BuildVocab, CaseFolding) {
  const auto v = Vocabulary::build({"The", "the", "cat"}, true);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.rank_of("The"), 1u);
  EXPECT_EQ(v.rank_of("THE"), 1u);
  const auto raw = Vocabulary::build({"The", "the", "cat"}, false);
  EXPECT_EQ(raw.size(), 3u);
  EXPECT_EQ(raw.rank_of("THE"), kOovRank);
}

TEST(BuildVocab, CapSendsRareTokensToOov) {
  const auto v = Vocabulary::build({"a", "a", "a", "b", "b", "c"}, false, 2);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.rank_of("c"), kOovRank);
}

TEST(RankOf, KnownAndUnknown) {
  const auto v = Vocabulary::build({"the", "cat", "the"}, false);
  EXPECT_EQ(v.rank_of("the"), 1u);
  EXPECT_EQ(v.rank_of("dog"), kOovRank);
}

TEST(RankOf, EveryTrainingTokenIsKnown) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> tokens;
    const auto len = 1 + rng.below(200);
    for (std::uint64_t i = 0; i < len; ++i) tokens.push_back("w" + std::to_string(rng.below(50)));
    const auto v = Vocabulary::build(tokens, false);
    for (const auto& t : tokens) EXPECT_NE(v.rank_of(t), kOovRank);
  }
}

TEST(BuildVocab, ShufflingDistinctCountsKeepsRanks) {
  std::vector<std::string> tokens;
  for (int k = 1; k <= 6; ++k)
    for (int c = 0; c < k; ++c) tokens.push_back("w" + std::to_string(k));
  const auto base = Vocabulary::build(tokens, false);
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(tokens);
    EXPECT_EQ(Vocabulary::build(tokens, false), base);
  }
}

TEST(HarmonicNumber, SmallValues) {
  EXPECT_DOUBLE_EQ(harmonic_number(1), 1.0);
  EXPECT_DOUBLE_EQ(harmonic_number(2), 1.5);
  EXPECT_NEAR(harmonic_number(4), 25.0 / 12.0, 1e-15);
  EXPECT_THROW(harmonic_number(0), InvalidArgument);
}

TEST(HarmonicNumber, IncreasingAndBounded) {
  double prev = 0.0;
  for (std::size_t n = 1; n <= 5000; n += 7) {
    const double h = harmonic_number(n);
    EXPECT_GT(h, prev);
    EXPECT_LE(h, 1.0 + std::log(static_cast<double>(n)) + 1e-12);
    prev = h;
  }
}

TEST(UnigramModel, ZipfEndpointsAndTotal) {
  for (std::size_t n : {1u, 2u, 17u, 1000u}) {
    UnigramModel u(n);
    EXPECT_DOUBLE_EQ(u.xhat(1), static_cast<double>(n));
    EXPECT_DOUBLE_EQ(u.xhat(n), 1.0);
    const double expect = static_cast<double>(n) * harmonic_number(n);
    EXPECT_NEAR(u.total(), expect, 1e-9 * expect);
  }
}

TEST(VocabFile, WriteThenReadIsIdentical) {
  const auto v = Vocabulary::build({"x", "y", "y", "z", "z", "z"}, false);
  std::stringstream ss;
  v.write(ss);
  EXPECT_EQ(ss.str(), "z\t3\t1\ny\t2\t2\nx\t1\t3\n");
  EXPECT_EQ(Vocabulary::read(ss, false), v);
}

TEST(VocabFile, RejectsRankGaps) {
  std::stringstream ss("a\t2\t1\nb\t1\t3\n");
  EXPECT_THROW(Vocabulary::read(ss, false), DataError);
  std::stringstream bad("a\t2\n");
  EXPECT_THROW(Vocabulary::read(bad, false), DataError);
}

TEST(Tokenize, StripsEdgePunctuation) {
  EXPECT_EQ(tokenize("Hello, world! (it's)  fine."),
            (std::vector<std::string>{"Hello", "world", "it's", "fine"}));
  EXPECT_TRUE(tokenize(" ... !! ").empty());
}
