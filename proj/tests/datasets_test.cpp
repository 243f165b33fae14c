#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eigennoise/datasets.hpp"
#include "eigennoise/probe.hpp"

using namespace eigennoise;

TEST(ParseConll, SingleLineColumns) {
  std::istringstream a("EU NNP B-NP B-ORG\n\n");
  const auto ds = parse_conll(a, 0, 3);
  ASSERT_EQ(ds.sentences.size(), 1u);
  EXPECT_EQ(ds.sentences[0], std::vector<std::string>{"EU"});
  EXPECT_EQ(ds.label_set.name(ds.labels[0][0]), "B-ORG");
  std::istringstream b("EU NNP B-NP B-ORG\n\n");
  const auto pos = parse_conll(b, 0, 1);
  EXPECT_EQ(pos.label_set.name(pos.labels[0][0]), "NNP");
}

TEST(ParseConll, SentencesAndDocstart) {
  std::istringstream in("-DOCSTART- -X- O\n\na X O\nb Y O\n\n\nc X B\n");
  const auto ds = parse_conll(in, 0, 1);
  ASSERT_EQ(ds.sentences.size(), 2u);
  EXPECT_EQ(ds.sentences[0].size(), 2u);
  EXPECT_EQ(ds.label_set.names(), (std::vector<std::string>{"X", "Y"}));
}

TEST(ParseConll, RaggedLineNamesLine) {
  std::istringstream in("a X O\nb\n");
  try {
    parse_conll(in, 0, 2);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseConll, FixedLabelSetRejectsUnknown) {
  std::istringstream train("a X\nb Y\n");
  const auto ds = parse_conll(train, 0, 1);
  std::istringstream dev("c Y\nd X\n");
  const auto dv = parse_conll(dev, 0, 1, &ds.label_set, "dev");
  EXPECT_EQ(dv.label_set, ds.label_set);
  EXPECT_EQ(dv.labels[0][0], 1u);
  std::istringstream test("e Z\n");
  EXPECT_THROW(parse_conll(test, 0, 1, &ds.label_set, "test"), DataError);
}

TEST(ParseConll, Fixture) {
  const auto ds = parse_conll(std::string(EIGENNOISE_FIXTURE_DIR) + "/tiny.conll", 0, 3);
  EXPECT_EQ(ds.sentences.size(), 4u);
  EXPECT_EQ(ds.num_tokens(), 31u);
  EXPECT_EQ(ds.label_set.size(), 7u);
  for (std::size_t s = 0; s < ds.sentences.size(); ++s)
    EXPECT_EQ(ds.sentences[s].size(), ds.labels[s].size());
}

TEST(WriteConll, RoundTrip) {
  const auto ds = parse_conll(std::string(EIGENNOISE_FIXTURE_DIR) + "/tiny.conll", 0, 3);
  std::stringstream ss;
  write_conll(ss, ds);
  const auto back = parse_conll(ss, 0, 1);
  EXPECT_EQ(back.sentences, ds.sentences);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.label_set, ds.label_set);
}

TEST(ParseTsv, Records) {
  std::istringstream in("1\tgreat game\n0\tbad\n2\tmeh\n");
  const auto ds = parse_tsv(in);
  EXPECT_EQ(ds.texts[0], "great game");
  EXPECT_EQ(ds.label_set.name(ds.labels[0]), "1");
  EXPECT_EQ(ds.label_set.size(), 3u);
  std::stringstream ss;
  write_tsv(ss, ds);
  const auto back = parse_tsv(ss);
  EXPECT_EQ(back.texts, ds.texts);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(ParseTsv, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(parse_tsv(empty), DataError);
  std::istringstream no_tab("1\tok\nbroken line\n");
  try {
    parse_tsv(no_tab);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(DiscoverSplits, BySuffix) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "eigennoise_splits_test";
  fs::create_directories(dir);
  const auto base = (dir / "task").string();
  std::ofstream(base + ".train") << "1\tx\n";
  std::ofstream(base + ".test") << "1\tx\n";
  fs::remove(base + ".dev");
  const auto p = discover_splits(base);
  EXPECT_EQ(p.train, base + ".train");
  EXPECT_FALSE(p.dev.has_value());
  EXPECT_TRUE(p.test.has_value());
  EXPECT_THROW(discover_splits((dir / "missing").string()), DataError);
  fs::remove_all(dir);
}

TEST(SynthTask, DeterministicAndBalanced) {
  const auto a = synth_task(SynthKind::separable, 200, 4, 2, 0);
  EXPECT_EQ(a, synth_task(SynthKind::separable, 200, 4, 2, 0));
  EXPECT_EQ(a.num_classes, 2u);
  std::size_t ones = 0;
  for (auto l : a.labels) ones += l;
  EXPECT_EQ(ones, 100u);
  EXPECT_THROW(synth_task(SynthKind::separable, 15, 4, 2, 0), InvalidArgument);
}

TEST(SynthTask, SeparableIsLearnedByProbe) {
  const auto train_ds = synth_task(SynthKind::separable, 200, 4, 2, 0);
  const auto dev_ds = synth_task(SynthKind::separable, 200, 4, 2, 1);
  const auto train = make_feature_examples(train_ds);
  const auto dev = make_feature_examples(dev_ds);
  TrainConfig cfg;
  cfg.lr = 0.01;
  const auto r = train_probe(ProbeModel::init(4, 16, 2, 0), train, dev, cfg);
  EXPECT_GE(accuracy(r.model, dev), 0.95);
}

TEST(SynthTokenTask, CuesCarryTheLabel) {
  const auto ds = synth_token_task(SynthKind::separable, 100, 3, 5);
  ASSERT_EQ(ds.texts.size(), 100u);
  EXPECT_EQ(ds.label_set.size(), 3u);
  for (std::size_t i = 0; i < ds.texts.size(); ++i) {
    const auto toks = tokenize(ds.texts[i]);
    EXPECT_EQ(toks.size(), 8u);
    std::size_t cues = 0;
    for (const auto& t : toks)
      if (t[0] == 'c') {
        ++cues;
        EXPECT_EQ(t.substr(1, t.find('_') - 1), std::to_string(ds.labels[i]));
      }
    EXPECT_EQ(cues, 2u);
  }
  const auto again = synth_token_task(SynthKind::separable, 100, 3, 5);
  EXPECT_EQ(again.texts, ds.texts);
}
