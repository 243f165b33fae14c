#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eigennoise/error.hpp"
#include "eigennoise/matrix.hpp"
#include "eigennoise/rng.hpp"

namespace eigennoise {

/// Label names in first-appearance order; ids are positions.
class LabelSet {
 public:
  std::size_t add(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, names_.size());
    if (inserted) names_.push_back(name);
    return it->second;
  }

  std::optional<std::size_t> id_of(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(std::size_t id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const LabelSet& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
};

struct TokenDataset {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::vector<std::size_t>> labels;
  LabelSet label_set;
  std::string split;

  std::size_t num_tokens() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

struct SequenceDataset {
  std::vector<std::string> texts;
  std::vector<std::size_t> labels;
  LabelSet label_set;
  std::string split;
};

/// Pre-featurized examples (no embedding table involved).
struct FeatureDataset {
  Matrix features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  bool operator==(const FeatureDataset&) const = default;
};

namespace detail {

inline std::size_t resolve_label(const std::string& name, LabelSet& own, const LabelSet* fixed,
                                 std::size_t line_no) {
  if (!fixed) return own.add(name);
  auto id = fixed->id_of(name);
  if (!id)
    throw DataError("line " + std::to_string(line_no) + ": label '" + name +
                    "' does not occur in the training label set");
  return *id;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace detail

/// CoNLL column format: whitespace-separated columns, a blank line ends a
/// sentence, "-DOCSTART-" lines are skipped. Column indices are 0-based.
/// When `fixed` is given, labels are mapped into it and unknown labels are
/// an error; otherwise the label set is built in first-appearance order.
inline TokenDataset parse_conll(std::istream& in, std::size_t token_column,
                                std::size_t label_column, const LabelSet* fixed = nullptr,
                                std::string split = "train") {
  TokenDataset ds;
  ds.split = std::move(split);
  std::vector<std::string> tokens;
  std::vector<std::size_t> labels;
  auto flush = [&] {
    if (tokens.empty()) return;
    ds.sentences.push_back(std::move(tokens));
    ds.labels.push_back(std::move(labels));
    tokens.clear();
    labels.clear();
  };
  const std::size_t need = std::max(token_column, label_column) + 1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(std::move(f));
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols[0] == "-DOCSTART-") continue;
    if (cols.size() < need)
      throw DataError("CoNLL line " + std::to_string(line_no) + ": expected at least " +
                      std::to_string(need) + " columns, found " + std::to_string(cols.size()));
    tokens.push_back(cols[token_column]);
    labels.push_back(detail::resolve_label(cols[label_column], ds.label_set, fixed, line_no));
  }
  flush();
  if (fixed) ds.label_set = *fixed;
  if (ds.sentences.empty()) throw DataError("CoNLL input contains no sentences");
  return ds;
}

inline TokenDataset parse_conll(const std::string& path, std::size_t token_column,
                                std::size_t label_column, const LabelSet* fixed = nullptr,
                                std::string split = "train") {
  auto in = detail::open_or_throw(path);
  return parse_conll(in, token_column, label_column, fixed, std::move(split));
}

/// One "label<TAB>text" record per line; blank lines are ignored.
inline SequenceDataset parse_tsv(std::istream& in, const LabelSet* fixed = nullptr,
                                 std::string split = "train") {
  SequenceDataset ds;
  ds.split = std::move(split);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("TSV line " + std::to_string(line_no) + ": missing tab separator");
    ds.labels.push_back(detail::resolve_label(line.substr(0, tab), ds.label_set, fixed, line_no));
    ds.texts.push_back(line.substr(tab + 1));
  }
  if (ds.texts.empty()) throw DataError("TSV input contains no records");
  if (fixed) ds.label_set = *fixed;
  return ds;
}

inline SequenceDataset parse_tsv(const std::string& path, const LabelSet* fixed = nullptr,
                                 std::string split = "train") {
  auto in = detail::open_or_throw(path);
  return parse_tsv(in, fixed, std::move(split));
}

/// Two columns "token label", blank line between sentences.
inline void write_conll(std::ostream& os, const TokenDataset& ds) {
  for (std::size_t s = 0; s < ds.sentences.size(); ++s) {
    for (std::size_t i = 0; i < ds.sentences[s].size(); ++i)
      os << ds.sentences[s][i] << ' ' << ds.label_set.name(ds.labels[s][i]) << '\n';
    os << '\n';
  }
}

inline void write_tsv(std::ostream& os, const SequenceDataset& ds) {
  for (std::size_t i = 0; i < ds.texts.size(); ++i)
    os << ds.label_set.name(ds.labels[i]) << '\t' << ds.texts[i] << '\n';
}

/// Existing "<base>.train", "<base>.dev" and "<base>.test" files.
struct SplitPaths {
  std::string train;
  std::optional<std::string> dev;
  std::optional<std::string> test;
};

inline SplitPaths discover_splits(const std::string& base) {
  namespace fs = std::filesystem;
  SplitPaths p;
  if (!fs::exists(base + ".train")) throw DataError("no training split at " + base + ".train");
  p.train = base + ".train";
  if (fs::exists(base + ".dev")) p.dev = base + ".dev";
  if (fs::exists(base + ".test")) p.test = base + ".test";
  return p;
}

enum class SynthKind { separable, noisy };

inline SynthKind parse_synth_kind(std::string_view s) {
  if (s == "separable") return SynthKind::separable;
  if (s == "noisy") return SynthKind::noisy;
  throw InvalidArgument("unknown synthetic task kind '" + std::string(s) + "'");
}

/// Gaussian class clusters with unit variance. Class k is centred at
/// +/- s e_(k/2) so the closest pair of means is s*sqrt(2) apart:
/// 6.36 sigma when separable, 1.06 sigma when noisy. Labels are balanced
/// and shuffled.
inline FeatureDataset synth_task(SynthKind kind, std::size_t n, std::size_t d, std::size_t k,
                                 std::uint64_t seed) {
  detail::require(k >= 2, "synth_task: need at least 2 classes");
  detail::require(d >= 1 && 2 * d >= k, "synth_task: need 2d >= K");
  detail::require(n >= 10 * k, "synth_task: need n >= 10 K");
  const double spread = kind == SynthKind::separable ? 4.5 : 0.75;
  Rng rng(seed);
  FeatureDataset ds;
  ds.num_classes = k;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = i % k;
  rng.shuffle(ds.labels);
  ds.features = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = ds.labels[i];
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
    ds.features(i, label / 2) += (label % 2 == 0 ? spread : -spread);
  }
  return ds;
}

/// Text classification fixture. Every text has `length` tokens: `cues`
/// class-specific cue tokens ("c<k>_<j>", pool of 10 per class) and
/// Zipf-distributed filler tokens ("w<j>", 200 types). In the noisy kind
/// each cue comes from a wrong class's pool with probability 0.3.
inline SequenceDataset synth_token_task(SynthKind kind, std::size_t n, std::size_t k,
                                        std::uint64_t seed, std::size_t length = 8,
                                        std::size_t cues = 2) {
  detail::require(k >= 2, "synth_token_task: need at least 2 classes");
  detail::require(n >= 10 * k, "synth_token_task: need n >= 10 K");
  detail::require(cues >= 1 && cues <= length, "synth_token_task: 1 <= cues <= length");
  constexpr std::size_t kPool = 10;
  constexpr std::size_t kFillers = 200;
  std::vector<double> cdf(kFillers);
  double acc = 0.0;
  for (std::size_t r = 0; r < kFillers; ++r) cdf[r] = (acc += 1.0 / static_cast<double>(r + 1));
  for (double& c : cdf) c /= acc;

  Rng rng(seed);
  SequenceDataset ds;
  ds.split = "train";
  for (std::size_t c = 0; c < k; ++c) ds.label_set.add(std::to_string(c));
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % k;
  rng.shuffle(labels);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> toks;
    for (std::size_t c = 0; c < cues; ++c) {
      std::size_t cls = labels[i];
      if (kind == SynthKind::noisy && rng.uniform() < 0.3)
        cls = (cls + 1 + static_cast<std::size_t>(rng.below(k - 1))) % k;
      toks.push_back("c" + std::to_string(cls) + "_" + std::to_string(rng.below(kPool)));
    }
    while (toks.size() < length) {
      const double u = rng.uniform();
      const auto r = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      toks.push_back("w" + std::to_string(std::min(r, kFillers - 1)));
    }
    rng.shuffle(toks);
    std::string text;
    for (const auto& t : toks) text += (text.empty() ? "" : " ") + t;
    ds.texts.push_back(std::move(text));
    ds.labels.push_back(labels[i]);
  }
  return ds;
}

}  // namespace eigennoise
