#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eigennoise/error.hpp"

namespace eigennoise {

/// Rank returned by Vocabulary::rank_of for tokens outside the vocabulary.
inline constexpr std::size_t kOovRank = 0;

/// Default capacity, matching the 20K-rank vocabulary used for the probes.
inline constexpr std::size_t kDefaultVocabCap = 20000;

/// Sum of 1/k for k = 1..n, accumulated in ascending k.
inline double harmonic_number(std::size_t n) {
  detail::require(n >= 1, "harmonic_number: n must be >= 1");
  double h = 0.0;
  for (std::size_t k = 1; k <= n; ++k) h += 1.0 / static_cast<double>(k);
  return h;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Whitespace tokenizer for raw text. Characters in `.,;:!?"'()[]{}<>` are
/// stripped from both ends of every token; tokens left empty are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
  constexpr std::string_view kPunct = ".,;:!?\"'()[]{}<>";
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view tok = text.substr(i, j - i);
    while (!tok.empty() && kPunct.find(tok.front()) != std::string_view::npos) tok.remove_prefix(1);
    while (!tok.empty() && kPunct.find(tok.back()) != std::string_view::npos) tok.remove_suffix(1);
    if (!tok.empty()) out.emplace_back(tok);
    i = j;
  }
  return out;
}

/// Rank-frequency vocabulary. Rank 1 is the most frequent token; equal
/// counts are ordered by first occurrence in the training stream.
/// Immutable once built.
class Vocabulary {
 public:
  struct Entry {
    std::string token;
    std::uint64_t count = 0;
    std::size_t rank = 0;
    bool operator==(const Entry&) const = default;
  };

  static Vocabulary build(const std::vector<std::string>& tokens, bool case_fold,
                          std::size_t max_size = kDefaultVocabCap) {
    if (tokens.empty()) throw InvalidArgument("build_vocab: empty token stream");
    detail::require(max_size >= 1, "build_vocab: max_size must be >= 1");

    struct Tally {
      std::uint64_t count;
      std::size_t first_seen;
    };
    std::unordered_map<std::string, Tally> tally;
    std::vector<std::string> order;
    for (const auto& raw : tokens) {
      std::string tok = case_fold ? to_lower_ascii(raw) : raw;
      auto [it, inserted] = tally.try_emplace(tok, Tally{0, order.size()});
      if (inserted) order.push_back(tok);
      ++it->second.count;
    }
    // `order` is already first-occurrence order, so a stable sort by count
    // gives the tie-break for free.
    std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      return tally.at(a).count > tally.at(b).count;
    });
    if (order.size() > max_size) order.resize(max_size);

    Vocabulary v;
    v.case_folded_ = case_fold;
    v.entries_.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      v.entries_.push_back({order[i], tally.at(order[i]).count, i + 1});
    v.reindex();
    return v;
  }

  /// Rebuilds a vocabulary from explicit entries (e.g. a loaded file).
  /// Entries must already satisfy the rank and count invariants.
  static Vocabulary from_entries(std::vector<Entry> entries, bool case_folded) {
    if (entries.empty()) throw DataError("vocabulary: no entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].rank != i + 1)
        throw DataError("vocabulary: ranks must be 1..N in order (entry " + std::to_string(i + 1) +
                        ")");
      if (entries[i].count == 0) throw DataError("vocabulary: counts must be positive");
      if (i > 0 && entries[i].count > entries[i - 1].count)
        throw DataError("vocabulary: counts must be non-increasing in rank");
    }
    Vocabulary v;
    v.case_folded_ = case_folded;
    v.entries_ = std::move(entries);
    v.reindex();
    if (v.index_.size() != v.entries_.size()) throw DataError("vocabulary: duplicate token");
    return v;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool case_folded() const noexcept { return case_folded_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Entry& at_rank(std::size_t rank) const {
    detail::require(rank >= 1 && rank <= size(), "vocabulary: rank out of range");
    return entries_[rank - 1];
  }

  /// Rank in 1..N, or kOovRank. Applies case folding when the vocabulary
  /// was built with it.
  std::size_t rank_of(std::string_view token) const {
    auto it = case_folded_ ? index_.find(to_lower_ascii(token)) : index_.find(std::string(token));
    return it == index_.end() ? kOovRank : it->second;
  }

  /// "token<TAB>count<TAB>rank" per line, ranks ascending.
  void write(std::ostream& os) const {
    for (const auto& e : entries_) os << e.token << '\t' << e.count << '\t' << e.rank << '\n';
  }

  static Vocabulary read(std::istream& is, bool case_folded) {
    std::vector<Entry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw DataError("vocabulary line " + std::to_string(line_no) + ": expected 3 tab fields");
      Entry e;
      e.token = line.substr(0, t1);
      try {
        std::size_t used = 0;
        const std::string count_s = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string rank_s = line.substr(t2 + 1);
        e.count = std::stoull(count_s, &used);
        if (used != count_s.size()) throw std::invalid_argument("count");
        e.rank = std::stoull(rank_s, &used);
        if (used != rank_s.size()) throw std::invalid_argument("rank");
      } catch (const std::logic_error&) {
        throw DataError("vocabulary line " + std::to_string(line_no) + ": bad integer field");
      }
      entries.push_back(std::move(e));
    }
    return from_entries(std::move(entries), case_folded);
  }

  static Vocabulary load(const std::string& path, bool case_folded) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary file: " + path);
    return read(in, case_folded);
  }

  bool operator==(const Vocabulary& o) const {
    return case_folded_ == o.case_folded_ && entries_ == o.entries_;
  }

 private:
  void reindex() {
    index_.clear();
    index_.reserve(entries_.size());
    for (const auto& e : entries_) index_.emplace(e.token, e.rank);
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  bool case_folded_ = false;
};

/// Zipf unigram model over a vocabulary: xhat(r) = N / r.
class UnigramModel {
 public:
  explicit UnigramModel(std::size_t vocab_size) : n_(vocab_size) {
    detail::require(n_ >= 1, "UnigramModel: vocabulary size must be >= 1");
  }
  explicit UnigramModel(const Vocabulary& vocab) : UnigramModel(vocab.size()) {}

  std::size_t size() const noexcept { return n_; }

  double xhat(std::size_t rank) const {
    detail::require(rank >= 1 && rank <= n_, "UnigramModel: rank out of range");
    return static_cast<double>(n_) / static_cast<double>(rank);
  }

  /// Equals N * H_N.
  double total() const {
    double s = 0.0;
    for (std::size_t r = 1; r <= n_; ++r) s += xhat(r);
    return s;
  }

 private:
  std::size_t n_;
};

}  // namespace eigennoise
