#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
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
#include "eigennoise/vocab.hpp"

namespace eigennoise {

/// Lookup key for out-of-sentence window positions.
inline constexpr std::size_t kPadRank = std::numeric_limits<std::size_t>::max();

enum class EmbeddingSource { eigennoise, random, imported };

inline const char* to_string(EmbeddingSource s) {
  switch (s) {
    case EmbeddingSource::eigennoise: return "eigennoise";
    case EmbeddingSource::random: return "random";
    case EmbeddingSource::imported: return "imported";
  }
  return "?";
}

/// Word vectors indexed by rank. Storage has N + 2 rows: ranks 1..N, then
/// the OOV row, then the PAD row. OOV and PAD start at zero; PAD stays zero.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// `vectors` holds exactly N rows (rank order); OOV/PAD rows are appended.
  EmbeddingTable(const Matrix& vectors, EmbeddingSource source, bool trainable = false)
      : rows_(vectors.rows() + 2, vectors.cols()), source_(source), trainable_(trainable) {
    detail::require(vectors.rows() >= 1 && vectors.cols() >= 1, "EmbeddingTable: empty vectors");
    for (std::size_t r = 0; r < vectors.rows(); ++r)
      for (std::size_t c = 0; c < vectors.cols(); ++c) rows_(r, c) = vectors(r, c);
  }

  std::size_t vocab_size() const noexcept { return rows_.rows() - 2; }
  std::size_t dim() const noexcept { return rows_.cols(); }
  EmbeddingSource source() const noexcept { return source_; }
  bool trainable() const noexcept { return trainable_; }
  void set_trainable(bool t) noexcept { trainable_ = t; }

  std::size_t oov_row() const noexcept { return vocab_size(); }
  std::size_t pad_row() const noexcept { return vocab_size() + 1; }

  /// Storage row for a rank (1..N), kOovRank or kPadRank.
  std::size_t row_index(std::size_t rank) const {
    if (rank == kPadRank) return pad_row();
    if (rank == kOovRank) return oov_row();
    if (rank > vocab_size())
      throw InvalidArgument("embedding lookup: rank " + std::to_string(rank) + " exceeds N = " +
                            std::to_string(vocab_size()));
    return rank - 1;
  }

  std::span<const double> vector(std::size_t rank) const { return rows_.row(row_index(rank)); }

  const Matrix& storage() const noexcept { return rows_; }
  Matrix& storage() noexcept { return rows_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  Matrix rows_;
  EmbeddingSource source_ = EmbeddingSource::random;
  bool trainable_ = false;
};

/// Row-stacks the vectors for a sequence of ranks (len x d).
inline Matrix embed_lookup(const EmbeddingTable& table, std::span<const std::size_t> ranks) {
  Matrix out(ranks.size(), table.dim());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    auto src = table.vector(ranks[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Standard-normal baseline table drawn from Rng(seed) in row-major order.
inline EmbeddingTable random_table(std::size_t n, std::size_t d, std::uint64_t seed) {
  detail::require(n >= 1 && d >= 1, "random_table: N and d must be >= 1");
  Matrix vectors(n, d);
  Rng rng(seed);
  for (double& x : vectors.data()) x = rng.normal();
  return EmbeddingTable(vectors, EmbeddingSource::random);
}

struct AlignmentReport {
  std::size_t matched = 0;
  std::size_t unmatched = 0;
  std::size_t file_rows = 0;
  std::size_t dim = 0;

  double oov_rate() const noexcept {
    const auto total = matched + unmatched;
    return total == 0 ? 0.0 : static_cast<double>(unmatched) / static_cast<double>(total);
  }

  /// "key=value" lines.
  std::string to_text() const {
    std::ostringstream os;
    os << "matched=" << matched << '\n'
       << "unmatched=" << unmatched << '\n'
       << "oov_rate=" << std::setprecision(6) << oov_rate() << '\n'
       << "file_rows=" << file_rows << '\n'
       << "dim=" << dim << '\n';
    return os.str();
  }
};

struct ImportResult {
  EmbeddingTable table;
  AlignmentReport report;
};

/// Reads GloVe text ("token v1 ... vd" per line) and aligns it to `vocab`
/// by exact token match. Vocabulary tokens missing from the file get the
/// (zero) OOV vector. The first occurrence of a repeated file token wins.
inline ImportResult import_text(std::istream& in, const Vocabulary& vocab,
                                std::optional<std::size_t> expected_dim = std::nullopt) {
  std::unordered_map<std::string, std::vector<double>> found;
  std::optional<std::size_t> dim = expected_dim;
  std::string line;
  std::size_t line_no = 0;
  std::size_t file_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> values;
    std::string field;
    std::size_t column = 1;
    while (fields >> field) {
      ++column;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        throw DataError("embedding file line " + std::to_string(line_no) + ", column " +
                        std::to_string(column) + ": cannot parse number '" + field + "'");
      values.push_back(v);
    }
    if (values.empty())
      throw DataError("embedding file line " + std::to_string(line_no) + ": no vector values");
    if (!dim) dim = values.size();
    if (values.size() != *dim)
      throw DataError("embedding file line " + std::to_string(line_no) + ": expected " +
                      std::to_string(*dim) + " values, found " + std::to_string(values.size()));
    ++file_rows;
    found.try_emplace(std::move(token), std::move(values));
  }
  if (!dim || file_rows == 0) throw DataError("embedding file is empty");

  Matrix vectors(vocab.size(), *dim);
  AlignmentReport report;
  report.file_rows = file_rows;
  report.dim = *dim;
  for (const auto& e : vocab.entries()) {
    auto it = found.find(e.token);
    if (it == found.end()) {
      ++report.unmatched;  // row stays zero, i.e. equal to the OOV row
      continue;
    }
    ++report.matched;
    std::copy(it->second.begin(), it->second.end(), vectors.row(e.rank - 1).begin());
  }
  return {EmbeddingTable(vectors, EmbeddingSource::imported), report};
}

inline ImportResult import_text(const std::string& path, const Vocabulary& vocab,
                                std::optional<std::size_t> expected_dim = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  return import_text(in, vocab, expected_dim);
}

inline constexpr std::string_view kOovToken = "<unk>";
inline constexpr std::string_view kPadToken = "<pad>";

/// Token names for a vocabulary-less table of size n: "rank_1" ... "rank_n".
inline std::vector<std::string> rank_names(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t r = 1; r <= n; ++r) names.push_back("rank_" + std::to_string(r));
  return names;
}

inline std::vector<std::string> vocab_names(const Vocabulary& vocab) {
  std::vector<std::string> names;
  names.reserve(vocab.size());
  for (const auto& e : vocab.entries()) names.push_back(e.token);
  return names;
}

/// GloVe-compatible text, one line per row including the trailing
/// "<unk>" and "<pad>" rows. `precision` is in significant digits.
inline void export_text(std::ostream& os, const EmbeddingTable& table,
                        const std::vector<std::string>& names, int precision = 9) {
  detail::require(names.size() == table.vocab_size(), "export_text: one name per rank required");
  detail::require(precision >= 6, "export_text: at least 6 significant digits");
  const auto old_prec = os.precision(precision);
  auto emit = [&](std::string_view name, std::span<const double> v) {
    os << name;
    for (double x : v) os << ' ' << x;
    os << '\n';
  };
  for (std::size_t r = 0; r < table.vocab_size(); ++r) emit(names[r], table.storage().row(r));
  emit(kOovToken, table.storage().row(table.oov_row()));
  emit(kPadToken, table.storage().row(table.pad_row()));
  os.precision(old_prec);
}

}  // namespace eigennoise
