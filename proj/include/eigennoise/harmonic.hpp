#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "eigennoise/error.hpp"
#include "eigennoise/matrix.hpp"
#include "eigennoise/vocab.hpp"

namespace eigennoise {

/// Largest N that materialize() will store densely.
inline constexpr std::size_t kDenseCap = 4096;

/// Default window half-width used to construct the co-occurrence model.
inline constexpr std::size_t kDefaultModelWindow = 5;

/// Optional post-transformation enforcing a unit minimum entry.
enum class MinEntryMode {
  verbatim,      // 2mN / (i j H_N), minimum entry 2m / (N H_N)
  rescale,       // global rescale so the (N, N) entry is exactly 1
  floor_at_one,  // entrywise max(1, x); experimental, breaks the rank-1 structure
};

/// Dense co-occurrence matrix with cached marginals.
struct CoocMatrix {
  Matrix values;
  std::vector<double> row_marginals;
  std::vector<double> col_marginals;
  double total = 0.0;

  std::size_t size() const noexcept { return values.rows(); }

  static CoocMatrix from_values(Matrix values) {
    detail::require(values.rows() == values.cols(), "CoocMatrix: matrix must be square");
    CoocMatrix c;
    const std::size_t n = values.rows();
    c.row_marginals.assign(n, 0.0);
    c.col_marginals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double x = values(i, j);
        if (x < 0.0) throw DataError("CoocMatrix: negative entry");
        c.row_marginals[i] += x;
        c.col_marginals[j] += x;
      }
    }
    for (double x : c.row_marginals) c.total += x;
    c.values = std::move(values);
    return c;
  }
};

/// Closed-form independent co-occurrence model over Zipf-ranked words:
/// every word of rank i draws 2m * (N / i) window partners from the Zipf
/// unigram distribution, giving X(i, j) = 2mN / (i j H_N).
class HarmonicModel {
 public:
  HarmonicModel(std::size_t n, std::size_t window = kDefaultModelWindow,
                MinEntryMode mode = MinEntryMode::verbatim)
      : n_(n), m_(window), mode_(mode) {
    detail::require(n >= 1, "HarmonicModel: N must be >= 1");
    detail::require(window >= 1, "HarmonicModel: window half-width m must be >= 1");
    h_n_ = harmonic_number(n);
    scale_ = 2.0 * static_cast<double>(m_) * static_cast<double>(n_) / h_n_;
    if (mode_ == MinEntryMode::rescale)
      scale_ = static_cast<double>(n_) * static_cast<double>(n_);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t window() const noexcept { return m_; }
  double harmonic() const noexcept { return h_n_; }
  MinEntryMode min_entry_mode() const noexcept { return mode_; }

  /// Numerator c in X(i, j) = c / (i j); 2mN/H_N unless rescaled.
  double scale() const noexcept { return scale_; }

  double entry(std::size_t i, std::size_t j) const {
    check(i, j);
    const double x = scale_ / (static_cast<double>(i) * static_cast<double>(j));
    return mode_ == MinEntryMode::floor_at_one ? std::max(1.0, x) : x;
  }

  /// Natural log of entry(i, j), computed as log c - log i - log j.
  double log_entry(std::size_t i, std::size_t j) const {
    check(i, j);
    if (mode_ == MinEntryMode::floor_at_one) return std::log(entry(i, j));
    return std::log(scale_) - std::log(static_cast<double>(i)) - std::log(static_cast<double>(j));
  }

  /// Row marginal of rank i for the verbatim model: 2mN / i.
  double analytic_row_marginal(std::size_t i) const {
    check(i, 1);
    return scale_ * h_n_ / static_cast<double>(i);
  }

  CoocMatrix materialize() const {
    if (n_ > kDenseCap)
      throw InvalidArgument("materialize: N = " + std::to_string(n_) + " exceeds the dense cap of " +
                            std::to_string(kDenseCap) +
                            "; use the analytic eigen construction instead");
    Matrix values(n_, n_);
    for (std::size_t i = 1; i <= n_; ++i)
      for (std::size_t j = 1; j <= n_; ++j) values(i - 1, j - 1) = entry(i, j);
    return CoocMatrix::from_values(std::move(values));
  }

  /// Dense matrix of log_entry over all rank pairs.
  Matrix log_matrix() const {
    if (n_ > kDenseCap) throw InvalidArgument("log_matrix: N exceeds the dense cap");
    Matrix values(n_, n_);
    for (std::size_t i = 1; i <= n_; ++i)
      for (std::size_t j = 1; j <= n_; ++j) values(i - 1, j - 1) = log_entry(i, j);
    return values;
  }

 private:
  void check(std::size_t i, std::size_t j) const {
    if (i < 1 || i > n_ || j < 1 || j > n_)
      throw InvalidArgument("HarmonicModel: rank out of range 1.." + std::to_string(n_));
  }

  std::size_t n_;
  std::size_t m_;
  MinEntryMode mode_;
  double h_n_ = 1.0;
  double scale_ = 1.0;
};

inline double xhat_entry(const HarmonicModel& model, std::size_t i, std::size_t j) {
  return model.entry(i, j);
}

inline double log_xhat_entry(const HarmonicModel& model, std::size_t i, std::size_t j) {
  return model.log_entry(i, j);
}

/// log(X_ij * M / (x_i * y_j * k)); indices are 0-based matrix positions.
inline double pmi_shifted(const CoocMatrix& c, std::size_t i, std::size_t j, double k = 1.0) {
  detail::require(i < c.size() && j < c.size(), "pmi_shifted: index out of range");
  detail::require(k > 0.0, "pmi_shifted: shift k must be positive");
  const double x = c.values(i, j);
  if (!(x > 0.0)) throw DataError("pmi_shifted: zero co-occurrence cell");
  return std::log(x) + std::log(c.total) - std::log(c.row_marginals[i]) -
         std::log(c.col_marginals[j]) - std::log(k);
}

/// Plain-text grid: one row per line, space-separated values.
inline void dump_grid(std::ostream& os, const Matrix& m) {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << m(r, c);
    }
    os << '\n';
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

}  // namespace eigennoise
