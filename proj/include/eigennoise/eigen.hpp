#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eigennoise/embeddings.hpp"
#include "eigennoise/error.hpp"
#include "eigennoise/harmonic.hpp"
#include "eigennoise/jacobi.hpp"
#include "eigennoise/matrix.hpp"
#include "eigennoise/rng.hpp"

namespace eigennoise {

/// Which matrix is decomposed: the co-occurrence model itself, or its
/// entrywise natural log (the target of the bias-free GloVe objective).
enum class EigenMode { linear, log };

/// How eigenpairs are ranked when choosing which d to keep.
enum class Ordering { by_magnitude, by_value };

inline const char* to_string(EigenMode m) { return m == EigenMode::linear ? "linear" : "log"; }
inline const char* to_string(Ordering o) {
  return o == Ordering::by_magnitude ? "by_magnitude" : "by_value";
}

inline EigenMode parse_eigen_mode(std::string_view s) {
  if (s == "linear") return EigenMode::linear;
  if (s == "log") return EigenMode::log;
  throw InvalidArgument("unknown eigen mode '" + std::string(s) + "' (expected linear|log)");
}

inline Ordering parse_ordering(std::string_view s) {
  if (s == "by_magnitude") return Ordering::by_magnitude;
  if (s == "by_value") return Ordering::by_value;
  throw InvalidArgument("unknown ordering '" + std::string(s) +
                        "' (expected by_magnitude|by_value)");
}

/// Rank-d spectral factorization X ~ U V^T with U = Q I_d and V = Q Lambda_d.
/// U has orthonormal columns; V's column k is eigenvalues[k] times U's.
struct EigenFactorization {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> eigenvalues;
  Matrix u;
  Matrix v;
  Ordering ordering = Ordering::by_magnitude;

  Matrix reconstruction() const { return matmul_transposed(u, v); }
};

namespace detail {

inline bool ranks_before(double a, double b, Ordering rule) {
  return rule == Ordering::by_magnitude ? std::abs(a) > std::abs(b) : a > b;
}

inline EigenFactorization assemble(std::size_t n, std::vector<double> values, Matrix u,
                                   Ordering rule) {
  EigenFactorization f;
  f.n = n;
  f.d = values.size();
  f.ordering = rule;
  f.v = u;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < f.d; ++k) f.v(r, k) *= values[k];
  f.u = std::move(u);
  f.eigenvalues = std::move(values);
  return f;
}

/// Product of Householder reflectors H_1 ... H_k whose first k columns are
/// a given orthonormal set. Columns k+1..N then span the orthogonal
/// complement, and any of them can be formed in O(N k).
class ReflectorChain {
 public:
  explicit ReflectorChain(const std::vector<std::vector<double>>& leading) {
    for (std::size_t k = 0; k < leading.size(); ++k) {
      std::vector<double> y = leading[k];
      // Express the k-th vector in the coordinates left by earlier reflectors.
      for (std::size_t j = 0; j < reflectors_.size(); ++j) apply_one(reflectors_[j], y);
      for (std::size_t i = 0; i < k; ++i) y[i] = 0.0;
      const double alpha = y[k] >= 0.0 ? 1.0 : -1.0;
      std::vector<double> w = std::move(y);
      w[k] += alpha;
      reflectors_.push_back(std::move(w));
    }
  }

  std::size_t leading() const noexcept { return reflectors_.size(); }

  /// Applies H_1 ... H_k to x (rightmost reflector first).
  void apply(std::vector<double>& x) const {
    for (std::size_t j = reflectors_.size(); j-- > 0;) apply_one(reflectors_[j], x);
  }

 private:
  static void apply_one(const std::vector<double>& w, std::vector<double>& x) {
    const double ww = eigennoise::dot(w, w);
    if (ww == 0.0) return;
    const double coef = 2.0 * eigennoise::dot(w, x) / ww;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= coef * w[i];
  }

  std::vector<std::vector<double>> reflectors_;
};

/// Modified Gram-Schmidt, applied twice, on the columns of `cols`.
inline void orthonormalize(std::vector<std::vector<double>>& cols) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      for (std::size_t j = 0; j < k; ++j) {
        const double proj = eigennoise::dot(cols[j], cols[k]);
        for (std::size_t i = 0; i < cols[k].size(); ++i) cols[k][i] -= proj * cols[j][i];
      }
      const double nrm = norm2(cols[k]);
      if (nrm < 1e-12) throw NumericalError("orthonormalize: rank-deficient frame");
      for (double& x : cols[k]) x /= nrm;
    }
  }
}

/// Fills columns [leading.size(), d) with an orthonormal basis of the
/// complement of `leading`. Without a seed these are reflector columns;
/// with one, a seeded Gaussian frame in complement coordinates is used.
inline std::vector<std::vector<double>> complete_basis(
    std::size_t n, std::size_t d, const std::vector<std::vector<double>>& leading,
    std::optional<std::uint64_t> rotation_seed) {
  const std::size_t k = leading.size();
  std::vector<std::vector<double>> out;
  if (d <= k) return out;
  ReflectorChain chain(leading);
  const std::size_t extra = d - k;
  if (!rotation_seed) {
    for (std::size_t j = k; j < d; ++j) {
      std::vector<double> x(n, 0.0);
      x[j] = 1.0;
      chain.apply(x);
      out.push_back(std::move(x));
    }
  } else {
    Rng rng(*rotation_seed);
    std::vector<std::vector<double>> frame(extra, std::vector<double>(n - k));
    for (auto& col : frame)
      for (double& x : col) x = rng.normal();
    orthonormalize(frame);
    for (const auto& f : frame) {
      std::vector<double> x(n, 0.0);
      std::copy(f.begin(), f.end(), x.begin() + static_cast<std::ptrdiff_t>(k));
      chain.apply(x);
      out.push_back(std::move(x));
    }
  }
  for (auto& col : out) canonicalize_sign(col);
  return out;
}

}  // namespace detail

struct AnalyticOptions {
  EigenMode mode = EigenMode::linear;
  Ordering ordering = Ordering::by_magnitude;
  /// Seed for a random orthogonal rotation inside the null space; unset
  /// keeps the plain Householder completion.
  std::optional<std::uint64_t> rotation_seed = std::uint64_t{0};
};

/// The analytically nonzero eigenpairs of the model (1 in linear mode, at
/// most 2 in log mode), ordered by the active rule. Each vector is unit
/// length with its largest-magnitude entry positive.
inline std::vector<std::pair<double, std::vector<double>>> analytic_eigenpairs(
    const HarmonicModel& model, EigenMode mode, Ordering rule) {
  if (model.min_entry_mode() == MinEntryMode::floor_at_one)
    throw InvalidArgument(
        "eigennoise_analytic: the floored model has no closed form; decompose it with dense_eigh");
  const std::size_t n = model.size();
  const double c = model.scale();
  std::vector<std::pair<double, std::vector<double>>> pairs;

  if (mode == EigenMode::linear) {
    // X = c g g^T with g_i = 1/i.
    std::vector<double> g(n);
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = 1.0 / static_cast<double>(i + 1);
      g2 += g[i] * g[i];
    }
    const double nrm = std::sqrt(g2);
    for (double& x : g) x /= nrm;
    pairs.emplace_back(c * g2, std::move(g));
    return pairs;
  }

  // log X = log(c) 1 1^T - l 1^T - 1 l^T with l_i = log i. In the orthonormal
  // basis e = 1/sqrt(N), f = (l - mean(l)) / s the matrix reduces to
  // [[N (log c - 2 mean), -s sqrt(N)], [-s sqrt(N), 0]].
  const double nn = static_cast<double>(n);
  std::vector<double> ell(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ell[i] = std::log(static_cast<double>(i + 1));
    mean += ell[i];
  }
  mean /= nn;
  std::vector<double> f(n);
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = ell[i] - mean;
    s2 += f[i] * f[i];
  }
  const double s = std::sqrt(s2);
  const double e_entry = 1.0 / std::sqrt(nn);
  const double p = nn * (std::log(c) - 2.0 * mean);

  if (s == 0.0) {  // N == 1: rank one
    pairs.emplace_back(p, std::vector<double>(n, 1.0));
    return pairs;
  }
  for (double& x : f) x /= s;
  const double q = -s * std::sqrt(nn);
  const double disc = std::hypot(p, 2.0 * q);
  const double big = p >= 0.0 ? 0.5 * (p + disc) : 0.5 * (p - disc);
  const double small = -(q * q) / big;  // product of the eigenvalues is -q^2
  for (double lambda : {big, small}) {
    const double nrm = std::hypot(lambda, q);
    const double ce = lambda / nrm;
    const double cf = q / nrm;
    std::vector<double> vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = ce * e_entry + cf * f[i];
    canonicalize_sign(vec);
    pairs.emplace_back(lambda, std::move(vec));
  }
  if (detail::ranks_before(pairs[1].first, pairs[0].first, rule)) std::swap(pairs[0], pairs[1]);
  return pairs;
}

/// EigenNoise factors built in O(N d) without forming the matrix. The model
/// eigenpairs fill the leading columns; the remaining d - k columns are an
/// orthonormal completion of the zero eigenspace.
inline EigenFactorization eigennoise_analytic(const HarmonicModel& model, std::size_t d,
                                              const AnalyticOptions& opt = {}) {
  const std::size_t n = model.size();
  detail::require(d >= 1, "eigennoise_analytic: d must be >= 1");
  if (d > n)
    throw InvalidArgument("eigennoise_analytic: d = " + std::to_string(d) + " exceeds N = " +
                          std::to_string(n));
  auto pairs = analytic_eigenpairs(model, opt.mode, opt.ordering);

  std::vector<std::vector<double>> leading;
  for (const auto& pr : pairs) leading.push_back(pr.second);
  auto completion = detail::complete_basis(n, d, leading, opt.rotation_seed);

  std::vector<double> values;
  Matrix u(n, d);
  for (std::size_t k = 0; k < d; ++k) {
    const bool model_pair = k < pairs.size();
    const auto& col = model_pair ? pairs[k].second : completion[k - pairs.size()];
    values.push_back(model_pair ? pairs[k].first : 0.0);
    for (std::size_t r = 0; r < n; ++r) u(r, k) = col[r];
  }
  return detail::assemble(n, std::move(values), std::move(u), opt.ordering);
}

/// Keeps d eigenpairs of a full decomposition under `rule`.
inline EigenFactorization truncate(const SymmetricEigen& full, std::size_t d,
                                   Ordering rule = Ordering::by_magnitude) {
  const std::size_t n = full.vectors.rows();
  detail::require(d >= 1 && d <= full.values.size(), "truncate: d must be in 1..N");
  std::vector<std::size_t> order(full.values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::ranks_before(full.values[a], full.values[b], rule);
  });
  std::vector<double> values;
  Matrix u(n, d);
  for (std::size_t k = 0; k < d; ++k) {
    values.push_back(full.values[order[k]]);
    for (std::size_t r = 0; r < n; ++r) u(r, k) = full.vectors(r, order[k]);
  }
  return detail::assemble(n, std::move(values), std::move(u), rule);
}

/// Sum of squared eigenvalues that `truncate(full, d, rule)` discards.
inline double discarded_energy(const SymmetricEigen& full, std::size_t d, Ordering rule) {
  std::vector<double> vals = full.values;
  std::stable_sort(vals.begin(), vals.end(),
                   [&](double a, double b) { return detail::ranks_before(a, b, rule); });
  double s = 0.0;
  for (std::size_t k = d; k < vals.size(); ++k) s += vals[k] * vals[k];
  return s;
}

enum class FactorSide { u, v };

/// Embedding table whose rank-i row is row i of U_d (or V_d).
inline EmbeddingTable to_embedding(const EigenFactorization& f, FactorSide which = FactorSide::u) {
  return EmbeddingTable(which == FactorSide::u ? f.u : f.v, EmbeddingSource::eigennoise);
}

}  // namespace eigennoise
