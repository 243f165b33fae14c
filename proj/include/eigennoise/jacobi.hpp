#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "eigennoise/error.hpp"
#include "eigennoise/harmonic.hpp"
#include "eigennoise/matrix.hpp"

namespace eigennoise {

/// All eigenpairs of a symmetric matrix. Column k of `vectors` pairs with
/// `values[k]`; pairs are sorted by descending value.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};

struct JacobiOptions {
  double symmetry_tol = 1e-10;
  /// Stop once the off-diagonal Frobenius norm falls below this fraction of
  /// the input's Frobenius norm.
  double convergence = 1e-12;
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigensolver. Used as a brute-force reference for the
/// analytic construction, so it favours robustness over speed: O(N^3) per
/// sweep, single-threaded. Each eigenvector's largest-magnitude entry is
/// made positive.
inline SymmetricEigen dense_eigh(const Matrix& input, const JacobiOptions& opt = {}) {
  const std::size_t n = input.rows();
  detail::require(n == input.cols(), "dense_eigh: matrix must be square");
  detail::require(n >= 1, "dense_eigh: empty matrix");
  detail::require(n <= kDenseCap, "dense_eigh: N exceeds the dense cap");
  if (!all_finite(input.data())) throw DataError("dense_eigh: non-finite entry");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > opt.symmetry_tol)
        throw DataError("dense_eigh: matrix is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");

  Matrix a = input;
  Matrix v = Matrix::identity(n);
  const double scale = std::sqrt(frobenius_sq(a));

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = false;
  for (int sweep = 0; sweep <= opt.max_sweeps; ++sweep) {
    const double off = off_norm();
    if (off == 0.0 || off <= opt.convergence * scale) {
      converged = true;
      break;
    }
    if (sweep == opt.max_sweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = a(p, k) = c * akp - s * akq;
          a(k, q) = a(q, k) = s * akp + c * akq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged)
    throw NumericalError("dense_eigh: no convergence after " + std::to_string(opt.max_sweeps) +
                         " sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    std::vector<double> col = v.col(order[k]);
    canonicalize_sign(col);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = col[r];
  }
  return out;
}

/// Q diag(values) Q^T.
inline Matrix reconstruct(const SymmetricEigen& e) {
  const std::size_t n = e.vectors.rows();
  Matrix scaled = e.vectors;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < e.values.size(); ++k) scaled(r, k) *= e.values[k];
  return matmul_transposed(scaled, e.vectors);
}

}  // namespace eigennoise
