#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "eigennoise/error.hpp"
#include "eigennoise/harmonic.hpp"
#include "eigennoise/matrix.hpp"
#include "eigennoise/rng.hpp"

// Reference implementations of the GloVe objective and its bias-free,
// unweighted variant, with a small dense trainer. Desk scale only (N <= 256).

namespace eigennoise::glove {

inline constexpr std::size_t kTrainerCap = 256;

/// f(x) = min(1, (x / x_max)^alpha); alpha = 0 gives f == 1.
struct Weighting {
  double x_max = 100.0;
  double alpha = 0.75;

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    return std::min(1.0, std::pow(x / x_max, alpha));
  }
};

struct FullModel {
  Matrix u;  // N x d
  Matrix v;  // N x d
  std::vector<double> a;
  std::vector<double> b;
  Weighting weighting;

  std::size_t size() const noexcept { return u.rows(); }
};

struct BiasFreeModel {
  Matrix u;
  Matrix v;
};

namespace detail {

inline void check_finite(const Matrix& m, const char* what) {
  if (!all_finite(m.data())) throw NumericalError(std::string(what) + ": non-finite parameter");
}

inline void check_shapes(const Matrix& u, const Matrix& v, const Matrix& target) {
  if (u.rows() != target.rows() || v.rows() != target.cols() || u.cols() != v.cols())
    throw InvalidArgument("bias-free objective: shape mismatch between factors and target");
}

}  // namespace detail

/// sum_ij f(X_ij) (u_i . v_j + a_i + b_j - ln X_ij)^2 over cells with X_ij > 0.
inline double loss_eq1(const FullModel& m, const Matrix& x) {
  const std::size_t n = m.size();
  if (x.rows() != n || x.cols() != m.v.rows() || m.a.size() != n || m.b.size() != x.cols())
    throw InvalidArgument("loss_eq1: shape mismatch");
  detail::check_finite(m.u, "loss_eq1");
  detail::check_finite(m.v, "loss_eq1");
  if (!all_finite(m.a) || !all_finite(m.b)) throw NumericalError("loss_eq1: non-finite bias");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double xij = x(i, j);
      if (xij <= 0.0) continue;
      const double r = dot(m.u.row(i), m.v.row(j)) + m.a[i] + m.b[j] - std::log(xij);
      loss += m.weighting(xij) * r * r;
    }
  }
  return loss;
}

inline double loss_eq1(const FullModel& m, const CoocMatrix& c) { return loss_eq1(m, c.values); }

struct FullGradient {
  Matrix u, v;
  std::vector<double> a, b;
};

inline FullGradient grad_eq1(const FullModel& m, const Matrix& x) {
  const std::size_t n = m.size();
  FullGradient g{Matrix(n, m.u.cols()), Matrix(x.cols(), m.v.cols()),
                 std::vector<double>(n, 0.0), std::vector<double>(x.cols(), 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double xij = x(i, j);
      if (xij <= 0.0) continue;
      const double r = dot(m.u.row(i), m.v.row(j)) + m.a[i] + m.b[j] - std::log(xij);
      const double coef = 2.0 * m.weighting(xij) * r;
      for (std::size_t k = 0; k < m.u.cols(); ++k) {
        g.u(i, k) += coef * m.v(j, k);
        g.v(j, k) += coef * m.u(i, k);
      }
      g.a[i] += coef;
      g.b[j] += coef;
    }
  }
  return g;
}

/// sum_ij (u_i . v_j - target_ij)^2.
inline double loss_eq2(const BiasFreeModel& m, const Matrix& target) {
  detail::check_shapes(m.u, m.v, target);
  if (!all_finite(target.data())) throw InvalidArgument("loss_eq2: non-finite target");
  double loss = 0.0;
  for (std::size_t i = 0; i < target.rows(); ++i)
    for (std::size_t j = 0; j < target.cols(); ++j) {
      const double r = dot(m.u.row(i), m.v.row(j)) - target(i, j);
      loss += r * r;
    }
  return loss;
}

struct BiasFreeGradient {
  Matrix u, v;
};

inline BiasFreeGradient grad_eq2(const BiasFreeModel& m, const Matrix& target) {
  detail::check_shapes(m.u, m.v, target);
  BiasFreeGradient g{Matrix(m.u.rows(), m.u.cols()), Matrix(m.v.rows(), m.v.cols())};
  for (std::size_t i = 0; i < target.rows(); ++i) {
    for (std::size_t j = 0; j < target.cols(); ++j) {
      const double coef = 2.0 * (dot(m.u.row(i), m.v.row(j)) - target(i, j));
      for (std::size_t k = 0; k < m.u.cols(); ++k) {
        g.u(i, k) += coef * m.v(j, k);
        g.v(j, k) += coef * m.u(i, k);
      }
    }
  }
  return g;
}

enum class TrainMode { full_batch, stochastic };

struct TrainOptions {
  std::size_t d = 2;
  std::size_t steps = 1000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::full_batch;
  Weighting weighting{};  // eq1 only
};

struct LossTrace {
  /// Loss before step 0, then after every step.
  std::vector<double> losses;

  /// "step<TAB>loss" records.
  void write(std::ostream& os) const {
    const auto old = os.precision(17);
    for (std::size_t s = 0; s < losses.size(); ++s) os << s << '\t' << losses[s] << '\n';
    os.precision(old);
  }
};

template <class Model>
struct TrainResult {
  Model model;
  LossTrace trace;
};

namespace detail {

inline Matrix uniform_init(std::size_t rows, std::size_t d, Rng& rng) {
  Matrix m(rows, d);
  const double half = 0.5 / static_cast<double>(d);
  for (double& x : m.data()) x = rng.uniform(-half, half);
  return m;
}

inline void check_trainable(const Matrix& x, const TrainOptions& opt) {
  eigennoise::detail::require(x.rows() == x.cols(), "train: square matrix required");
  eigennoise::detail::require(x.rows() >= 1 && x.rows() <= kTrainerCap, "train: N must be in 1..256");
  eigennoise::detail::require(opt.d >= 1, "train: d must be >= 1");
  eigennoise::detail::require(opt.learning_rate > 0.0, "train: learning rate must be positive");
}

inline void record(LossTrace& trace, double loss, std::size_t step) {
  if (!std::isfinite(loss))
    throw NumericalError("training diverged: non-finite loss at step " + std::to_string(step));
  trace.losses.push_back(loss);
}

}  // namespace detail

/// Minimizes the bias-free objective against `target`. Full-batch mode takes
/// one gradient step per iteration; stochastic mode updates one uniformly
/// sampled cell per iteration.
inline TrainResult<BiasFreeModel> train_eq2(const Matrix& target, const TrainOptions& opt) {
  detail::check_trainable(target, opt);
  const std::size_t n = target.rows();
  Rng rng(opt.seed);
  BiasFreeModel m{detail::uniform_init(n, opt.d, rng), detail::uniform_init(n, opt.d, rng)};
  TrainResult<BiasFreeModel> out{m, {}};
  detail::record(out.trace, loss_eq2(out.model, target), 0);
  for (std::size_t step = 1; step <= opt.steps; ++step) {
    auto& mod = out.model;
    if (opt.mode == TrainMode::full_batch) {
      const auto g = grad_eq2(mod, target);
      for (std::size_t i = 0; i < mod.u.size(); ++i)
        mod.u.data()[i] -= opt.learning_rate * g.u.data()[i];
      for (std::size_t i = 0; i < mod.v.size(); ++i)
        mod.v.data()[i] -= opt.learning_rate * g.v.data()[i];
    } else {
      const auto i = static_cast<std::size_t>(rng.below(n));
      const auto j = static_cast<std::size_t>(rng.below(n));
      const double coef = 2.0 * (dot(mod.u.row(i), mod.v.row(j)) - target(i, j));
      for (std::size_t k = 0; k < opt.d; ++k) {
        const double ui = mod.u(i, k);
        mod.u(i, k) -= opt.learning_rate * coef * mod.v(j, k);
        mod.v(j, k) -= opt.learning_rate * coef * ui;
      }
    }
    detail::record(out.trace, loss_eq2(mod, target), step);
  }
  return out;
}

/// Minimizes the full weighted objective with row and column biases.
/// Biases start at zero.
inline TrainResult<FullModel> train_eq1(const Matrix& counts, const TrainOptions& opt) {
  detail::check_trainable(counts, opt);
  const std::size_t n = counts.rows();
  Rng rng(opt.seed);
  FullModel m{detail::uniform_init(n, opt.d, rng), detail::uniform_init(n, opt.d, rng),
              std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), opt.weighting};
  TrainResult<FullModel> out{m, {}};
  detail::record(out.trace, loss_eq1(out.model, counts), 0);
  for (std::size_t step = 1; step <= opt.steps; ++step) {
    auto& mod = out.model;
    if (opt.mode == TrainMode::full_batch) {
      const auto g = grad_eq1(mod, counts);
      const double lr = opt.learning_rate;
      for (std::size_t i = 0; i < mod.u.size(); ++i) mod.u.data()[i] -= lr * g.u.data()[i];
      for (std::size_t i = 0; i < mod.v.size(); ++i) mod.v.data()[i] -= lr * g.v.data()[i];
      for (std::size_t i = 0; i < n; ++i) {
        mod.a[i] -= lr * g.a[i];
        mod.b[i] -= lr * g.b[i];
      }
    } else {
      const auto i = static_cast<std::size_t>(rng.below(n));
      const auto j = static_cast<std::size_t>(rng.below(n));
      const double xij = counts(i, j);
      if (xij > 0.0) {
        const double r = dot(mod.u.row(i), mod.v.row(j)) + mod.a[i] + mod.b[j] - std::log(xij);
        const double coef = 2.0 * mod.weighting(xij) * r * opt.learning_rate;
        for (std::size_t k = 0; k < opt.d; ++k) {
          const double ui = mod.u(i, k);
          mod.u(i, k) -= coef * mod.v(j, k);
          mod.v(j, k) -= coef * ui;
        }
        mod.a[i] -= coef;
        mod.b[j] -= coef;
      }
    }
    detail::record(out.trace, loss_eq1(mod, counts), step);
  }
  return out;
}

/// Outer product of marginals divided by their total: an exactly
/// independent count matrix with X_ij = x_i y_j / M.
inline Matrix independent_counts(const std::vector<double>& row_marginals,
                                 const std::vector<double>& col_marginals) {
  double total = 0.0;
  for (double x : row_marginals) total += x;
  Matrix out(row_marginals.size(), col_marginals.size());
  for (std::size_t i = 0; i < row_marginals.size(); ++i)
    for (std::size_t j = 0; j < col_marginals.size(); ++j)
      out(i, j) = row_marginals[i] * col_marginals[j] / total;
  return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  eigennoise::detail::require(x.size() == y.size() && x.size() >= 2, "pearson: need >= 2 paired values");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace eigennoise::glove
