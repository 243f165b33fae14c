#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eigennoise/datasets.hpp"
#include "eigennoise/embeddings.hpp"
#include "eigennoise/error.hpp"
#include "eigennoise/matrix.hpp"
#include "eigennoise/rng.hpp"
#include "eigennoise/vocab.hpp"

namespace eigennoise {

// ---------------------------------------------------------------------------
// Featurization

/// How an example's input vector is formed.
enum class Pooling {
  features,  // use ProbeExample::features directly
  concat,    // flatten the embeddings of a token window
  mean,      // average the embeddings of a sequence
};

struct ProbeExample {
  std::vector<std::size_t> ranks;  // ranks, kOovRank or kPadRank
  std::vector<double> features;
  std::size_t label = 0;
};

/// Ranks at positions pos-m .. pos+m, with kPadRank outside the sentence.
inline std::vector<std::size_t> window_ranks(std::span<const std::size_t> sentence,
                                             std::size_t pos, std::size_t m) {
  if (pos >= sentence.size())
    throw InvalidArgument("featurize_token: position " + std::to_string(pos) +
                          " outside a sentence of length " + std::to_string(sentence.size()));
  std::vector<std::size_t> out;
  out.reserve(2 * m + 1);
  const auto p = static_cast<std::ptrdiff_t>(pos);
  const auto w = static_cast<std::ptrdiff_t>(m);
  for (std::ptrdiff_t i = p - w; i <= p + w; ++i)
    out.push_back(i < 0 || i >= static_cast<std::ptrdiff_t>(sentence.size())
                      ? kPadRank
                      : sentence[static_cast<std::size_t>(i)]);
  return out;
}

inline void concat_into(const EmbeddingTable& table, std::span<const std::size_t> ranks,
                        std::span<double> out) {
  const std::size_t d = table.dim();
  for (std::size_t s = 0; s < ranks.size(); ++s) {
    auto v = table.vector(ranks[s]);
    std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(s * d));
  }
}

inline void mean_into(const EmbeddingTable& table, std::span<const std::size_t> ranks,
                      std::span<double> out) {
  if (ranks.empty()) throw InvalidArgument("featurize_sequence: empty sequence");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r : ranks) {
    auto v = table.vector(r);
    for (std::size_t k = 0; k < v.size(); ++k) out[k] += v[k];
  }
  const double inv = 1.0 / static_cast<double>(ranks.size());
  for (double& x : out) x *= inv;
}

/// Flattened (2m+1) d window around `pos`; out-of-sentence slots use PAD.
inline std::vector<double> featurize_token(const EmbeddingTable& table,
                                           std::span<const std::size_t> sentence,
                                           std::size_t pos, std::size_t m) {
  const auto ranks = window_ranks(sentence, pos, m);
  std::vector<double> out(ranks.size() * table.dim());
  concat_into(table, ranks, out);
  return out;
}

/// Mean of the token embeddings (OOV rows included).
inline std::vector<double> featurize_sequence(const EmbeddingTable& table,
                                              std::span<const std::size_t> ranks) {
  std::vector<double> out(table.dim());
  mean_into(table, ranks, out);
  return out;
}

/// One example per (sentence, position); windows never cross sentences.
inline std::vector<ProbeExample> make_token_examples(const TokenDataset& ds,
                                                     const Vocabulary& vocab, std::size_t m) {
  std::vector<ProbeExample> out;
  out.reserve(ds.num_tokens());
  for (std::size_t s = 0; s < ds.sentences.size(); ++s) {
    std::vector<std::size_t> ranks;
    for (const auto& t : ds.sentences[s]) ranks.push_back(vocab.rank_of(t));
    for (std::size_t i = 0; i < ranks.size(); ++i)
      out.push_back({window_ranks(ranks, i, m), {}, ds.labels[s][i]});
  }
  return out;
}

/// Tokenizes each text; a text with no tokens becomes a single OOV token.
inline std::vector<ProbeExample> make_sequence_examples(const SequenceDataset& ds,
                                                        const Vocabulary& vocab) {
  std::vector<ProbeExample> out;
  out.reserve(ds.texts.size());
  for (std::size_t i = 0; i < ds.texts.size(); ++i) {
    ProbeExample ex;
    for (const auto& t : tokenize(ds.texts[i])) ex.ranks.push_back(vocab.rank_of(t));
    if (ex.ranks.empty()) ex.ranks.push_back(kOovRank);
    ex.label = ds.labels[i];
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<ProbeExample> make_feature_examples(const FeatureDataset& ds) {
  std::vector<ProbeExample> out;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    auto row = ds.features.row(i);
    out.push_back({{}, std::vector<double>(row.begin(), row.end()), ds.labels[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

inline constexpr std::size_t kDefaultHidden = 512;

/// softmax(W2 relu(W1 h)), no biases, no dropout. Owns its embedding table
/// so unfrozen training can update it.
struct ProbeModel {
  Matrix w1;  // hidden x input
  Matrix w2;  // classes x hidden
  std::optional<EmbeddingTable> table;
  Pooling pooling = Pooling::features;

  std::size_t input_dim() const noexcept { return w1.cols(); }
  std::size_t hidden() const noexcept { return w1.rows(); }
  std::size_t num_classes() const noexcept { return w2.rows(); }

  /// Weights uniform in +/- 1/sqrt(fan_in), drawn from Rng(seed).
  static ProbeModel init(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                         std::uint64_t seed, std::optional<EmbeddingTable> table = std::nullopt,
                         Pooling pooling = Pooling::features) {
    detail::require(input_dim >= 1 && hidden >= 1 && classes >= 2,
                    "ProbeModel: need input >= 1, hidden >= 1, classes >= 2");
    detail::require(pooling == Pooling::features || table.has_value(),
                    "ProbeModel: token pooling requires an embedding table");
    ProbeModel m{Matrix(hidden, input_dim), Matrix(classes, hidden), std::move(table), pooling};
    Rng rng(seed);
    const double b1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (double& x : m.w1.data()) x = rng.uniform(-b1, b1);
    for (double& x : m.w2.data()) x = rng.uniform(-b2, b2);
    return m;
  }

  /// Input vector for an example under this model's pooling.
  void input_into(const ProbeExample& ex, std::span<double> out) const {
    switch (pooling) {
      case Pooling::features:
        if (ex.features.size() != out.size())
          throw InvalidArgument("probe: feature length does not match W1");
        std::copy(ex.features.begin(), ex.features.end(), out.begin());
        return;
      case Pooling::concat:
        if (ex.ranks.size() * table->dim() != out.size())
          throw InvalidArgument("probe: window length does not match W1");
        concat_into(*table, ex.ranks, out);
        return;
      case Pooling::mean:
        if (table->dim() != out.size()) throw InvalidArgument("probe: table dim does not match W1");
        mean_into(*table, ex.ranks, out);
        return;
    }
  }

  std::vector<double> input(const ProbeExample& ex) const {
    std::vector<double> h(input_dim());
    input_into(ex, h);
    return h;
  }
};

namespace detail {

/// Forward pass keeping intermediates for backprop.
struct Activations {
  std::vector<double> h, z1, a1, probs;
};

inline void softmax_inplace(std::span<double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) sum += (z = std::exp(z - top));
  for (double& z : logits) z /= sum;
}

inline void forward_into(const ProbeModel& m, Activations& act) {
  if (!all_finite(act.h)) throw NumericalError("probe forward: non-finite input");
  const std::size_t hid = m.hidden();
  act.z1.assign(hid, 0.0);
  act.a1.assign(hid, 0.0);
  for (std::size_t j = 0; j < hid; ++j) {
    const double z = dot(m.w1.row(j), act.h);
    act.z1[j] = z;
    act.a1[j] = z > 0.0 ? z : 0.0;
  }
  act.probs.assign(m.num_classes(), 0.0);
  for (std::size_t c = 0; c < m.num_classes(); ++c) act.probs[c] = dot(m.w2.row(c), act.a1);
  softmax_inplace(act.probs);
}

}  // namespace detail

inline std::vector<double> forward(const ProbeModel& m, std::span<const double> h) {
  if (h.size() != m.input_dim()) throw InvalidArgument("probe forward: input length mismatch");
  detail::Activations act;
  act.h.assign(h.begin(), h.end());
  detail::forward_into(m, act);
  return act.probs;
}

inline std::vector<double> predict(const ProbeModel& m, const ProbeExample& ex) {
  detail::Activations act;
  act.h = m.input(ex);
  detail::forward_into(m, act);
  return act.probs;
}

struct ProbeGradients {
  Matrix w1;
  Matrix w2;
  Matrix table;  // same shape as the table storage; empty when frozen
  double loss = 0.0;  // mean cross-entropy (nats) over the batch
};

/// Gradients of the mean cross-entropy over `batch`. Table gradients are
/// produced only for a trainable table, and never for the PAD row.
inline ProbeGradients backward(const ProbeModel& m, std::span<const ProbeExample> batch) {
  detail::require(!batch.empty(), "probe backward: empty batch");
  const std::size_t in = m.input_dim(), hid = m.hidden(), k = m.num_classes();
  const bool table_grad = m.table && m.table->trainable() && m.pooling != Pooling::features;
  ProbeGradients g{Matrix(hid, in), Matrix(k, hid), Matrix(), 0.0};
  if (table_grad) g.table = Matrix(m.table->storage().rows(), m.table->dim());

  const double scale = 1.0 / static_cast<double>(batch.size());
  detail::Activations act;
  act.h.resize(in);
  std::vector<double> delta2(k), delta1(hid), dh(in);
  for (const auto& ex : batch) {
    if (ex.label >= k) throw InvalidArgument("probe backward: label out of range");
    m.input_into(ex, act.h);
    detail::forward_into(m, act);
    g.loss -= std::log(std::max(act.probs[ex.label], std::numeric_limits<double>::min())) * scale;

    for (std::size_t c = 0; c < k; ++c)
      delta2[c] = (act.probs[c] - (c == ex.label ? 1.0 : 0.0)) * scale;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = g.w2.row(c);
      for (std::size_t j = 0; j < hid; ++j) row[j] += delta2[c] * act.a1[j];
    }
    for (std::size_t j = 0; j < hid; ++j) {
      double s = 0.0;
      if (act.z1[j] > 0.0)
        for (std::size_t c = 0; c < k; ++c) s += m.w2(c, j) * delta2[c];
      delta1[j] = s;
    }
    for (std::size_t j = 0; j < hid; ++j) {
      if (delta1[j] == 0.0) continue;
      auto row = g.w1.row(j);
      for (std::size_t i = 0; i < in; ++i) row[i] += delta1[j] * act.h[i];
    }
    if (!table_grad) continue;

    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t j = 0; j < hid; ++j) {
      if (delta1[j] == 0.0) continue;
      auto row = m.w1.row(j);
      for (std::size_t i = 0; i < in; ++i) dh[i] += delta1[j] * row[i];
    }
    const auto& table = *m.table;
    const std::size_t d = table.dim();
    if (m.pooling == Pooling::concat) {
      for (std::size_t s = 0; s < ex.ranks.size(); ++s) {
        const std::size_t r = table.row_index(ex.ranks[s]);
        if (r == table.pad_row()) continue;
        auto row = g.table.row(r);
        for (std::size_t c = 0; c < d; ++c) row[c] += dh[s * d + c];
      }
    } else {
      const double inv = 1.0 / static_cast<double>(ex.ranks.size());
      for (std::size_t rank : ex.ranks) {
        const std::size_t r = table.row_index(rank);
        if (r == table.pad_row()) continue;
        auto row = g.table.row(r);
        for (std::size_t c = 0; c < d; ++c) row[c] += dh[c] * inv;
      }
    }
  }
  if (!std::isfinite(g.loss)) throw NumericalError("probe backward: non-finite loss");
  return g;
}

/// Mean cross-entropy in nats.
inline double mean_loss(const ProbeModel& m, std::span<const ProbeExample> data) {
  if (data.empty()) return 0.0;
  detail::Activations act;
  act.h.resize(m.input_dim());
  double loss = 0.0;
  for (const auto& ex : data) {
    m.input_into(ex, act.h);
    detail::forward_into(m, act);
    loss -= std::log(std::max(act.probs[ex.label], std::numeric_limits<double>::min()));
  }
  return loss / static_cast<double>(data.size());
}

inline double accuracy(const ProbeModel& m, std::span<const ProbeExample> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : data) {
    const auto p = predict(m, ex);
    hits += static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == ex.label;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Optimization

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment estimates for one parameter block.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

/// Bias-corrected Adam update, in place.
inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
                      double lr, const AdamConfig& cfg = {}) {
  detail::require(params.size() == grads.size(), "adam_step: shape mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  detail::require(state.m.size() == params.size(), "adam_step: state shape mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    params[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + cfg.eps);
  }
}

/// Whether "no new minimum" events are counted in total or only in a row.
enum class AnnealCounter { cumulative, consecutive };

struct TrainConfig {
  double lr = 0.001;
  double anneal_factor = 0.5;
  std::size_t patience = 4;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 50;
  AnnealCounter counter = AnnealCounter::cumulative;
  AdamConfig adam{};
};

/// Development-loss plateau schedule: every epoch without a strictly new
/// minimum multiplies the learning rate by the anneal factor and counts
/// one event; training stops once `patience` events have occurred.
class PlateauSchedule {
 public:
  explicit PlateauSchedule(const TrainConfig& cfg) : cfg_(cfg), lr_(cfg.lr) {
    detail::require(cfg.lr > 0.0, "TrainConfig: lr must be positive");
    detail::require(cfg.patience >= 1, "TrainConfig: patience must be >= 1");
  }

  /// Records an epoch's dev loss; returns true when training should stop.
  bool observe(double dev_loss) {
    if (dev_loss < best_) {
      best_ = dev_loss;
      if (cfg_.counter == AnnealCounter::consecutive) events_ = 0;
      return false;
    }
    lr_ *= cfg_.anneal_factor;
    ++events_;
    return events_ >= cfg_.patience;
  }

  double lr() const noexcept { return lr_; }
  double best() const noexcept { return best_; }
  std::size_t events() const noexcept { return events_; }

 private:
  TrainConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t events_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double lr = 0.0;  // rate used during the epoch

  bool operator==(const EpochRecord&) const = default;
};

struct TrainedProbe {
  ProbeModel model;
  std::vector<EpochRecord> trace;
  double final_lr = 0.0;
};

/// "epoch<TAB>train_loss<TAB>dev_loss<TAB>lr" records.
inline void write_epoch_trace(std::ostream& os, const std::vector<EpochRecord>& trace) {
  const auto old = os.precision(17);
  for (const auto& r : trace)
    os << r.epoch << '\t' << r.train_loss << '\t' << r.dev_loss << '\t' << r.lr << '\n';
  os.precision(old);
}

/// Mini-batch Adam with per-epoch shuffling and the plateau schedule.
/// Returns the model after the last epoch run.
inline TrainedProbe train_probe(ProbeModel model, std::span<const ProbeExample> train,
                                std::span<const ProbeExample> dev, const TrainConfig& cfg) {
  if (train.empty() || dev.empty()) throw InvalidArgument("train_probe: empty train or dev set");
  detail::require(cfg.batch_size >= 1 && cfg.max_epochs >= 1,
                  "train_probe: batch_size and max_epochs must be >= 1");
  PlateauSchedule schedule(cfg);
  const bool table_trainable =
      model.table && model.table->trainable() && model.pooling != Pooling::features;
  AdamState s_w1, s_w2, s_table;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ProbeExample> batch;
  TrainedProbe out{std::move(model), {}, cfg.lr};
  auto& m = out.model;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, epoch));
    rng.shuffle(order);
    const double lr = schedule.lr();
    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train[order[i]]);
      const auto g = backward(m, batch);
      train_loss += g.loss * static_cast<double>(end - start);
      adam_step(s_w1, m.w1.data(), g.w1.data(), lr, cfg.adam);
      adam_step(s_w2, m.w2.data(), g.w2.data(), lr, cfg.adam);
      if (table_trainable) adam_step(s_table, m.table->storage().data(), g.table.data(), lr, cfg.adam);
    }
    train_loss /= static_cast<double>(train.size());
    const double dev_loss = mean_loss(m, dev);
    if (!std::isfinite(train_loss) || !std::isfinite(dev_loss))
      throw NumericalError("train_probe: non-finite loss at epoch " + std::to_string(epoch));
    out.trace.push_back({epoch, train_loss, dev_loss, lr});
    const bool stop = schedule.observe(dev_loss);
    out.final_lr = schedule.lr();
    if (stop) break;
  }
  return out;
}

}  // namespace eigennoise
