#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "eigennoise/error.hpp"
#include "eigennoise/probe.hpp"
#include "eigennoise/rng.hpp"

namespace eigennoise {

/// Percentages of the data at which transmission blocks end.
inline const std::vector<double> kDefaultFractions{0.1, 0.2, 0.4, 0.8,  1.6, 3.2,
                                                   6.25, 12.5, 25.0, 50.0, 100.0};

struct BlockSchedule {
  std::vector<double> fractions;
  std::vector<std::size_t> boundaries;  // t_1 < ... < t_S = n
  std::size_t n = 0;
};

/// Boundary ceil(p n / 100) per fraction, deduplicated, last forced to n.
inline BlockSchedule make_schedule(std::size_t n,
                                   const std::vector<double>& fractions = kDefaultFractions) {
  detail::require(n >= 1, "make_schedule: n must be >= 1");
  detail::require(!fractions.empty(), "make_schedule: no fractions");
  BlockSchedule s{fractions, {}, n};
  for (double p : fractions) {
    detail::require(p > 0.0 && p <= 100.0, "make_schedule: fractions must lie in (0, 100]");
    // 6.25% of 1000 must be 63, not 62.5000001 rounded up to 64.
    const double exact = p * static_cast<double>(n) / 100.0;
    auto b = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    b = std::clamp<std::size_t>(b, 1, n);
    if (s.boundaries.empty() || b > s.boundaries.back()) s.boundaries.push_back(b);
  }
  if (s.boundaries.back() != n) s.boundaries.push_back(n);
  if (s.boundaries.size() < 2)
    throw InvalidArgument("make_schedule: n = " + std::to_string(n) +
                          " yields fewer than 2 distinct block boundaries");
  return s;
}

/// Class probabilities for one example.
using Predictor = std::function<std::vector<double>(const ProbeExample&)>;

/// Fits a model on the transmitted prefix. `stage` counts from 1.
using StageTrainer = std::function<Predictor(std::span<const ProbeExample> train,
                                             std::span<const ProbeExample> dev,
                                             std::size_t stage)>;

/// Trains the MLP probe at every stage, starting from `init` each time
/// unless `warm_start` carries the previous stage's weights forward.
inline StageTrainer probe_trainer(ProbeModel init, TrainConfig cfg, bool warm_start = false) {
  auto current = std::make_shared<ProbeModel>(std::move(init));
  return [current, cfg, warm_start, init_copy = *current](std::span<const ProbeExample> train,
                                                           std::span<const ProbeExample> dev,
                                                           std::size_t) -> Predictor {
    auto trained = train_probe(warm_start ? *current : init_copy, train, dev, cfg);
    auto model = std::make_shared<ProbeModel>(std::move(trained.model));
    if (warm_start) *current = *model;
    return [model](const ProbeExample& ex) { return predict(*model, ex); };
  };
}

inline constexpr double kMinProbability = 0x1p-64;

struct BlockRecord {
  std::size_t index = 0;  // 1-based
  std::size_t begin = 0;  // examples [begin, end)
  std::size_t end = 0;
  double bits = 0.0;
  std::size_t clamps = 0;
  std::size_t correct = 0;  // argmax hits; 0 for the uniform block

  bool operator==(const BlockRecord&) const = default;
};

struct CodelengthReport {
  std::vector<BlockRecord> blocks;
  std::size_t n = 0;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;
  double total_bits = 0.0;

  double kilobits() const noexcept { return total_bits / 1000.0; }
  double kilobytes() const noexcept { return total_bits / 8000.0; }
  double uniform_bits() const noexcept {
    return static_cast<double>(n) * std::log2(static_cast<double>(num_classes));
  }
  std::size_t clamps() const noexcept {
    std::size_t c = 0;
    for (const auto& b : blocks) c += b.clamps;
    return c;
  }
  /// Accuracy of each stage's model on the block it transmitted.
  double online_accuracy() const noexcept {
    std::size_t hits = 0, seen = 0;
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      hits += blocks[i].correct;
      seen += blocks[i].end - blocks[i].begin;
    }
    return seen == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(seen);
  }

  /// One "block" line per block, then totals.
  void write(std::ostream& os) const {
    const auto old = os.precision(17);
    os << "# block\tbegin\tend\tbits\tclamps\n";
    for (const auto& b : blocks)
      os << "block\t" << b.index << '\t' << b.begin << '\t' << b.end << '\t' << b.bits << '\t'
         << b.clamps << '\n';
    os << "n\t" << n << '\n'
       << "classes\t" << num_classes << '\n'
       << "seed\t" << seed << '\n'
       << "total_bits\t" << total_bits << '\n'
       << "kilobits\t" << kilobits() << '\n'
       << "kilobytes\t" << kilobytes() << '\n'
       << "uniform_bits\t" << uniform_bits() << '\n'
       << "online_accuracy\t" << online_accuracy() << '\n';
    os.precision(old);
  }

  std::string to_text() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  bool operator==(const CodelengthReport&) const = default;
};

struct OnlineOptions {
  std::uint64_t seed = 0;
  std::vector<double> fractions = kDefaultFractions;
  double holdout_fraction = 0.1;
};

/// Prequential code: the first block is sent with a uniform code; each later
/// block is sent with a model fit on everything transmitted before it.
/// `data` is shuffled once with the run seed before scheduling. Without a
/// `dev` set each stage holds out a seeded 10% of its prefix (at least one
/// example); a one-example prefix is its own dev set.
inline CodelengthReport online_codelength(std::vector<ProbeExample> data, std::size_t num_classes,
                                          const StageTrainer& trainer, const OnlineOptions& opt = {},
                                          std::span<const ProbeExample> dev = {}) {
  detail::require(num_classes >= 2, "online_codelength: need at least 2 classes");
  for (const auto& ex : data)
    if (ex.label >= num_classes) throw InvalidArgument("online_codelength: label out of range");
  const auto schedule = make_schedule(data.size(), opt.fractions);
  Rng(derive_seed(opt.seed, 0x5eed)).shuffle(data);

  CodelengthReport rep;
  rep.n = data.size();
  rep.num_classes = num_classes;
  rep.seed = opt.seed;
  const double log_k = std::log2(static_cast<double>(num_classes));
  const std::size_t t1 = schedule.boundaries.front();
  rep.blocks.push_back({1, 0, t1, static_cast<double>(t1) * log_k, 0, 0});

  std::vector<ProbeExample> fit, held;
  for (std::size_t s = 1; s < schedule.boundaries.size(); ++s) {
    const std::size_t prefix = schedule.boundaries[s - 1];
    const std::size_t end = schedule.boundaries[s];
    std::span<const ProbeExample> train_span(data.data(), prefix);
    std::span<const ProbeExample> dev_span = dev;
    if (dev.empty() && prefix > 1) {
      std::vector<std::size_t> idx(prefix);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Rng(derive_seed(opt.seed, s)).shuffle(idx);
      const auto hold = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(opt.holdout_fraction * static_cast<double>(prefix))));
      std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(hold));
      std::sort(idx.begin() + static_cast<std::ptrdiff_t>(hold), idx.end());
      held.clear();
      fit.clear();
      for (std::size_t i = 0; i < hold; ++i) held.push_back(data[idx[i]]);
      for (std::size_t i = hold; i < prefix; ++i) fit.push_back(data[idx[i]]);
      train_span = fit;
      dev_span = held;
    } else if (dev.empty()) {
      dev_span = train_span;
    }
    const Predictor predict_fn = trainer(train_span, dev_span, s);

    BlockRecord b{s + 1, prefix, end, 0.0, 0, 0};
    for (std::size_t i = prefix; i < end; ++i) {
      const auto p = predict_fn(data[i]);
      if (p.size() != num_classes)
        throw InvalidArgument("online_codelength: predictor returned the wrong class count");
      double q = p[data[i].label];
      if (!(q >= kMinProbability)) {
        if (std::isnan(q)) throw NumericalError("online_codelength: NaN probability");
        q = kMinProbability;
        ++b.clamps;
      }
      b.bits -= std::log2(q);
      b.correct += static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) ==
                   data[i].label;
    }
    rep.blocks.push_back(b);
  }
  for (const auto& b : rep.blocks) rep.total_bits += b.bits;
  return rep;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Mean and sample (n - 1) standard deviation; std is 0 for one value.
inline Summary aggregate(std::span<const double> values) {
  detail::require(!values.empty(), "aggregate: no values");
  Summary s;
  s.count = values.size();
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

inline Summary aggregate(std::span<const CodelengthReport> reports) {
  std::vector<double> totals;
  for (const auto& r : reports) totals.push_back(r.total_bits);
  return aggregate(std::span<const double>(totals));
}

}  // namespace eigennoise
