#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "eigennoise/datasets.hpp"
#include "eigennoise/eigen.hpp"
#include "eigennoise/embeddings.hpp"
#include "eigennoise/harmonic.hpp"
#include "eigennoise/mdl.hpp"
#include "eigennoise/probe.hpp"
#include "eigennoise/vocab.hpp"

namespace eigennoise {

inline const std::vector<std::uint64_t> kDefaultSeeds{0, 1234, 322111};
inline const std::vector<std::size_t> kStandardWindows{0, 2, 5, 10};

enum class TaskKind { token, sequence, synth };

inline TaskKind parse_task_kind(std::string_view s) {
  if (s == "token") return TaskKind::token;
  if (s == "sequence") return TaskKind::sequence;
  if (s == "synth") return TaskKind::synth;
  throw InvalidArgument("unknown task kind '" + std::string(s) + "'");
}

struct TaskSpec {
  TaskKind kind = TaskKind::synth;
  std::string train;  // paths; empty when absent
  std::string dev;
  std::string test;
  std::size_t token_column = 0;
  std::size_t label_column = 1;
  SynthKind synth_kind = SynthKind::separable;
  std::size_t synth_n = 2000;
  std::size_t synth_classes = 2;
  std::uint64_t synth_seed = 0;
};

enum class FrozenMode { both, frozen, unfrozen };

inline FrozenMode parse_frozen_mode(std::string_view s) {
  if (s == "both") return FrozenMode::both;
  if (s == "true" || s == "frozen") return FrozenMode::frozen;
  if (s == "false" || s == "unfrozen") return FrozenMode::unfrozen;
  throw InvalidArgument("unknown frozen mode '" + std::string(s) + "'");
}

/// "eigennoise", "random" or "imported:<path>".
struct Representation {
  EmbeddingSource source = EmbeddingSource::eigennoise;
  std::string path;

  std::string name() const {
    return source == EmbeddingSource::imported ? "imported:" + path : to_string(source);
  }
};

inline Representation parse_representation(std::string_view s) {
  if (s == "eigennoise") return {EmbeddingSource::eigennoise, {}};
  if (s == "random") return {EmbeddingSource::random, {}};
  constexpr std::string_view prefix = "imported:";
  if (s.substr(0, prefix.size()) == prefix && s.size() > prefix.size())
    return {EmbeddingSource::imported, std::string(s.substr(prefix.size()))};
  throw InvalidArgument("unknown representation '" + std::string(s) +
                        "' (expected eigennoise, random or imported:<path>)");
}

struct ExperimentSpec {
  std::vector<std::string> representations{"eigennoise", "random"};
  TaskSpec task;
  std::vector<std::size_t> windows{0};
  FrozenMode frozen = FrozenMode::both;
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  std::size_t d = 50;
  std::size_t vocab_cap = kDefaultVocabCap;
  bool case_fold = false;
  EigenMode mode = EigenMode::linear;
  Ordering ordering = Ordering::by_magnitude;
  std::size_t model_window = kDefaultModelWindow;
  std::uint64_t completion_seed = 0;
  std::size_t hidden = kDefaultHidden;
  TrainConfig train{};
  bool warm_start = false;
  std::size_t workers = 0;  // 0: EIGENNOISE_WORKERS or hardware concurrency
};

/// Checks everything that can be checked without reading data.
inline std::vector<Representation> validate(const ExperimentSpec& spec) {
  detail::require(!spec.seeds.empty(), "experiment: at least one seed is required");
  detail::require(!spec.representations.empty(), "experiment: at least one representation");
  detail::require(!spec.windows.empty(), "experiment: at least one window");
  detail::require(spec.d >= 1 && spec.hidden >= 1 && spec.vocab_cap >= 1,
                  "experiment: d, hidden and vocab cap must be >= 1");
  if (spec.task.kind != TaskKind::token)
    detail::require(spec.windows.size() == 1 && spec.windows[0] == 0,
                    "experiment: windows apply to token tasks only");
  if (spec.task.kind != TaskKind::synth)
    detail::require(!spec.task.train.empty(), "experiment: a training file is required");
  std::vector<Representation> reps;
  for (const auto& r : spec.representations) reps.push_back(parse_representation(r));
  return reps;
}

/// Number of concurrent cells: explicit request, then EIGENNOISE_WORKERS,
/// then the available parallelism.
inline std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EIGENNOISE_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Parsed splits in a form every cell can share read-only.
struct LoadedTask {
  bool token_task = false;
  std::size_t num_classes = 0;
  std::vector<std::string> label_names;
  Vocabulary vocab;
  std::optional<TokenDataset> token_train, token_dev, token_test;
  std::optional<SequenceDataset> seq_train, seq_dev, seq_test;

  std::size_t train_size() const {
    return token_task ? token_train->num_tokens() : seq_train->texts.size();
  }

  std::vector<ProbeExample> examples(const std::string& split, std::size_t window) const {
    if (token_task) {
      const auto& ds = split == "train" ? token_train : split == "dev" ? token_dev : token_test;
      return ds ? make_token_examples(*ds, vocab, window) : std::vector<ProbeExample>{};
    }
    const auto& ds = split == "train" ? seq_train : split == "dev" ? seq_dev : seq_test;
    return ds ? make_sequence_examples(*ds, vocab) : std::vector<ProbeExample>{};
  }
};

inline LoadedTask load_task(const TaskSpec& t, std::size_t vocab_cap, bool case_fold) {
  LoadedTask lt;
  std::vector<std::string> tokens;
  if (t.kind == TaskKind::token) {
    lt.token_task = true;
    lt.token_train = parse_conll(t.train, t.token_column, t.label_column, nullptr, "train");
    const LabelSet& labels = lt.token_train->label_set;
    if (!t.dev.empty()) lt.token_dev = parse_conll(t.dev, t.token_column, t.label_column, &labels, "dev");
    if (!t.test.empty())
      lt.token_test = parse_conll(t.test, t.token_column, t.label_column, &labels, "test");
    lt.label_names = labels.names();
    for (const auto& s : lt.token_train->sentences) tokens.insert(tokens.end(), s.begin(), s.end());
  } else {
    if (t.kind == TaskKind::sequence) {
      lt.seq_train = parse_tsv(t.train, nullptr, "train");
      const LabelSet& labels = lt.seq_train->label_set;
      if (!t.dev.empty()) lt.seq_dev = parse_tsv(t.dev, &labels, "dev");
      if (!t.test.empty()) lt.seq_test = parse_tsv(t.test, &labels, "test");
    } else {
      lt.seq_train = synth_token_task(t.synth_kind, t.synth_n, t.synth_classes, t.synth_seed);
    }
    lt.label_names = lt.seq_train->label_set.names();
    for (const auto& text : lt.seq_train->texts) {
      auto toks = tokenize(text);
      tokens.insert(tokens.end(), toks.begin(), toks.end());
    }
  }
  lt.num_classes = lt.label_names.size();
  if (lt.num_classes < 2) throw DataError("training split has fewer than 2 distinct labels");
  lt.vocab = Vocabulary::build(tokens, case_fold, vocab_cap);
  return lt;
}

struct CellResult {
  std::string representation;
  std::size_t window = 0;
  bool frozen = true;
  std::uint64_t seed = 0;
  std::optional<CodelengthReport> report;
  std::optional<double> test_accuracy;
  std::string error;  // empty on success

  bool ok() const noexcept { return error.empty() && report.has_value(); }
};

struct ExperimentResult {
  std::size_t n = 0;
  std::size_t num_classes = 0;
  std::size_t vocab_size = 0;
  std::vector<std::string> label_names;
  std::map<std::string, AlignmentReport> alignments;  // imported representations
  std::vector<CellResult> cells;

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok(); }));
  }
};

namespace detail {

inline Pooling pooling_for(const LoadedTask& t) {
  return t.token_task ? Pooling::concat : Pooling::mean;
}

/// Accuracy on the test split of a probe trained on the whole training set.
inline double test_accuracy(const ProbeModel& init, std::span<const ProbeExample> train,
                            std::span<const ProbeExample> dev, std::span<const ProbeExample> test,
                            const TrainConfig& cfg) {
  std::vector<ProbeExample> fit, held;
  if (dev.empty()) {
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng(derive_seed(cfg.seed, 0xd3f)).shuffle(idx);
    const auto hold = std::max<std::size_t>(1, (train.size() + 9) / 10);
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < hold && train.size() > 1 ? held : fit).push_back(train[idx[i]]);
    if (fit.empty()) fit = held;
    train = fit;
    dev = held;
  }
  return accuracy(train_probe(init, train, dev, cfg).model, test);
}

}  // namespace detail

/// Runs every (representation, window, frozen, seed) cell on a worker pool.
/// A failing cell records its error; the others still run.
inline ExperimentResult run_matrix(const ExperimentSpec& spec) {
  const auto reps = validate(spec);
  const LoadedTask task = load_task(spec.task, spec.vocab_cap, spec.case_fold);
  const std::size_t n_vocab = task.vocab.size();

  ExperimentResult result;
  result.n = task.train_size();
  result.num_classes = task.num_classes;
  result.vocab_size = n_vocab;
  result.label_names = task.label_names;

  // Seed-independent tables are built once; a failure marks every cell that needs it.
  std::map<std::string, EmbeddingTable> shared;
  std::map<std::string, std::string> table_errors;
  for (const auto& r : reps) {
    try {
      if (r.source == EmbeddingSource::eigennoise) {
        AnalyticOptions opt{spec.mode, spec.ordering, spec.completion_seed};
        shared[r.name()] =
            to_embedding(eigennoise_analytic(HarmonicModel(n_vocab, spec.model_window), spec.d, opt));
      } else if (r.source == EmbeddingSource::imported) {
        auto imported = import_text(r.path, task.vocab);
        result.alignments[r.name()] = imported.report;
        shared[r.name()] = std::move(imported.table);
      }
    } catch (const std::exception& e) {
      table_errors[r.name()] = e.what();
    }
  }

  std::vector<bool> frozen_modes;
  if (spec.frozen != FrozenMode::unfrozen) frozen_modes.push_back(true);
  if (spec.frozen != FrozenMode::frozen) frozen_modes.push_back(false);
  for (const auto& r : reps)
    for (std::size_t w : spec.windows)
      for (bool fr : frozen_modes)
        for (std::uint64_t seed : spec.seeds) result.cells.push_back({r.name(), w, fr, seed, {}, {}, {}});

  std::map<std::size_t, std::vector<ProbeExample>> train_by_window, dev_by_window, test_by_window;
  for (std::size_t w : spec.windows) {
    train_by_window[w] = task.examples("train", w);
    dev_by_window[w] = task.examples("dev", w);
    test_by_window[w] = task.examples("test", w);
  }

  auto run_cell = [&](CellResult& cell) {
    if (auto it = table_errors.find(cell.representation); it != table_errors.end())
      throw DataError(it->second);
    EmbeddingTable table = shared.count(cell.representation)
                               ? shared.at(cell.representation)
                               : random_table(n_vocab, spec.d, cell.seed);
    table.set_trainable(!cell.frozen);
    const std::size_t dim = table.dim();
    const Pooling pooling = detail::pooling_for(task);
    const std::size_t input = pooling == Pooling::concat ? (2 * cell.window + 1) * dim : dim;
    const auto init = ProbeModel::init(input, spec.hidden, task.num_classes, cell.seed,
                                       std::move(table), pooling);
    TrainConfig cfg = spec.train;
    cfg.seed = cell.seed;
    const auto& train = train_by_window.at(cell.window);
    const auto& dev = dev_by_window.at(cell.window);
    const auto& test = test_by_window.at(cell.window);
    OnlineOptions opt;
    opt.seed = cell.seed;
    cell.report = online_codelength(train, task.num_classes, probe_trainer(init, cfg, spec.warm_start),
                                    opt, dev);
    if (!test.empty()) cell.test_accuracy = detail::test_accuracy(init, train, dev, test, cfg);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < result.cells.size();) {
      try {
        run_cell(result.cells[i]);
      } catch (const std::exception& e) {
        result.cells[i].report.reset();
        result.cells[i].error = e.what();
      }
    }
  };
  const std::size_t workers = std::min(worker_count(spec.workers), result.cells.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return result;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const CellResult& c) {
  nlohmann::json j{{"representation", c.representation},
                   {"window", c.window},
                   {"frozen", c.frozen},
                   {"seed", c.seed}};
  if (!c.error.empty()) j["error"] = c.error;
  if (c.report) {
    const auto& r = *c.report;
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : r.blocks)
      blocks.push_back({{"index", b.index}, {"begin", b.begin}, {"end", b.end}, {"bits", b.bits},
                        {"clamps", b.clamps}, {"correct", b.correct}});
    j["n"] = r.n;
    j["classes"] = r.num_classes;
    j["blocks"] = std::move(blocks);
    j["total_bits"] = r.total_bits;
    j["kilobits"] = r.kilobits();
    j["kilobytes"] = r.kilobytes();
    j["uniform_bits"] = r.uniform_bits();
    j["clamps"] = r.clamps();
    j["online_accuracy"] = r.online_accuracy();
  }
  if (c.test_accuracy) j["test_accuracy"] = *c.test_accuracy;
  return j;
}

inline CellResult cell_from_json(const nlohmann::json& j) {
  try {
    CellResult c;
    c.representation = j.at("representation").get<std::string>();
    c.window = j.at("window").get<std::size_t>();
    c.frozen = j.at("frozen").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("error")) c.error = j.at("error").get<std::string>();
    if (j.contains("blocks")) {
      CodelengthReport r;
      r.n = j.at("n").get<std::size_t>();
      r.num_classes = j.at("classes").get<std::size_t>();
      r.seed = c.seed;
      for (const auto& b : j.at("blocks"))
        r.blocks.push_back({b.at("index").get<std::size_t>(), b.at("begin").get<std::size_t>(),
                            b.at("end").get<std::size_t>(), b.at("bits").get<double>(),
                            b.at("clamps").get<std::size_t>(), b.at("correct").get<std::size_t>()});
      r.total_bits = j.at("total_bits").get<double>();
      c.report = std::move(r);
    }
    if (j.contains("test_accuracy")) c.test_accuracy = j.at("test_accuracy").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run record: ") + e.what());
  }
}

/// File stem for a cell, e.g. "eigennoise_w0_frozen_s1234".
inline std::string cell_stem(const CellResult& c) {
  std::string rep = c.representation;
  for (char& ch : rep)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-') ch = '_';
  return rep + "_w" + std::to_string(c.window) + (c.frozen ? "_frozen" : "_unfrozen") + "_s" +
         std::to_string(c.seed);
}

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string mean_std(const std::vector<double>& v, int digits) {
  if (v.empty()) return "-";
  const auto s = aggregate(std::span<const double>(v));
  return fixed(s.mean, digits) + " +/- " + fixed(s.std, digits);
}

}  // namespace detail

/// Aligned plain-text table: one row per (representation, window), frozen
/// columns left of unfrozen, codelengths in kilobits, plus the uniform code.
inline void write_aggregate(std::ostream& os, const std::vector<CellResult>& cells) {
  struct Row {
    std::vector<double> kbits[2], acc[2], test[2];
    double uniform_kbits = 0.0;
    std::size_t failed = 0;
  };
  std::vector<std::pair<std::string, std::size_t>> order;
  std::map<std::pair<std::string, std::size_t>, Row> rows;
  for (const auto& c : cells) {
    const auto key = std::make_pair(c.representation, c.window);
    if (!rows.count(key)) order.push_back(key);
    Row& row = rows[key];
    if (!c.ok()) {
      ++row.failed;
      continue;
    }
    const int side = c.frozen ? 0 : 1;
    row.kbits[side].push_back(c.report->kilobits());
    row.acc[side].push_back(c.report->online_accuracy());
    if (c.test_accuracy) row.test[side].push_back(*c.test_accuracy);
    row.uniform_kbits = c.report->uniform_bits() / 1000.0;
  }

  const std::vector<std::string> header{"representation", "window", "frozen_kbits", "unfrozen_kbits",
                                        "frozen_acc",     "unfrozen_acc", "frozen_test_acc",
                                        "unfrozen_test_acc", "uniform_kbits", "failed"};
  std::vector<std::vector<std::string>> table{header};
  for (const auto& key : order) {
    const Row& r = rows.at(key);
    table.push_back({key.first, std::to_string(key.second), detail::mean_std(r.kbits[0], 3),
                     detail::mean_std(r.kbits[1], 3), detail::mean_std(r.acc[0], 4),
                     detail::mean_std(r.acc[1], 4), detail::mean_std(r.test[0], 4),
                     detail::mean_std(r.test[1], 4), detail::fixed(r.uniform_kbits, 3),
                     std::to_string(r.failed)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      os << line[i];
      if (i + 1 < line.size()) os << std::string(width[i] - line[i].size() + 2, ' ');
    }
    os << '\n';
  }
  for (const auto& c : cells)
    if (!c.error.empty()) os << "error " << cell_stem(c) << ": " << c.error << '\n';
}

inline std::string aggregate_text(const std::vector<CellResult>& cells) {
  std::ostringstream os;
  write_aggregate(os, cells);
  return os.str();
}

/// Writes runs/<cell>.json, runs/<cell>.codelength and aggregate.txt.
inline void write_reports(const std::filesystem::path& dir, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "runs");
  for (const auto& c : result.cells) {
    std::ofstream(dir / "runs" / (cell_stem(c) + ".json")) << to_json(c).dump(2) << '\n';
    if (c.report) std::ofstream(dir / "runs" / (cell_stem(c) + ".codelength")) << c.report->to_text();
  }
  std::ofstream(dir / "aggregate.txt") << aggregate_text(result.cells);
  if (!result.alignments.empty()) {
    std::ofstream out(dir / "alignment.txt");
    for (const auto& [name, rep] : result.alignments) out << "# " << name << '\n' << rep.to_text();
  }
}

/// Reads every runs/*.json under `dir` in file-name order.
inline std::vector<CellResult> read_runs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path runs = fs::exists(dir / "runs") ? dir / "runs" : dir;
  if (!fs::is_directory(runs)) throw DataError("no run directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no run records in " + runs.string());
  std::vector<CellResult> cells;
  for (const auto& f : files) {
    std::ifstream in(f);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(f.string() + ": " + e.what());
    }
    cells.push_back(cell_from_json(j));
  }
  return cells;
}

}  // namespace eigennoise
