// eigennoise: vocabulary, embedding and probing commands.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 failed matrix cells.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eigennoise/datasets.hpp"
#include "eigennoise/eigen.hpp"
#include "eigennoise/embeddings.hpp"
#include "eigennoise/experiment.hpp"
#include "eigennoise/vocab.hpp"

namespace fs = std::filesystem;
using namespace eigennoise;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kCells = 3;

/// Writes through a temporary file so a failure leaves no partial output.
template <typename Fn>
void write_atomically(const fs::path& path, Fn&& fn) {
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + path.string());
    try {
      fn(out);
    } catch (...) {
      out.close();
      fs::remove(tmp);
      throw;
    }
    if (!out) {
      fs::remove(tmp);
      throw DataError("write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

std::vector<std::string> read_tokens(const std::string& path, const std::string& format,
                                     std::size_t token_column, std::size_t label_column) {
  std::vector<std::string> tokens;
  if (format == "conll") {
    const auto ds = parse_conll(path, token_column, label_column);
    for (const auto& s : ds.sentences) tokens.insert(tokens.end(), s.begin(), s.end());
  } else if (format == "tsv") {
    for (const auto& text : parse_tsv(path).texts) {
      auto t = tokenize(text);
      tokens.insert(tokens.end(), t.begin(), t.end());
    }
  } else {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    for (std::string line; std::getline(in, line);) {
      auto t = tokenize(line);
      tokens.insert(tokens.end(), t.begin(), t.end());
    }
  }
  return tokens;
}

struct TableSource {
  std::string vocab_path;
  std::size_t n = 0;
  bool case_fold = false;
};

/// Vocabulary from file, or none when only a size was given.
std::optional<Vocabulary> load_vocab(const TableSource& src) {
  if (src.vocab_path.empty()) return std::nullopt;
  return Vocabulary::load(src.vocab_path, src.case_fold);
}

std::vector<std::string> names_for(const std::optional<Vocabulary>& vocab, std::size_t n) {
  return vocab ? vocab_names(*vocab) : rank_names(n);
}

void write_table(const std::string& output, const EmbeddingTable& table,
                 const std::vector<std::string>& names, const nlohmann::json& provenance) {
  write_atomically(output, [&](std::ostream& os) { export_text(os, table, names); });
  write_atomically(output + ".provenance.json",
                   [&](std::ostream& os) { os << provenance.dump(2) << '\n'; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-free EigenNoise embeddings and MDL probing"};
  app.require_subcommand(1);

  // vocab build
  auto* vocab_cmd = app.add_subcommand("vocab", "Vocabulary commands")->require_subcommand(1);
  auto* vocab_build = vocab_cmd->add_subcommand("build", "Count tokens and assign frequency ranks");
  std::vector<std::string> vb_inputs;
  std::string vb_output, vb_format = "text";
  std::size_t vb_cap = kDefaultVocabCap, vb_token_col = 0, vb_label_col = 1;
  bool vb_fold = false;
  vocab_build->add_option("--input", vb_inputs, "Input files")->required();
  vocab_build->add_option("--output", vb_output, "Vocabulary file (token, count, rank)")->required();
  vocab_build->add_option("--format", vb_format, "Input format")
      ->check(CLI::IsMember({"text", "conll", "tsv"}));
  vocab_build->add_option("--max-size", vb_cap, "Keep the most frequent N types");
  vocab_build->add_option("--token-column", vb_token_col, "CoNLL token column (0-based)");
  vocab_build->add_option("--label-column", vb_label_col, "CoNLL label column (0-based)");
  vocab_build->add_flag("--case-fold", vb_fold, "Lowercase ASCII before counting");

  // embed eigennoise | random | import
  auto* embed_cmd = app.add_subcommand("embed", "Embedding table commands")->require_subcommand(1);
  TableSource src;
  std::string output, mode_name = "linear", ordering_name = "by_magnitude", side_name = "u";
  std::size_t d = 50, model_window = kDefaultModelWindow;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> completion_seed = 0;
  bool no_rotation = false;

  auto add_source = [&](CLI::App* cmd) {
    auto* v = cmd->add_option("--vocab", src.vocab_path, "Vocabulary file");
    auto* n = cmd->add_option("--n", src.n, "Number of ranks (no vocabulary)");
    v->excludes(n);
    n->excludes(v);
    cmd->add_flag("--case-fold", src.case_fold, "Vocabulary was built case-folded");
    cmd->add_option("--output", output, "GloVe-format output file")->required();
  };

  auto* embed_eigen = embed_cmd->add_subcommand("eigennoise", "Analytic EigenNoise vectors");
  add_source(embed_eigen);
  embed_eigen->add_option("--d", d, "Dimensions");
  embed_eigen->add_option("--mode", mode_name, "Factorized matrix")
      ->check(CLI::IsMember({"linear", "log"}));
  embed_eigen->add_option("--ordering", ordering_name, "Eigenvalue ordering")
      ->check(CLI::IsMember({"by_magnitude", "by_value"}));
  embed_eigen->add_option("--m", model_window, "Co-occurrence window of the model");
  embed_eigen->add_option("--side", side_name, "Factor to export")->check(CLI::IsMember({"u", "v"}));
  auto* cs = embed_eigen->add_option("--completion-seed", completion_seed,
                                     "Seed of the null-space rotation");
  auto* nr = embed_eigen->add_flag("--no-rotation", no_rotation, "Plain Householder completion");
  cs->excludes(nr);
  nr->excludes(cs);

  auto* embed_random = embed_cmd->add_subcommand("random", "Standard-normal baseline vectors");
  add_source(embed_random);
  embed_random->add_option("--d", d, "Dimensions");
  embed_random->add_option("--seed", seed, "Random seed");

  auto* embed_import = embed_cmd->add_subcommand("import", "Align pretrained GloVe-text vectors");
  std::string import_input;
  std::optional<std::size_t> import_dim;
  embed_import->add_option("--vocab", src.vocab_path, "Vocabulary file")->required();
  embed_import->add_flag("--case-fold", src.case_fold, "Vocabulary was built case-folded");
  embed_import->add_option("--input", import_input, "GloVe-format source file")->required();
  embed_import->add_option("--dim", import_dim, "Expected vector dimension");
  embed_import->add_option("--output", output, "Aligned output file")->required();

  // probe run
  auto* probe_cmd = app.add_subcommand("probe", "Probing commands")->require_subcommand(1);
  auto* probe_run = probe_cmd->add_subcommand("run", "Run the experiment matrix");
  ExperimentSpec spec;
  std::string task_name = "synth", synth_kind = "separable", frozen_name = "both", base;
  std::string counter_name = "cumulative", out_dir = "eigennoise-report";
  std::vector<std::string> reps;
  std::vector<std::size_t> windows;
  std::vector<std::uint64_t> seeds;
  probe_run->add_option("--task", task_name, "Task kind")
      ->check(CLI::IsMember({"token", "sequence", "synth"}));
  probe_run->add_option("--data", base, "Split prefix (<prefix>.train, .dev, .test)");
  probe_run->add_option("--train", spec.task.train, "Training split");
  probe_run->add_option("--dev", spec.task.dev, "Development split");
  probe_run->add_option("--test", spec.task.test, "Test split");
  probe_run->add_option("--token-column", spec.task.token_column, "CoNLL token column (0-based)");
  probe_run->add_option("--label-column", spec.task.label_column, "CoNLL label column (0-based)");
  probe_run->add_option("--synth-kind", synth_kind, "Synthetic task kind")
      ->check(CLI::IsMember({"separable", "noisy"}));
  probe_run->add_option("--synth-n", spec.task.synth_n, "Synthetic examples");
  probe_run->add_option("--synth-classes", spec.task.synth_classes, "Synthetic classes");
  probe_run->add_option("--synth-seed", spec.task.synth_seed, "Synthetic data seed");
  probe_run->add_option("--representation", reps,
                        "eigennoise, random or imported:<path> (repeatable)");
  probe_run->add_option("--window", windows, "Token window half-widths (repeatable)");
  probe_run->add_option("--frozen", frozen_name, "Embedding training")
      ->check(CLI::IsMember({"both", "true", "false"}));
  probe_run->add_option("--seed", seeds, "Run seeds (repeatable)");
  probe_run->add_option("--d", spec.d, "Embedding dimensions");
  probe_run->add_option("--vocab-cap", spec.vocab_cap, "Vocabulary size cap");
  probe_run->add_flag("--case-fold", spec.case_fold, "Lowercase ASCII tokens");
  probe_run->add_option("--mode", mode_name, "EigenNoise matrix")->check(CLI::IsMember({"linear", "log"}));
  probe_run->add_option("--ordering", ordering_name, "EigenNoise ordering")
      ->check(CLI::IsMember({"by_magnitude", "by_value"}));
  probe_run->add_option("--m", spec.model_window, "EigenNoise model window");
  probe_run->add_option("--hidden", spec.hidden, "Probe hidden units");
  probe_run->add_option("--lr", spec.train.lr, "Initial learning rate");
  probe_run->add_option("--anneal-factor", spec.train.anneal_factor, "Learning-rate multiplier");
  probe_run->add_option("--patience", spec.train.patience, "Non-improving epochs before stopping");
  probe_run->add_option("--anneal-counter", counter_name, "How non-improving epochs are counted")
      ->check(CLI::IsMember({"cumulative", "consecutive"}));
  probe_run->add_option("--batch-size", spec.train.batch_size, "Mini-batch size");
  probe_run->add_option("--max-epochs", spec.train.max_epochs, "Epoch cap per stage");
  probe_run->add_flag("--warm-start", spec.warm_start, "Continue from the previous stage's probe");
  probe_run->add_option("--workers", spec.workers, "Concurrent cells (0: automatic)");
  probe_run->add_option("--output", out_dir, "Report directory");

  // report aggregate
  auto* report_cmd = app.add_subcommand("report", "Report commands")->require_subcommand(1);
  auto* report_agg = report_cmd->add_subcommand("aggregate", "Rebuild the table from run records");
  std::string runs_dir, agg_output;
  report_agg->add_option("--runs", runs_dir, "Report directory or its runs/ folder")->required();
  report_agg->add_option("--output", agg_output, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (vocab_build->parsed()) {
      std::vector<std::string> tokens;
      for (const auto& path : vb_inputs) {
        auto t = read_tokens(path, vb_format, vb_token_col, vb_label_col);
        tokens.insert(tokens.end(), t.begin(), t.end());
      }
      if (tokens.empty()) throw DataError("input contains no tokens");
      const auto vocab = Vocabulary::build(tokens, vb_fold, vb_cap);
      write_atomically(vb_output, [&](std::ostream& os) { vocab.write(os); });
      std::cerr << "wrote " << vocab.size() << " types from " << tokens.size() << " tokens\n";
      return 0;
    }

    if (embed_eigen->parsed() || embed_random->parsed()) {
      if (src.vocab_path.empty() && src.n == 0) throw InvalidArgument("give --vocab or --n");
      const auto vocab = load_vocab(src);
      const std::size_t n = vocab ? vocab->size() : src.n;
      nlohmann::json prov{{"n", n}, {"d", d}};
      EmbeddingTable table;
      if (embed_eigen->parsed()) {
        AnalyticOptions opt{parse_eigen_mode(mode_name), parse_ordering(ordering_name),
                            no_rotation ? std::nullopt : completion_seed};
        const auto f = eigennoise_analytic(HarmonicModel(n, model_window), d, opt);
        table = to_embedding(f, side_name == "u" ? FactorSide::u : FactorSide::v);
        prov["source"] = "eigennoise";
        prov["mode"] = mode_name;
        prov["m"] = model_window;
        prov["ordering"] = ordering_name;
        prov["side"] = side_name;
        prov["seed"] = opt.rotation_seed ? nlohmann::json(*opt.rotation_seed) : nlohmann::json(nullptr);
      } else {
        table = random_table(n, d, seed);
        prov["source"] = "random";
        prov["seed"] = seed;
      }
      write_table(output, table, names_for(vocab, n), prov);
      return 0;
    }

    if (embed_import->parsed()) {
      const auto vocab = *load_vocab(src);
      const auto imported = import_text(import_input, vocab, import_dim);
      nlohmann::json prov{{"source", "imported"},
                          {"input", import_input},
                          {"n", vocab.size()},
                          {"d", imported.table.dim()},
                          {"matched", imported.report.matched},
                          {"unmatched", imported.report.unmatched}};
      write_table(output, imported.table, vocab_names(vocab), prov);
      write_atomically(output + ".alignment", [&](std::ostream& os) { os << imported.report.to_text(); });
      std::cerr << imported.report.to_text();
      return 0;
    }

    if (probe_run->parsed()) {
      spec.task.kind = parse_task_kind(task_name);
      spec.task.synth_kind = parse_synth_kind(synth_kind);
      if (!base.empty()) {
        if (!spec.task.train.empty()) throw InvalidArgument("--data conflicts with --train");
        const auto splits = discover_splits(base);
        spec.task.train = splits.train;
        if (spec.task.dev.empty() && splits.dev) spec.task.dev = *splits.dev;
        if (spec.task.test.empty() && splits.test) spec.task.test = *splits.test;
      }
      if (!reps.empty()) spec.representations = reps;
      if (!windows.empty()) spec.windows = windows;
      if (!seeds.empty()) spec.seeds = seeds;
      spec.frozen = parse_frozen_mode(frozen_name);
      spec.mode = parse_eigen_mode(mode_name);
      spec.ordering = parse_ordering(ordering_name);
      spec.train.counter =
          counter_name == "consecutive" ? AnnealCounter::consecutive : AnnealCounter::cumulative;
      validate(spec);
      const auto result = run_matrix(spec);
      write_reports(out_dir, result);
      std::cout << aggregate_text(result.cells);
      if (result.failures() > 0) {
        std::cerr << result.failures() << " of " << result.cells.size() << " cells failed\n";
        return kCells;
      }
      return 0;
    }

    if (report_agg->parsed()) {
      const auto cells = read_runs(runs_dir);
      if (agg_output.empty())
        write_aggregate(std::cout, cells);
      else
        write_atomically(agg_output, [&](std::ostream& os) { write_aggregate(os, cells); });
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
