#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "longdoc/corpus.hpp"
#include "longdoc/errors.hpp"
#include "longdoc/experiment.hpp"
#include "longdoc/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitDataError = 2;
constexpr int kExitTrainingError = 3;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw longdoc::DataError("cannot write " + path);
  out << text;
}

struct PreprocessArgs {
  std::string input;
  std::string format = "jsonl";
  std::string rules_path;
  std::string out;
};

int run_preprocess(const PreprocessArgs& args) {
  longdoc::FootnoteRules rules = longdoc::FootnoteRules::defaults();
  if (!args.rules_path.empty()) {
    if (std::filesystem::exists(args.rules_path)) {
      rules = longdoc::FootnoteRules::load(args.rules_path);
    } else {
      std::cerr << "rules file " << args.rules_path
                << " not found; using the built-in default rules\n";
    }
  }
  longdoc::PreprocessStats stats = longdoc::preprocess_corpus(
      args.input, longdoc::parse_corpus_format(args.format), rules, args.out);
  std::cout << longdoc::format_stats_table(stats);
  return kExitOk;
}

struct SplitArgs {
  std::string input;
  std::string format = "jsonl";
  double fraction = 0.9;
  std::uint64_t seed = 7;
  bool stratify = false;
  std::string out;
};

int run_split(const SplitArgs& args) {
  auto records = longdoc::load_corpus(
      args.input, longdoc::parse_corpus_format(args.format));
  auto broad = longdoc::derive_task(records, longdoc::TaskKind::kBroad);
  auto fine = longdoc::derive_task(records, longdoc::TaskKind::kFine);
  longdoc::Vocab vocab;  // ids are irrelevant for splitting
  auto documents = longdoc::make_documents(records, vocab, broad, fine);
  longdoc::SplitOptions options;
  options.stratify_by_broad = args.stratify;
  longdoc::SplitPlan plan =
      longdoc::split_train_test(documents, args.fraction, args.seed, options);
  std::string text = plan.serialize();
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(args.out, text);
    std::cout << "split: " << plan.train_ids.size() << " train / "
              << plan.test_ids.size() << " test -> " << args.out << '\n';
  }
  return kExitOk;
}

struct SynthArgs {
  longdoc::SynthSpec spec;
  std::string out;
};

int run_synth(const SynthArgs& args) {
  auto records = longdoc::synth_corpus(args.spec);
  longdoc::save_corpus_jsonl(records, args.out);
  std::cout << "synth: wrote " << records.size() << " documents, "
            << args.spec.num_classes << " classes -> " << args.out << '\n';
  return kExitOk;
}

struct RunArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> task;
};

int run_run(const RunArgs& args) {
  longdoc::ExperimentConfig config =
      longdoc::load_experiment_config(args.config_path);
  if (args.seed) config.base_seed = *args.seed;
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (args.task) config.task = longdoc::parse_task_kind(*args.task);

  longdoc::ExperimentResult result = longdoc::run_experiment(config);
  longdoc::write_experiment_outputs(result, config.out_dir);
  std::cout << result.report_md_text;
  std::cout << "wrote " << config.out_dir << "/results.csv, "
            << config.out_dir << "/report.md and " << result.traces.size()
            << " trace files\n";
  return kExitOk;
}

struct ReportArgs {
  std::string results_csv;
  std::string out;
};

int run_report(const ReportArgs& args) {
  std::ifstream in(args.results_csv, std::ios::binary);
  if (!in) throw longdoc::DataError("cannot open " + args.results_csv);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string report = longdoc::report_from_csv(buf.str());
  if (args.out.empty()) {
    std::cout << report;
  } else {
    write_text_file(args.out, report);
    std::cout << "wrote " << args.out << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"long-document text classification toolkit"};
  app.require_subcommand(1);

  PreprocessArgs preprocess_args;
  CLI::App* preprocess =
      app.add_subcommand("preprocess", "strip footnotes and print token stats");
  preprocess->add_option("input", preprocess_args.input, "corpus file")
      ->required();
  preprocess->add_option("--format", preprocess_args.format,
                         "input format: jsonl or csv");
  preprocess->add_option("--rules", preprocess_args.rules_path,
                         "removal pattern file (one regex per line)");
  preprocess->add_option("--out", preprocess_args.out, "cleaned JSONL path")
      ->required();

  SplitArgs split_args;
  CLI::App* split =
      app.add_subcommand("split", "produce a seeded train/test split plan");
  split->add_option("input", split_args.input, "corpus file")->required();
  split->add_option("--format", split_args.format, "input format");
  split->add_option("--fraction", split_args.fraction, "train fraction");
  split->add_option("--seed", split_args.seed, "shuffle seed");
  split->add_flag("--stratify", split_args.stratify,
                  "stratify by broad label");
  split->add_option("--out", split_args.out, "plan output path");

  SynthArgs synth_args;
  CLI::App* synth =
      app.add_subcommand("synth", "generate a planted-signal corpus");
  synth->add_option("--classes", synth_args.spec.num_classes, "class count");
  synth->add_option("--docs", synth_args.spec.num_docs, "document count");
  synth->add_option("--min-len", synth_args.spec.min_length,
                    "minimum document length in tokens");
  synth->add_option("--max-len", synth_args.spec.max_length,
                    "maximum document length in tokens");
  synth->add_option("--signal-lo", synth_args.spec.signal_lo,
                    "signal offset range start");
  synth->add_option("--signal-hi", synth_args.spec.signal_hi,
                    "signal offset range end (exclusive)");
  synth->add_option("--signal-count", synth_args.spec.signal_count,
                    "signal occurrences per document");
  synth->add_option("--filler-vocab", synth_args.spec.filler_vocab,
                    "filler token vocabulary size");
  synth->add_option("--seed", synth_args.spec.seed, "generator seed");
  synth->add_option("--out", synth_args.out, "output JSONL path")->required();

  RunArgs run_args;
  CLI::App* run = app.add_subcommand(
      "run", "train and evaluate the configured strategy matrix");
  run->add_option("--config", run_args.config_path, "experiment config file")
      ->required();
  std::uint64_t seed_override = 0;
  std::string out_override, task_override;
  CLI::Option* seed_opt =
      run->add_option("--seed", seed_override, "override the base run seed");
  CLI::Option* out_opt =
      run->add_option("--out", out_override, "override the output directory");
  CLI::Option* task_opt = run->add_option(
      "--task", task_override, "override the task: broad or fine");

  ReportArgs report_args;
  CLI::App* report =
      app.add_subcommand("report", "rebuild report.md from a results.csv");
  report->add_option("results", report_args.results_csv, "results.csv path")
      ->required();
  report->add_option("--out", report_args.out, "markdown output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (preprocess->parsed()) return run_preprocess(preprocess_args);
    if (split->parsed()) return run_split(split_args);
    if (synth->parsed()) return run_synth(synth_args);
    if (run->parsed()) {
      if (seed_opt->count() > 0) run_args.seed = seed_override;
      if (out_opt->count() > 0) run_args.out_dir = out_override;
      if (task_opt->count() > 0) run_args.task = task_override;
      return run_run(run_args);
    }
    if (report->parsed()) return run_report(report_args);
  } catch (const longdoc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const longdoc::TrainError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitTrainingError;
  } catch (const longdoc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitOk;
}
