#ifndef LONGDOC_EXPERIMENT_HPP
#define LONGDOC_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "longdoc/corpus.hpp"
#include "longdoc/metrics.hpp"
#include "longdoc/strategies.hpp"

namespace longdoc {

// Parsed from a key = value config file; `strategy` lines repeat, one per
// matrix entry (e.g. "strategy = best512 i=1").
struct ExperimentConfig {
  std::string corpus_path;
  CorpusFormat format = CorpusFormat::kJsonl;
  std::string ontology_path;  // optional; labels derived from corpus if empty
  TaskKind task = TaskKind::kBroad;
  double train_fraction = 0.9;
  std::uint64_t split_seed = 7;
  std::size_t runs = 5;
  std::uint64_t base_seed = 42;  // run r trains with seed base_seed + r
  std::string out_dir = "out";
  std::size_t vocab_max_size = 20000;
  std::size_t vocab_min_freq = 1;
  std::size_t embed_dim = 64;
  int max_chunks = kDefaultMaxChunks;
  bool shared_encoders = false;
  bool stratify_split = false;
  HyperParams hyper;
  std::vector<StrategyConfig> strategies;  // task/hyper filled at load time

  void validate() const;
};

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source_name);
ExperimentConfig load_experiment_config(const std::string& path);

// One strategy option list, e.g. "stride s=64 max_chunks=6".
StrategyConfig parse_strategy_spec(const std::string& spec);

struct EpochMetrics {
  std::size_t epoch = 1;  // 1-based
  EvalReport report;
};

struct RunTrace {
  std::string technique;
  std::string model;
  std::string task;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 1;

  std::string to_json() const;
};

struct ExperimentResult {
  std::vector<ReportRow> rows;     // one per strategy, matrix order
  std::vector<RunTrace> traces;    // strategy-major, run-minor
  std::string results_csv_text;
  std::string report_md_text;
};

// Train/evaluate every (strategy, run) pair, pick best epochs, average the
// runs. Output depends only on the config and corpus contents.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes results.csv, report.md, and one trace_<slug>_run<r>.json per run.
void write_experiment_outputs(const ExperimentResult& result,
                              const std::string& out_dir);

struct PreprocessStats {
  CorpusStats before;
  CorpusStats after;
  std::size_t records = 0;
};

// Strips footnotes from every record, writes cleaned JSONL, and reports
// before/after token statistics.
PreprocessStats preprocess_corpus(const std::string& in_path,
                                  CorpusFormat format,
                                  const FootnoteRules& rules,
                                  const std::string& out_path);

// Data-statistics table (count, min, max, median, mean before and after).
std::string format_stats_table(const PreprocessStats& stats);

// Rebuilds the markdown report from a previously written results.csv.
std::string report_from_csv(const std::string& csv_text);

std::string technique_slug(const std::string& technique);

}  // namespace longdoc

#endif  // LONGDOC_EXPERIMENT_HPP
