#include "longdoc/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "longdoc/chunker.hpp"
#include "longdoc/errors.hpp"
#include "longdoc/synth.hpp"
#include "longdoc/tokenizer.hpp"

namespace longdoc {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

std::uint64_t parse_u64(const std::string& value, const std::string& where) {
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected an integer, got '" + value + "'");
  }
}

double parse_f64(const std::string& value, const std::string& where) {
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(where + ": expected a boolean, got '" + value + "'");
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

StrategyConfig parse_strategy_spec(const std::string& spec) {
  std::istringstream in(trim(spec));
  std::string kind_name;
  in >> kind_name;
  if (kind_name.empty()) throw ConfigError("empty strategy spec");

  StrategyConfig config;
  config.kind = parse_strategy_kind(kind_name);

  std::string option;
  while (in >> option) {
    auto eq = option.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("strategy option '" + option + "' is not key=value");
    }
    std::string key = option.substr(0, eq);
    std::string value = option.substr(eq + 1);
    if (key == "i") {
      if (config.kind != StrategyKind::kBest512) {
        throw ConfigError("option i= only applies to best512");
      }
      config.chunk_index = static_cast<int>(parse_u64(value, "strategy i"));
    } else if (key == "s") {
      if (config.kind != StrategyKind::kStride) {
        throw ConfigError("option s= only applies to stride");
      }
      config.stride = static_cast<int>(parse_u64(value, "strategy s"));
    } else if (key == "max_chunks") {
      config.max_chunks = static_cast<int>(parse_u64(value, "max_chunks"));
    } else if (key == "shared") {
      config.shared_encoders = parse_bool(value, "strategy shared");
    } else {
      throw ConfigError("unknown strategy option '" + key + "'");
    }
  }
  return config;
}

void ExperimentConfig::validate() const {
  if (corpus_path.empty()) throw ConfigError("config: corpus is required");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("config: train_fraction must lie in (0, 1)");
  }
  if (runs < 1) throw ConfigError("config: runs must be >= 1");
  if (strategies.empty()) {
    throw ConfigError("config: at least one strategy line is required");
  }
  if (vocab_max_size < 4) throw ConfigError("config: vocab_max_size too small");
  hyper.validate();
}

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source_name) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> strategy_specs;
  while (std::getline(in, line)) {
    ++line_no;
    std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ": line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    std::string key = trim(entry.substr(0, eq));
    std::string value = trim(entry.substr(eq + 1));
    std::string where = source_name + ": line " + std::to_string(line_no);

    if (key == "corpus") {
      config.corpus_path = value;
    } else if (key == "format") {
      config.format = parse_corpus_format(value);
    } else if (key == "ontology") {
      config.ontology_path = value;
    } else if (key == "task") {
      config.task = parse_task_kind(value);
    } else if (key == "train_fraction") {
      config.train_fraction = parse_f64(value, where);
    } else if (key == "split_seed") {
      config.split_seed = parse_u64(value, where);
    } else if (key == "runs") {
      config.runs = parse_u64(value, where);
    } else if (key == "seed") {
      config.base_seed = parse_u64(value, where);
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else if (key == "vocab_max_size") {
      config.vocab_max_size = parse_u64(value, where);
    } else if (key == "vocab_min_freq") {
      config.vocab_min_freq = parse_u64(value, where);
    } else if (key == "embed_dim") {
      config.embed_dim = parse_u64(value, where);
    } else if (key == "max_chunks") {
      config.max_chunks = static_cast<int>(parse_u64(value, where));
    } else if (key == "shared_encoders") {
      config.shared_encoders = parse_bool(value, where);
    } else if (key == "stratify_split") {
      config.stratify_split = parse_bool(value, where);
    } else if (key == "batch_size") {
      config.hyper.batch_size = parse_u64(value, where);
    } else if (key == "epochs") {
      config.hyper.epochs = parse_u64(value, where);
    } else if (key == "learning_rate") {
      config.hyper.learning_rate = parse_f64(value, where);
    } else if (key == "beta1") {
      config.hyper.beta1 = parse_f64(value, where);
    } else if (key == "beta2") {
      config.hyper.beta2 = parse_f64(value, where);
    } else if (key == "epsilon") {
      config.hyper.epsilon = parse_f64(value, where);
    } else if (key == "strategy") {
      strategy_specs.push_back(value);
    } else {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }

  for (const std::string& spec : strategy_specs) {
    StrategyConfig strategy = parse_strategy_spec(spec);
    if (strategy.max_chunks == kDefaultMaxChunks) {
      strategy.max_chunks = config.max_chunks;
    }
    strategy.shared_encoders =
        strategy.shared_encoders || config.shared_encoders;
    strategy.embed_dim = config.embed_dim;
    config.strategies.push_back(std::move(strategy));
  }
  config.validate();
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path);
}

std::string RunTrace::to_json() const {
  nlohmann::ordered_json doc;
  doc["technique"] = technique;
  doc["model"] = model;
  doc["task"] = task;
  doc["run"] = run;
  doc["seed"] = seed;
  nlohmann::ordered_json epoch_list = nlohmann::ordered_json::array();
  for (const EpochMetrics& em : epochs) {
    nlohmann::ordered_json e;
    e["epoch"] = em.epoch;
    e["accuracy"] = em.report.accuracy;
    e["weighted_precision"] = em.report.weighted_precision;
    e["weighted_f1"] = em.report.weighted_f1;
    epoch_list.push_back(std::move(e));
  }
  doc["epochs"] = std::move(epoch_list);
  doc["best_epoch"] = best_epoch;
  return doc.dump(2);
}

std::string technique_slug(const std::string& technique) {
  std::string slug;
  for (char c : technique) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      slug.push_back(static_cast<char>(std::tolower(u)));
    } else if (!slug.empty() && slug.back() != '-') {
      slug.push_back('-');
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  return slug;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!fs::exists(config.corpus_path)) {
    throw ConfigError("config: corpus file " + config.corpus_path +
                      " does not exist");
  }
  if (!config.ontology_path.empty() && !fs::exists(config.ontology_path)) {
    throw ConfigError("config: ontology file " + config.ontology_path +
                      " does not exist");
  }

  std::vector<RawRecord> records = load_corpus(config.corpus_path, config.format);
  if (records.size() < 2) {
    throw DataError("corpus " + config.corpus_path + " has fewer than 2 records");
  }

  TaskSpec broad_task;
  TaskSpec fine_task;
  if (!config.ontology_path.empty()) {
    Ontology ontology = Ontology::load(config.ontology_path);
    ontology.validate_records(records);
    broad_task = ontology.broad_task();
    fine_task = ontology.fine_task();
  } else {
    broad_task = derive_task(records, TaskKind::kBroad);
    fine_task = derive_task(records, TaskKind::kFine);
  }

  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const RawRecord& record : records) texts.push_back(record.text);
  Vocab vocab =
      build_vocab(texts, config.vocab_max_size, config.vocab_min_freq);

  std::vector<Document> documents =
      make_documents(records, vocab, broad_task, fine_task);

  SplitOptions split_options;
  split_options.stratify_by_broad = config.stratify_split;
  SplitPlan plan = split_train_test(documents, config.train_fraction,
                                    config.split_seed, split_options);

  std::vector<Document> train_docs;
  std::vector<Document> test_docs;
  {
    std::vector<std::string> train_sorted = plan.train_ids;  // already sorted
    for (const Document& doc : documents) {
      bool in_train = std::binary_search(train_sorted.begin(),
                                         train_sorted.end(), doc.id);
      (in_train ? train_docs : test_docs).push_back(doc);
    }
  }
  if (train_docs.empty() || test_docs.empty()) {
    throw DataError("split produced an empty train or test set");
  }

  const TaskSpec& task =
      config.task == TaskKind::kBroad ? broad_task : fine_task;
  const std::string model_name =
      "mean-embed-d" + std::to_string(config.embed_dim);

  ExperimentResult result;
  for (const StrategyConfig& base : config.strategies) {
    StrategyConfig strategy = base;
    strategy.task = task;
    strategy.hyper = config.hyper;
    const std::string technique = strategy.display_name();

    std::vector<EvalReport> best_reports;
    try {
      for (std::size_t run = 0; run < config.runs; ++run) {
        strategy.hyper.seed = config.base_seed + run;
        TrainedModel model = train(strategy, train_docs, vocab, &test_docs);
        BestEpoch best = best_epoch(model.epoch_trace);
        best_reports.push_back(best.report);

        RunTrace trace;
        trace.technique = technique;
        trace.model = model_name;
        trace.task = std::string(task_kind_name(config.task));
        trace.run = run;
        trace.seed = strategy.hyper.seed;
        for (std::size_t e = 0; e < model.epoch_trace.size(); ++e) {
          trace.epochs.push_back(EpochMetrics{e + 1, model.epoch_trace[e]});
        }
        trace.best_epoch = best.epoch;
        result.traces.push_back(std::move(trace));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrainError("strategy " + technique + " failed: " + e.what());
    }

    ReportRow row;
    row.technique = technique;
    row.model = model_name;
    row.task = std::string(task_kind_name(config.task));
    row.runs = config.runs;
    row.report = average_runs(best_reports);
    result.rows.push_back(std::move(row));
  }

  result.results_csv_text = results_csv(result.rows);
  result.report_md_text = report_from_csv(result.results_csv_text);
  return result;
}

void write_experiment_outputs(const ExperimentResult& result,
                              const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  {
    std::ofstream out(base / "results.csv", std::ios::binary);
    if (!out) throw DataError("cannot write results.csv in " + out_dir);
    out << result.results_csv_text;
  }
  {
    std::ofstream out(base / "report.md", std::ios::binary);
    if (!out) throw DataError("cannot write report.md in " + out_dir);
    out << result.report_md_text;
  }
  for (const RunTrace& trace : result.traces) {
    std::string name = "trace_" + technique_slug(trace.technique) + "_run" +
                       std::to_string(trace.run) + ".json";
    std::ofstream out(base / name, std::ios::binary);
    if (!out) throw DataError("cannot write " + name + " in " + out_dir);
    out << trace.to_json() << '\n';
  }
}

PreprocessStats preprocess_corpus(const std::string& in_path,
                                  CorpusFormat format,
                                  const FootnoteRules& rules,
                                  const std::string& out_path) {
  std::vector<RawRecord> records = load_corpus(in_path, format);
  if (records.empty()) throw DataError(in_path + " is empty");

  std::vector<std::size_t> before_lengths;
  std::vector<std::size_t> after_lengths;
  before_lengths.reserve(records.size());
  after_lengths.reserve(records.size());
  for (RawRecord& record : records) {
    before_lengths.push_back(tokenize(record.text).size());
    record.text = rules.apply(record.text);
    after_lengths.push_back(tokenize(record.text).size());
  }
  save_corpus_jsonl(records, out_path);

  PreprocessStats stats;
  stats.records = records.size();
  stats.before = corpus_stats(before_lengths);
  stats.after = corpus_stats(after_lengths);
  return stats;
}

std::string format_stats_table(const PreprocessStats& stats) {
  std::ostringstream out;
  auto row = [&](const std::string& metric, const std::string& value) {
    out << metric;
    for (std::size_t pad = metric.size(); pad < 44; ++pad) out << ' ';
    out << value << '\n';
  };
  row("Metric", "Value");
  row("Dataset Size", std::to_string(stats.records));
  row("Min # Tokens", std::to_string(stats.before.min_tokens));
  row("Max # Tokens", std::to_string(stats.before.max_tokens));
  row("Median # Tokens", std::to_string(stats.before.median_tokens));
  row("Mean # Tokens", fixed(stats.before.mean_tokens, 2));
  row("Min # Tokens After Pre-Processing",
      std::to_string(stats.after.min_tokens));
  row("Max # Tokens After Pre-Processing",
      std::to_string(stats.after.max_tokens));
  row("Median # Tokens After Pre-Processing",
      std::to_string(stats.after.median_tokens));
  row("Mean # Tokens After Pre-Processing", fixed(stats.after.mean_tokens, 2));
  return out.str();
}

std::string report_from_csv(const std::string& csv_text) {
  std::vector<ReportRow> rows = parse_results_csv(csv_text);
  std::ostringstream out;
  std::string task = rows.empty() ? std::string("broad") : rows.front().task;
  std::size_t runs = rows.empty() ? 1 : rows.front().runs;
  out << "# Results (" << task << " task, " << runs << " run"
      << (runs == 1 ? "" : "s") << " averaged)\n\n";
  out << results_markdown(rows);
  return out.str();
}

}  // namespace longdoc
