#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "longdoc/errors.hpp"
#include "longdoc/experiment.hpp"
#include "longdoc/synth.hpp"

using namespace longdoc;
namespace fs = std::filesystem;

namespace {

std::string data_path(const std::string& name) {
  return std::string(LONGDOC_TEST_DATA_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Small planted-signal corpus written to disk for config-driven runs.
std::string synth_file(const fs::path& dir, std::size_t docs,
                       std::size_t classes, std::uint64_t seed) {
  SynthSpec spec;
  spec.num_classes = classes;
  spec.num_docs = docs;
  spec.min_length = 300;
  spec.max_length = 900;
  spec.signal_lo = 0;
  spec.signal_hi = 256;
  spec.seed = seed;
  auto records = synth_corpus(spec);
  std::string path = (dir / "synth.jsonl").string();
  save_corpus_jsonl(records, path);
  return path;
}

}  // namespace

TEST_CASE("parse_strategy_spec reads kinds and options") {
  StrategyConfig best = parse_strategy_spec("best512 i=3");
  CHECK(best.kind == StrategyKind::kBest512);
  CHECK(best.chunk_index == 3);

  StrategyConfig stride = parse_strategy_spec("stride s=128 max_chunks=4");
  CHECK(stride.kind == StrategyKind::kStride);
  CHECK(stride.stride == 128);
  CHECK(stride.max_chunks == 4);

  CHECK_THROWS_AS(parse_strategy_spec("best512 s=64"), ConfigError);
  CHECK_THROWS_AS(parse_strategy_spec("stride i=1"), ConfigError);
  CHECK_THROWS_AS(parse_strategy_spec("unknownkind"), ConfigError);
  CHECK_THROWS_AS(parse_strategy_spec("best512 garbage"), ConfigError);
}

TEST_CASE("experiment configs parse and validate") {
  std::string text =
      "# demo config\n"
      "corpus = corpus.jsonl\n"
      "task = fine\n"
      "runs = 2\n"
      "learning_rate = 0.05\n"
      "embed_dim = 24\n"
      "strategy = best512 i=1\n"
      "strategy = lsm\n";
  ExperimentConfig config = parse_experiment_config(text, "demo");
  CHECK(config.corpus_path == "corpus.jsonl");
  CHECK(config.task == TaskKind::kFine);
  CHECK(config.runs == 2);
  REQUIRE(config.strategies.size() == 2);
  CHECK(config.strategies[0].kind == StrategyKind::kBest512);
  CHECK(config.strategies[1].kind == StrategyKind::kLsm);
  CHECK(config.strategies[0].embed_dim == 24);

  CHECK_THROWS_AS(parse_experiment_config("corpus = x\n", "demo"),
                  ConfigError);  // no strategies
  CHECK_THROWS_AS(parse_experiment_config("strategy = lsm\n", "demo"),
                  ConfigError);  // no corpus
  CHECK_THROWS_AS(
      parse_experiment_config("corpus = x\nwat = 1\nstrategy = lsm\n", "demo"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config("corpus = x\nbroken line\nstrategy = lsm\n",
                              "demo"),
      ConfigError);

  std::string msg;
  try {
    parse_experiment_config("corpus = x\nruns = abc\nstrategy = lsm\n", "demo");
  } catch (const ConfigError& e) {
    msg = e.what();
  }
  CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("synth corpora are deterministic and carry the planted signal") {
  SynthSpec spec;
  spec.num_classes = 4;
  spec.num_docs = 40;
  spec.min_length = 300;
  spec.max_length = 600;
  spec.signal_lo = 64;
  spec.signal_hi = 256;
  spec.signal_count = 2;
  spec.seed = 9;

  auto a = synth_corpus(spec);
  auto b = synth_corpus(spec);
  REQUIRE(a.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].broad_label == a[i].fine_label);
  }

  std::map<std::string, int> per_class;
  for (std::size_t i = 0; i < a.size(); ++i) {
    per_class[a[i].broad_label]++;
    std::istringstream words(a[i].text);
    std::string token;
    std::size_t pos = 0;
    std::size_t signals = 0;
    while (words >> token) {
      if (token.rfind("sig", 0) == 0) {
        ++signals;
        CHECK(pos >= spec.signal_lo);
        CHECK(pos < spec.signal_hi);
        CHECK(token == "sig" + a[i].broad_label.substr(5));
      }
      ++pos;
    }
    CHECK(signals == spec.signal_count);
    CHECK(pos >= spec.min_length);
    CHECK(pos <= spec.max_length);
  }
  for (const auto& [cls, count] : per_class) CHECK(count == 10);

  SynthSpec bad = spec;
  bad.num_docs = 2;
  CHECK_THROWS_AS(synth_corpus(bad), ConfigError);
  bad = spec;
  bad.signal_lo = bad.min_length;
  CHECK_THROWS_AS(synth_corpus(bad), ConfigError);
}

TEST_CASE("preprocess strips footnotes and reports shrinking means") {
  fs::path dir = fresh_dir("longdoc_test_preprocess");
  std::string out_path = (dir / "clean.jsonl").string();
  PreprocessStats stats =
      preprocess_corpus(data_path("footnotes.jsonl"), CorpusFormat::kJsonl,
                        FootnoteRules::defaults(), out_path);
  CHECK(stats.records == 3);
  CHECK(stats.after.mean_tokens < stats.before.mean_tokens);

  auto cleaned = load_corpus(out_path, CorpusFormat::kJsonl);
  REQUIRE(cleaned.size() == 3);
  CHECK(cleaned[0].text.find("[Footnote") == std::string::npos);
  CHECK(cleaned[1].text == "No notes in this one at all.");

  std::string table = format_stats_table(stats);
  CHECK(table.find("Dataset Size") != std::string::npos);
  CHECK(table.find("Mean # Tokens After Pre-Processing") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("preprocess keeps footnote-free corpora byte-identical") {
  fs::path dir = fresh_dir("longdoc_test_preprocess_clean");
  std::string out_path = (dir / "clean.jsonl").string();
  PreprocessStats stats = preprocess_corpus(
      data_path("tiny.jsonl"), CorpusFormat::kJsonl,
      FootnoteRules::defaults(), out_path);
  auto before = load_corpus(data_path("tiny.jsonl"), CorpusFormat::kJsonl);
  auto after = load_corpus(out_path, CorpusFormat::kJsonl);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].text == after[i].text);
  }
  CHECK(stats.before.mean_tokens == stats.after.mean_tokens);
  fs::remove_all(dir);
}

TEST_CASE("run_experiment produces one deterministic row per strategy") {
  fs::path dir = fresh_dir("longdoc_test_run");
  std::string corpus = synth_file(dir, 50, 3, 17);

  ExperimentConfig config;
  config.corpus_path = corpus;
  config.train_fraction = 0.8;
  config.split_seed = 5;
  config.runs = 1;
  config.base_seed = 21;
  config.embed_dim = 8;
  config.hyper.epochs = 2;
  config.hyper.learning_rate = 0.05;
  config.strategies = {parse_strategy_spec("best512 i=1"),
                       parse_strategy_spec("summarization512")};
  for (auto& s : config.strategies) s.embed_dim = 8;

  ExperimentResult first = run_experiment(config);
  REQUIRE(first.rows.size() == 2);
  CHECK(first.rows[0].technique == "Best-512[c1]");
  CHECK(first.rows[1].technique == "Summarization-512");
  CHECK(first.traces.size() == 2);
  CHECK(first.traces[0].epochs.size() == 2);

  ExperimentResult second = run_experiment(config);
  CHECK(first.results_csv_text == second.results_csv_text);
  CHECK(first.report_md_text == second.report_md_text);
  fs::remove_all(dir);
}

TEST_CASE("a strategy row averages its per-run best epochs") {
  fs::path dir = fresh_dir("longdoc_test_avg");
  std::string corpus = synth_file(dir, 40, 2, 23);

  ExperimentConfig config;
  config.corpus_path = corpus;
  config.train_fraction = 0.8;
  config.runs = 3;
  config.base_seed = 40;
  config.embed_dim = 8;
  config.hyper.epochs = 3;
  config.hyper.learning_rate = 0.05;
  config.strategies = {parse_strategy_spec("best512 i=1")};
  config.strategies[0].embed_dim = 8;

  ExperimentResult result = run_experiment(config);
  REQUIRE(result.traces.size() == 3);
  double sum = 0.0;
  for (const RunTrace& trace : result.traces) {
    CHECK(trace.seed == 40 + trace.run);
    double best = 0.0;
    for (const EpochMetrics& em : trace.epochs) {
      best = std::max(best, em.report.weighted_f1);
    }
    CHECK(trace.epochs[trace.best_epoch - 1].report.weighted_f1 ==
          doctest::Approx(best));
    sum += best;
  }
  CHECK(result.rows[0].report.weighted_f1 == doctest::Approx(sum / 3.0));
  fs::remove_all(dir);
}

TEST_CASE("write_experiment_outputs is byte-stable across reruns") {
  fs::path dir = fresh_dir("longdoc_test_outputs");
  std::string corpus = synth_file(dir, 30, 2, 31);

  ExperimentConfig config;
  config.corpus_path = corpus;
  config.train_fraction = 0.8;
  config.runs = 2;
  config.embed_dim = 8;
  config.hyper.epochs = 2;
  config.hyper.learning_rate = 0.05;
  config.strategies = {parse_strategy_spec("concat512")};
  config.strategies[0].embed_dim = 8;

  fs::path out_a = dir / "out_a";
  fs::path out_b = dir / "out_b";
  write_experiment_outputs(run_experiment(config), out_a.string());
  write_experiment_outputs(run_experiment(config), out_b.string());

  CHECK(read_file(out_a / "results.csv") == read_file(out_b / "results.csv"));
  CHECK(read_file(out_a / "report.md") == read_file(out_b / "report.md"));
  CHECK(read_file(out_a / "trace_concat-512_run0.json") ==
        read_file(out_b / "trace_concat-512_run0.json"));
  CHECK(read_file(out_a / "trace_concat-512_run1.json") ==
        read_file(out_b / "trace_concat-512_run1.json"));

  std::string report = report_from_csv(read_file(out_a / "results.csv"));
  CHECK(report.find("| Concat-512 |") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("technique slugs are filesystem-friendly") {
  CHECK(technique_slug("Best-512[c1]") == "best-512-c1");
  CHECK(technique_slug("Stride-64") == "stride-64");
  CHECK(technique_slug("LSM") == "lsm");
}

TEST_CASE("an ontology pins the label space for the run") {
  ExperimentConfig config;
  config.corpus_path = data_path("tiny.jsonl");
  config.ontology_path = data_path("ontology.csv");
  config.task = TaskKind::kBroad;
  config.train_fraction = 0.7;
  config.runs = 1;
  config.embed_dim = 8;
  config.hyper.epochs = 1;
  config.strategies = {parse_strategy_spec("best512 i=1")};
  config.strategies[0].embed_dim = 8;

  ExperimentResult result = run_experiment(config);
  REQUIRE(result.rows.size() == 1);
  CHECK(result.rows[0].task == "broad");
}

TEST_CASE("a missing corpus path is a configuration error") {
  ExperimentConfig config;
  config.corpus_path = "/nonexistent/corpus.jsonl";
  config.strategies = {parse_strategy_spec("lsm")};
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
}

TEST_CASE("a diverging strategy fails loudly with its name") {
  fs::path dir = fresh_dir("longdoc_test_trainfail");
  std::string corpus = synth_file(dir, 30, 2, 37);

  ExperimentConfig config;
  config.corpus_path = corpus;
  config.train_fraction = 0.8;
  config.runs = 1;
  config.embed_dim = 8;
  config.hyper.epochs = 1;
  config.hyper.learning_rate = 1e300;  // parameters overflow on batch one
  config.strategies = {parse_strategy_spec("best512 i=1")};
  config.strategies[0].embed_dim = 8;

  std::string msg;
  try {
    run_experiment(config);
  } catch (const TrainError& e) {
    msg = e.what();
  }
  CHECK(msg.find("Best-512[c1]") != std::string::npos);
  fs::remove_all(dir);
}

#ifdef LONGDOC_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(LONGDOC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("the cli maps error categories onto exit codes") {
  fs::path dir = fresh_dir("longdoc_test_cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 1);                               // missing subcommand
  CHECK(run_cli("run --config /nonexistent.cfg") == 1);  // config error
  CHECK(run_cli("preprocess /nonexistent.jsonl --out " +
                (dir / "x.jsonl").string()) == 2);       // data error

  // a full little pipeline: synth -> split -> preprocess -> run -> report
  std::string corpus = (dir / "c.jsonl").string();
  CHECK(run_cli("synth --classes 3 --docs 30 --min-len 200 --max-len 400 "
                "--signal-lo 0 --signal-hi 128 --seed 2 --out " + corpus) == 0);
  CHECK(run_cli("split " + corpus + " --fraction 0.8 --seed 3 --out " +
                (dir / "plan.txt").string()) == 0);
  CHECK(run_cli("preprocess " + corpus + " --out " +
                (dir / "clean.jsonl").string()) == 0);

  std::ofstream cfg(dir / "exp.cfg");
  cfg << "corpus = " << corpus << "\n"
      << "train_fraction = 0.8\n"
      << "runs = 1\n"
      << "embed_dim = 8\n"
      << "epochs = 1\n"
      << "learning_rate = 0.05\n"
      << "out_dir = " << (dir / "out").string() << "\n"
      << "strategy = best512 i=1\n";
  cfg.close();
  CHECK(run_cli("run --config " + (dir / "exp.cfg").string()) == 0);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK(run_cli("report " + (dir / "out" / "results.csv").string() +
                " --out " + (dir / "report2.md").string()) == 0);
  CHECK(fs::exists(dir / "report2.md"));

  // a missing rules file falls back to the built-in defaults
  CHECK(run_cli("preprocess " + corpus + " --rules /nonexistent/rules.txt "
                "--out " + (dir / "clean2.jsonl").string()) == 0);

  // training failures exit with code 3
  std::ofstream bad(dir / "bad.cfg");
  bad << "corpus = " << corpus << "\n"
      << "train_fraction = 0.8\n"
      << "runs = 1\n"
      << "embed_dim = 8\n"
      << "epochs = 1\n"
      << "learning_rate = 1e300\n"
      << "strategy = best512 i=1\n";
  bad.close();
  CHECK(run_cli("run --config " + (dir / "bad.cfg").string()) == 3);
  fs::remove_all(dir);
}
#endif  // LONGDOC_CLI_PATH
