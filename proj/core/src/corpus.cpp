#include "longdoc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "longdoc/errors.hpp"
#include "longdoc/rng.hpp"

namespace longdoc {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 1;  // physical line the record starts on
};

// RFC-4180 style: quoted fields may contain commas, newlines, and doubled
// quotes.
std::vector<CsvRecord> parse_csv(const std::string& text,
                                 const std::string& path) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    CsvRecord record;
    record.line = line;
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (!done) {
      if (i >= n) {
        if (in_quotes) {
          throw DataError(path + ": line " + std::to_string(line) +
                          ": unterminated quoted field");
        }
        break;
      }
      char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
      } else if (c == '"') {
        in_quotes = true;
        ++i;
      } else if (c == ',') {
        record.fields.push_back(std::move(field));
        field.clear();
        ++i;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
        ++i;
        ++line;
        done = true;
      } else {
        field.push_back(c);
        ++i;
      }
    }
    record.fields.push_back(std::move(field));
    // skip rows that are entirely empty (e.g. trailing newline)
    bool all_empty = std::all_of(record.fields.begin(), record.fields.end(),
                                 [](const std::string& f) { return f.empty(); });
    if (!all_empty) records.push_back(std::move(record));
  }
  return records;
}

const char* kRequiredFields[] = {"id", "text", "broad_label", "fine_label"};

std::vector<RawRecord> load_jsonl(const std::string& path) {
  std::string text = read_file(path);
  std::vector<RawRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ": line " + std::to_string(line_no) +
                      ": parse error: " + e.what());
    }
    std::size_t index = records.size();
    RawRecord record;
    for (const char* field : kRequiredFields) {
      if (!row.contains(field) || !row[field].is_string()) {
        throw DataError(path + ": record " + std::to_string(index) +
                        ": missing " + field);
      }
    }
    record.id = row["id"].get<std::string>();
    record.text = row["text"].get<std::string>();
    record.broad_label = row["broad_label"].get<std::string>();
    record.fine_label = row["fine_label"].get<std::string>();
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<RawRecord> load_csv_records(const std::string& path) {
  std::string text = read_file(path);
  std::vector<CsvRecord> rows = parse_csv(text, path);
  if (rows.empty()) return {};

  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t c = 0; c < rows[0].fields.size(); ++c) {
    columns[rows[0].fields[c]] = c;
  }
  for (const char* field : kRequiredFields) {
    if (columns.find(field) == columns.end()) {
      throw DataError(path + ": line " + std::to_string(rows[0].line) +
                      ": header is missing column " + field);
    }
  }

  std::vector<RawRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::size_t index = records.size();
    auto get = [&](const char* field) -> std::string {
      std::size_t c = columns[field];
      if (c >= rows[r].fields.size()) {
        throw DataError(path + ": record " + std::to_string(index) +
                        ": missing " + field);
      }
      return rows[r].fields[c];
    };
    RawRecord record;
    record.id = get("id");
    record.text = get("text");
    record.broad_label = get("broad_label");
    record.fine_label = get("fine_label");
    records.push_back(std::move(record));
  }
  return records;
}

void validate_records(const std::vector<RawRecord>& records,
                      const std::string& path) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawRecord& record = records[i];
    if (record.id.empty()) {
      throw DataError(path + ": record " + std::to_string(i) + ": missing id");
    }
    if (record.broad_label.empty()) {
      throw DataError(path + ": record " + std::to_string(i) +
                      ": missing broad_label");
    }
    if (record.fine_label.empty()) {
      throw DataError(path + ": record " + std::to_string(i) +
                      ": missing fine_label");
    }
    if (!seen.insert(record.id).second) {
      throw DataError(path + ": record " + std::to_string(i) +
                      ": duplicate id '" + record.id + "'");
    }
  }
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "csv") return CorpusFormat::kCsv;
  throw ConfigError("unknown corpus format '" + std::string(name) +
                    "' (expected jsonl or csv)");
}

std::string_view corpus_format_name(CorpusFormat format) {
  return format == CorpusFormat::kJsonl ? "jsonl" : "csv";
}

std::vector<RawRecord> load_corpus(const std::string& path,
                                   CorpusFormat format) {
  std::vector<RawRecord> records = format == CorpusFormat::kJsonl
                                       ? load_jsonl(path)
                                       : load_csv_records(path);
  validate_records(records, path);
  return records;
}

void save_corpus_jsonl(const std::vector<RawRecord>& records,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const RawRecord& record : records) {
    nlohmann::ordered_json row;
    row["id"] = record.id;
    row["text"] = record.text;
    row["broad_label"] = record.broad_label;
    row["fine_label"] = record.fine_label;
    out << row.dump() << '\n';
  }
}

struct FootnoteRules::Impl {
  std::vector<std::regex> rules;
};

FootnoteRules::FootnoteRules() : impl_(std::make_unique<Impl>()) {}
FootnoteRules::FootnoteRules(FootnoteRules&&) noexcept = default;
FootnoteRules& FootnoteRules::operator=(FootnoteRules&&) noexcept = default;
FootnoteRules::~FootnoteRules() = default;

FootnoteRules FootnoteRules::defaults() {
  return from_patterns({
      // a bracketed footnote block and the remainder of its line
      R"(\[\s*footnote[^\]]*\][^\n]*(\n|$))",
      // a trailing notes/footnotes section
      R"((^|\n)[ \t]*(footnotes|notes)[ \t]*:?[ \t]*\n[\s\S]*$)",
  });
}

FootnoteRules FootnoteRules::from_patterns(std::vector<std::string> patterns) {
  FootnoteRules rules;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    try {
      rules.impl_->rules.emplace_back(
          patterns[i], std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ConfigError("footnote rule " + std::to_string(i) +
                        " does not compile: " + e.what());
    }
  }
  rules.patterns_ = std::move(patterns);
  return rules;
}

FootnoteRules FootnoteRules::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file " + path);
  std::vector<std::string> patterns;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    patterns.push_back(line);
  }
  return from_patterns(std::move(patterns));
}

std::string FootnoteRules::apply(const std::string& text) const {
  // A removal can expose new matches, including for earlier rules in the
  // list, so sweep the whole ordered list until nothing changes. Every
  // effective pass shortens the text, which bounds the loop.
  std::string current = text;
  for (;;) {
    std::string next = current;
    for (const std::regex& rule : impl_->rules) {
      for (;;) {
        std::string replaced = std::regex_replace(next, rule, "");
        if (replaced == next) break;
        next = std::move(replaced);
      }
    }
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

std::string strip_footnotes(const std::string& text,
                            const FootnoteRules& rules) {
  return rules.apply(text);
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "broad") return TaskKind::kBroad;
  if (name == "fine") return TaskKind::kFine;
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected broad or fine)");
}

std::string_view task_kind_name(TaskKind kind) {
  return kind == TaskKind::kBroad ? "broad" : "fine";
}

int TaskSpec::index_of(std::string_view label) const {
  auto it = std::find(label_names.begin(), label_names.end(), label);
  if (it == label_names.end()) return -1;
  return static_cast<int>(it - label_names.begin());
}

Ontology Ontology::load(const std::string& path) {
  std::string text = read_file(path);
  std::vector<CsvRecord> rows = parse_csv(text, path);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].fields.size() < 2) {
      throw DataError(path + ": line " + std::to_string(rows[r].line) +
                      ": expected fine_label,broad_label");
    }
    if (r == 0 && rows[r].fields[0] == "fine_label") continue;  // header
    pairs.emplace_back(rows[r].fields[0], rows[r].fields[1]);
  }
  return from_pairs(pairs);
}

Ontology Ontology::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& fine_to_broad) {
  Ontology ontology;
  for (const auto& [fine, broad] : fine_to_broad) {
    if (fine.empty() || broad.empty()) {
      throw DataError("ontology entries must be non-empty");
    }
    auto [it, inserted] = ontology.fine_to_broad_.emplace(fine, broad);
    if (!inserted && it->second != broad) {
      throw DataError("fine label '" + fine +
                      "' maps to more than one broad label");
    }
  }
  return ontology;
}

const std::string& Ontology::broad_of(const std::string& fine) const {
  auto it = fine_to_broad_.find(fine);
  if (it == fine_to_broad_.end()) {
    throw DataError("fine label '" + fine + "' is not in the ontology");
  }
  return it->second;
}

bool Ontology::has_fine(const std::string& fine) const {
  return fine_to_broad_.count(fine) > 0;
}

TaskSpec Ontology::broad_task() const {
  std::vector<std::string> names;
  for (const auto& [fine, broad] : fine_to_broad_) names.push_back(broad);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return TaskSpec{TaskKind::kBroad, std::move(names)};
}

TaskSpec Ontology::fine_task() const {
  std::vector<std::string> names;  // map keys are already sorted
  for (const auto& [fine, broad] : fine_to_broad_) names.push_back(fine);
  return TaskSpec{TaskKind::kFine, std::move(names)};
}

void Ontology::validate_records(const std::vector<RawRecord>& records) const {
  for (const RawRecord& record : records) {
    auto it = fine_to_broad_.find(record.fine_label);
    if (it == fine_to_broad_.end()) {
      throw DataError("record '" + record.id + "': fine label '" +
                      record.fine_label + "' is not in the ontology");
    }
    if (it->second != record.broad_label) {
      throw DataError("record '" + record.id + "': fine label '" +
                      record.fine_label + "' maps to '" + it->second +
                      "', not '" + record.broad_label + "'");
    }
  }
}

TaskSpec derive_task(const std::vector<RawRecord>& records, TaskKind kind) {
  std::vector<std::string> names;
  for (const RawRecord& record : records) {
    names.push_back(kind == TaskKind::kBroad ? record.broad_label
                                             : record.fine_label);
  }
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return TaskSpec{kind, std::move(names)};
}

std::vector<int> encode_labels(const std::vector<RawRecord>& records,
                               const TaskSpec& task) {
  std::unordered_map<std::string_view, int> index;
  for (std::size_t i = 0; i < task.label_names.size(); ++i) {
    index.emplace(task.label_names[i], static_cast<int>(i));
  }
  std::vector<int> out;
  out.reserve(records.size());
  for (const RawRecord& record : records) {
    const std::string& label = task.name == TaskKind::kBroad
                                   ? record.broad_label
                                   : record.fine_label;
    auto it = index.find(label);
    if (it == index.end()) {
      throw DataError("record '" + record.id + "': unknown label '" + label +
                      "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<Document> make_documents(const std::vector<RawRecord>& records,
                                     const Vocab& vocab,
                                     const TaskSpec& broad_task,
                                     const TaskSpec& fine_task) {
  std::vector<int> broad_y = encode_labels(records, broad_task);
  std::vector<int> fine_y = encode_labels(records, fine_task);
  std::vector<Document> documents;
  documents.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Document doc;
    doc.id = records[i].id;
    doc.token_ids = encode(tokenize(records[i].text), vocab, false).ids;
    doc.broad_y = broad_y[i];
    doc.fine_y = fine_y[i];
    documents.push_back(std::move(doc));
  }
  return documents;
}

std::string SplitPlan::serialize() const {
  std::ostringstream out;
  out << "seed=" << seed << '\n';
  out << "train_fraction=" << train_fraction << '\n';
  out << "train:" << '\n';
  for (const std::string& id : train_ids) out << id << '\n';
  out << "test:" << '\n';
  for (const std::string& id : test_ids) out << id << '\n';
  return out.str();
}

SplitPlan split_train_test(const std::vector<Document>& documents,
                           double train_fraction, std::uint64_t seed,
                           const SplitOptions& options) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  }
  if (documents.size() < 2) {
    throw DataError("need at least 2 documents to split");
  }
  const std::size_t n = documents.size();
  const std::size_t train_n = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction));

  Rng rng(seed);
  std::vector<std::size_t> train_idx;

  if (!options.stratify_by_broad) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    train_idx.assign(order.begin(), order.begin() + train_n);
  } else {
    // Per-class quotas by largest remainder; the global train size still
    // equals floor(n * fraction).
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[documents[i].broad_y].push_back(i);

    std::vector<std::pair<double, int>> remainders;  // (-remainder, class)
    std::map<int, std::size_t> quota;
    std::size_t assigned = 0;
    for (const auto& [cls, members] : groups) {
      double exact = static_cast<double>(members.size()) * train_fraction;
      std::size_t q = static_cast<std::size_t>(std::floor(exact));
      quota[cls] = q;
      assigned += q;
      remainders.emplace_back(-(exact - static_cast<double>(q)), cls);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t k = 0; assigned < train_n && k < remainders.size(); ++k) {
      int cls = remainders[k].second;
      if (quota[cls] < groups[cls].size()) {
        ++quota[cls];
        ++assigned;
      }
    }
    for (auto& [cls, members] : groups) {
      rng.shuffle(members);
      std::size_t q = std::min(quota[cls], members.size());
      train_idx.insert(train_idx.end(), members.begin(), members.begin() + q);
    }
  }

  std::vector<std::uint8_t> in_train(n, 0);
  for (std::size_t i : train_idx) in_train[i] = 1;

  SplitPlan plan;
  plan.seed = seed;
  plan.train_fraction = train_fraction;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? plan.train_ids : plan.test_ids).push_back(documents[i].id);
  }
  std::sort(plan.train_ids.begin(), plan.train_ids.end());
  std::sort(plan.test_ids.begin(), plan.test_ids.end());
  return plan;
}

CorpusStats corpus_stats(const std::vector<std::size_t>& lengths) {
  if (lengths.empty()) throw DataError("corpus_stats: empty corpus");
  std::vector<std::size_t> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  CorpusStats stats;
  stats.count = sorted.size();
  stats.min_tokens = sorted.front();
  stats.max_tokens = sorted.back();
  stats.median_tokens = sorted[(sorted.size() - 1) / 2];  // lower middle
  double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  stats.mean_tokens = sum / static_cast<double>(sorted.size());
  return stats;
}

CorpusStats corpus_stats(const std::vector<Document>& documents) {
  std::vector<std::size_t> lengths;
  lengths.reserve(documents.size());
  for (const Document& doc : documents) lengths.push_back(doc.length());
  return corpus_stats(lengths);
}

}  // namespace longdoc
