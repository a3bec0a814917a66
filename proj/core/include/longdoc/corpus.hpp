#ifndef LONGDOC_CORPUS_HPP
#define LONGDOC_CORPUS_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "longdoc/tokenizer.hpp"

namespace longdoc {

struct RawRecord {
  std::string id;
  std::string text;
  std::string broad_label;
  std::string fine_label;
};

enum class CorpusFormat { kJsonl, kCsv };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat format);

// One RawRecord per row, file order preserved. Parse failures name the
// line, missing fields name the field and the 0-based record index.
// Record ids must be unique within a file.
std::vector<RawRecord> load_corpus(const std::string& path,
                                   CorpusFormat format);

void save_corpus_jsonl(const std::vector<RawRecord>& records,
                       const std::string& path);

// Ordered removal patterns (ECMAScript regex, case-insensitive). Each rule
// is re-applied until its matches are exhausted, so stripping is idempotent
// for every rule set.
class FootnoteRules {
 public:
  // Bracketed footnote lines plus a trailing numbered-notes section.
  static FootnoteRules defaults();

  // Throws ConfigError on the first pattern that does not compile,
  // before any document is touched.
  static FootnoteRules from_patterns(std::vector<std::string> patterns);

  // One pattern per line; blank lines and '#' comments ignored.
  static FootnoteRules load(const std::string& path);

  const std::vector<std::string>& patterns() const { return patterns_; }

  std::string apply(const std::string& text) const;

  FootnoteRules(FootnoteRules&&) noexcept;
  FootnoteRules& operator=(FootnoteRules&&) noexcept;
  ~FootnoteRules();

 private:
  FootnoteRules();
  struct Impl;
  std::vector<std::string> patterns_;
  std::unique_ptr<Impl> impl_;
};

std::string strip_footnotes(const std::string& text,
                            const FootnoteRules& rules);

enum class TaskKind { kBroad, kFine };

TaskKind parse_task_kind(std::string_view name);
std::string_view task_kind_name(TaskKind kind);

struct TaskSpec {
  TaskKind name = TaskKind::kBroad;
  std::vector<std::string> label_names;  // sorted; index == class id

  std::size_t num_classes() const { return label_names.size(); }
  // -1 when the label is unknown.
  int index_of(std::string_view label) const;
};

// Two-column CSV fine_label,broad_label; every fine label maps to exactly
// one broad label.
class Ontology {
 public:
  static Ontology load(const std::string& path);
  static Ontology from_pairs(
      const std::vector<std::pair<std::string, std::string>>& fine_to_broad);

  const std::string& broad_of(const std::string& fine) const;
  bool has_fine(const std::string& fine) const;

  TaskSpec broad_task() const;
  TaskSpec fine_task() const;

  // Every record's fine label must exist and map to its broad label.
  void validate_records(const std::vector<RawRecord>& records) const;

 private:
  std::map<std::string, std::string> fine_to_broad_;
};

// Task over the labels observed in the records (sorted unique).
TaskSpec derive_task(const std::vector<RawRecord>& records, TaskKind kind);

// Stable alphabetical indices; unknown labels raise DataError naming the
// label and the record id.
std::vector<int> encode_labels(const std::vector<RawRecord>& records,
                               const TaskSpec& task);

struct Document {
  std::string id;
  std::vector<TokenId> token_ids;
  int broad_y = 0;
  int fine_y = 0;

  std::size_t length() const { return token_ids.size(); }
};

std::vector<Document> make_documents(const std::vector<RawRecord>& records,
                                     const Vocab& vocab,
                                     const TaskSpec& broad_task,
                                     const TaskSpec& fine_task);

struct SplitPlan {
  std::uint64_t seed = 0;
  double train_fraction = 0.9;
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted

  std::string serialize() const;
};

struct SplitOptions {
  // Off by default: allocates train slots per broad class by largest
  // remainder so the global train size still equals floor(N * fraction).
  bool stratify_by_broad = false;
};

// Deterministic for a fixed seed; train size = floor(N * fraction),
// remainder to test. Requires at least 2 documents and 0 < fraction < 1.
SplitPlan split_train_test(const std::vector<Document>& documents,
                           double train_fraction, std::uint64_t seed,
                           const SplitOptions& options = {});

struct CorpusStats {
  std::size_t count = 0;
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  std::size_t median_tokens = 0;  // lower-middle element for even counts
  double mean_tokens = 0.0;
};

CorpusStats corpus_stats(const std::vector<std::size_t>& lengths);
CorpusStats corpus_stats(const std::vector<Document>& documents);

}  // namespace longdoc

#endif  // LONGDOC_CORPUS_HPP
