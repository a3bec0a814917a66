#ifndef LONGDOC_METRICS_HPP
#define LONGDOC_METRICS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace longdoc {

struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;  // k x k row-major; rows true, cols predicted

  std::size_t& at(std::size_t true_c, std::size_t pred_c);
  std::size_t at(std::size_t true_c, std::size_t pred_c) const;
  std::size_t total() const;
};

ConfusionMatrix confusion(std::span<const int> y_true,
                          std::span<const int> y_pred, std::size_t k);

struct EvalReport {
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;  // equals accuracy by the weighted identity
  double weighted_f1 = 0.0;
  std::vector<double> per_class_precision;
  std::vector<double> per_class_recall;
  std::vector<double> per_class_f1;
  std::vector<double> support;  // true-class counts
  std::size_t total = 0;

  std::size_t num_classes() const { return support.size(); }
};

// Per-class precision tp/(tp+fp), recall tp/(tp+fn), f1 2pr/(p+r), each 0
// when its denominator is 0; weighted aggregates use true-class support.
EvalReport weighted_metrics(const ConfusionMatrix& cm);

struct BestEpoch {
  std::size_t epoch = 1;  // 1-based
  EvalReport report;
};

// Epoch maximizing weighted F1; ties go to the earliest epoch.
BestEpoch best_epoch(std::span<const EvalReport> trace);

// Elementwise arithmetic mean; all reports must share the class count.
EvalReport average_runs(std::span<const EvalReport> reports);

// Result-table emitters with the column order
// Technique | Model | Accuracy | Precision | F1.
struct ReportRow {
  std::string technique;
  std::string model;
  std::string task;
  std::size_t runs = 1;
  EvalReport report;
};

std::string results_csv(std::span<const ReportRow> rows);
std::string results_markdown(std::span<const ReportRow> rows);
std::vector<ReportRow> parse_results_csv(const std::string& csv_text);

}  // namespace longdoc

#endif  // LONGDOC_METRICS_HPP
