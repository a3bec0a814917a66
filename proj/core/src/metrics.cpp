#include "longdoc/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "longdoc/errors.hpp"

namespace longdoc {

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace

std::size_t& ConfusionMatrix::at(std::size_t true_c, std::size_t pred_c) {
  return counts[true_c * num_classes + pred_c];
}

std::size_t ConfusionMatrix::at(std::size_t true_c, std::size_t pred_c) const {
  return counts[true_c * num_classes + pred_c];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t sum = 0;
  for (std::size_t c : counts) sum += c;
  return sum;
}

ConfusionMatrix confusion(std::span<const int> y_true,
                          std::span<const int> y_pred, std::size_t k) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion: y_true and y_pred lengths differ");
  }
  ConfusionMatrix cm;
  cm.num_classes = k;
  cm.counts.assign(k * k, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    int t = y_true[i];
    int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k ||
        static_cast<std::size_t>(p) >= k) {
      throw DataError("confusion: class index out of range at position " +
                      std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

EvalReport weighted_metrics(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes;
  const std::size_t total = cm.total();
  if (total == 0) throw DataError("weighted_metrics: empty confusion matrix");

  EvalReport report;
  report.total = total;
  report.per_class_precision.assign(k, 0.0);
  report.per_class_recall.assign(k, 0.0);
  report.per_class_f1.assign(k, 0.0);
  report.support.assign(k, 0.0);

  std::size_t trace = 0;
  double weighted_precision_sum = 0.0;
  double weighted_f1_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = cm.at(c, c);
    std::size_t support = 0;   // row sum: true class c
    std::size_t predicted = 0; // column sum: predicted class c
    for (std::size_t j = 0; j < k; ++j) {
      support += cm.at(c, j);
      predicted += cm.at(j, c);
    }
    trace += tp;
    report.support[c] = static_cast<double>(support);

    double precision =
        predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted)
                      : 0.0;
    double recall =
        support > 0 ? static_cast<double>(tp) / static_cast<double>(support)
                    : 0.0;
    // 2pr/(p+r) reduces to 2*tp/(predicted+support)
    double f1 = (predicted + support) > 0
                    ? 2.0 * static_cast<double>(tp) /
                          static_cast<double>(predicted + support)
                    : 0.0;
    report.per_class_precision[c] = precision;
    report.per_class_recall[c] = recall;
    report.per_class_f1[c] = f1;

    weighted_precision_sum += static_cast<double>(support) * precision;
    weighted_f1_sum += static_cast<double>(support) * f1;
  }

  const double denom = static_cast<double>(total);
  report.accuracy = static_cast<double>(trace) / denom;
  // sum_c support_c * (tp_c / support_c) telescopes to the trace, which makes
  // weighted recall identical to accuracy, exactly
  report.weighted_recall = static_cast<double>(trace) / denom;
  report.weighted_precision = weighted_precision_sum / denom;
  report.weighted_f1 = weighted_f1_sum / denom;
  return report;
}

BestEpoch best_epoch(std::span<const EvalReport> trace) {
  if (trace.empty()) throw DataError("best_epoch: empty trace");
  std::size_t best = 0;
  for (std::size_t e = 1; e < trace.size(); ++e) {
    if (trace[e].weighted_f1 > trace[best].weighted_f1) best = e;
  }
  return BestEpoch{best + 1, trace[best]};
}

EvalReport average_runs(std::span<const EvalReport> reports) {
  if (reports.empty()) throw DataError("average_runs: no reports");
  const std::size_t k = reports.front().num_classes();
  for (const EvalReport& r : reports) {
    if (r.num_classes() != k) {
      throw DataError("average_runs: reports have mixed class counts");
    }
  }
  EvalReport avg;
  avg.per_class_precision.assign(k, 0.0);
  avg.per_class_recall.assign(k, 0.0);
  avg.per_class_f1.assign(k, 0.0);
  avg.support.assign(k, 0.0);
  double count = static_cast<double>(reports.size());
  std::size_t total = 0;
  for (const EvalReport& r : reports) {
    avg.accuracy += r.accuracy;
    avg.weighted_precision += r.weighted_precision;
    avg.weighted_recall += r.weighted_recall;
    avg.weighted_f1 += r.weighted_f1;
    total += r.total;
    for (std::size_t c = 0; c < k; ++c) {
      avg.per_class_precision[c] += r.per_class_precision[c];
      avg.per_class_recall[c] += r.per_class_recall[c];
      avg.per_class_f1[c] += r.per_class_f1[c];
      avg.support[c] += r.support[c];
    }
  }
  avg.accuracy /= count;
  avg.weighted_precision /= count;
  avg.weighted_recall /= count;
  avg.weighted_f1 /= count;
  for (std::size_t c = 0; c < k; ++c) {
    avg.per_class_precision[c] /= count;
    avg.per_class_recall[c] /= count;
    avg.per_class_f1[c] /= count;
    avg.support[c] /= count;
  }
  avg.total = total / reports.size();
  return avg;
}

std::string results_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "technique,model,task,runs,accuracy,weighted_precision,weighted_f1\n";
  for (const ReportRow& row : rows) {
    out << row.technique << ',' << row.model << ',' << row.task << ','
        << row.runs << ',' << fixed(row.report.accuracy, 6) << ','
        << fixed(row.report.weighted_precision, 6) << ','
        << fixed(row.report.weighted_f1, 6) << '\n';
  }
  return out.str();
}

std::string results_markdown(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "| Technique | Model | Accuracy | Precision | F1 |\n";
  out << "|---|---|---|---|---|\n";
  for (const ReportRow& row : rows) {
    out << "| " << row.technique << " | " << row.model << " | "
        << fixed(row.report.accuracy, 3) << " | "
        << fixed(row.report.weighted_precision, 3) << " | "
        << fixed(row.report.weighted_f1, 3) << " |\n";
  }
  return out.str();
}

std::vector<ReportRow> parse_results_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("results csv is empty");
  }
  if (line.rfind("technique,model,task,runs,", 0) != 0) {
    throw DataError("unexpected results csv header: " + line);
  }
  std::vector<ReportRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string technique, model, task, runs, acc, prec, f1;
    if (!std::getline(fields, technique, ',') ||
        !std::getline(fields, model, ',') || !std::getline(fields, task, ',') ||
        !std::getline(fields, runs, ',') || !std::getline(fields, acc, ',') ||
        !std::getline(fields, prec, ',') || !std::getline(fields, f1)) {
      throw DataError("results csv: malformed line " + std::to_string(line_no));
    }
    ReportRow row;
    row.technique = technique;
    row.model = model;
    row.task = task;
    try {
      row.runs = std::stoul(runs);
      row.report.accuracy = std::stod(acc);
      row.report.weighted_precision = std::stod(prec);
      row.report.weighted_f1 = std::stod(f1);
    } catch (const std::exception&) {
      throw DataError("results csv: malformed numbers on line " +
                      std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace longdoc
