// Copyright 2026 The PhyDCM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "phydcm/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phydcm/diagnose.hpp"
#include "phydcm/error.hpp"
#include "phydcm/format.hpp"

namespace phydcm::metrics {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double percent(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string pad(std::string s, std::size_t width, bool right) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return right ? fill + s : s + fill;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

ConfusionMatrix ConfusionMatrix::from_counts(std::vector<std::string> labels,
                                             const std::vector<std::vector<std::uint64_t>>& counts) {
  ConfusionMatrix cm(std::move(labels));
  if (counts.size() != cm.size())
    throw std::invalid_argument("confusion counts must be k x k");
  for (std::size_t a = 0; a < cm.size(); ++a) {
    if (counts[a].size() != cm.size()) throw std::invalid_argument("confusion counts must be k x k");
    for (std::size_t p = 0; p < cm.size(); ++p) cm.add(a, p, counts[a][p]);
  }
  return cm;
}

ConfusionMatrix ConfusionMatrix::from_class_totals(std::vector<std::string> labels,
                                                   std::span<const std::uint64_t> tested,
                                                   std::span<const std::uint64_t> correct) {
  ConfusionMatrix cm(std::move(labels));
  const std::size_t k = cm.size();
  if (tested.size() != k || correct.size() != k)
    throw std::invalid_argument("class totals must have one entry per label");
  for (std::size_t c = 0; c < k; ++c) {
    if (correct[c] > tested[c]) throw std::invalid_argument("correct exceeds tested");
    cm.add(c, c, correct[c]);
    if (tested[c] > correct[c]) {
      if (k < 2) throw std::invalid_argument("misclassifications need at least two classes");
      cm.add(c, (c + 1) % k, tested[c] - correct[c]);
    }
  }
  return cm;
}

void ConfusionMatrix::add(std::size_t actual, std::size_t predicted, std::uint64_t n) {
  if (actual >= size() || predicted >= size()) throw std::out_of_range("confusion matrix index");
  counts_[actual * size() + predicted] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.labels_ != labels_) throw std::invalid_argument("cannot merge matrices with different labels");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::count(std::size_t actual, std::size_t predicted) const {
  if (actual >= size() || predicted >= size()) throw std::out_of_range("confusion matrix index");
  return counts_[actual * size() + predicted];
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += counts_[i * size() + i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t actual) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < size(); ++p) s += count(actual, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t s = 0;
  for (std::size_t a = 0; a < size(); ++a) s += count(a, predicted);
  return s;
}

ConfusionMatrix ConfusionMatrix::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != size()) throw std::invalid_argument("permutation size mismatch");
  std::vector<std::string> labels(size());
  for (std::size_t i = 0; i < size(); ++i) labels[i] = labels_.at(perm[i]);
  ConfusionMatrix out(std::move(labels));
  for (std::size_t a = 0; a < size(); ++a)
    for (std::size_t p = 0; p < size(); ++p) out.add(a, p, count(perm[a], perm[p]));
  return out;
}

double accuracy(const ConfusionMatrix& cm) { return ratio(cm.trace(), cm.total()); }

double class_accuracy(const ConfusionMatrix& cm, std::size_t c) {
  return ratio(cm.tp(c) + cm.tn(c), cm.total());
}

double precision(const ConfusionMatrix& cm, std::size_t c) {
  return ratio(cm.tp(c), cm.tp(c) + cm.fp(c));
}

double recall(const ConfusionMatrix& cm, std::size_t c) {
  return ratio(cm.tp(c), cm.tp(c) + cm.fn(c));
}

double f1(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double macro_precision(const ConfusionMatrix& cm) {
  if (cm.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < cm.size(); ++c) s += precision(cm, c);
  return s / static_cast<double>(cm.size());
}

double macro_recall(const ConfusionMatrix& cm) {
  if (cm.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < cm.size(); ++c) s += recall(cm, c);
  return s / static_cast<double>(cm.size());
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < cm.size(); ++c) s += f1(precision(cm, c), recall(cm, c));
  return s / static_cast<double>(cm.size());
}

// Single-label multiclass: every sample contributes exactly one TP or one
// FP/FN pair, so both micro averages reduce to trace / total.
double micro_precision(const ConfusionMatrix& cm) {
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    tp += cm.tp(c);
    fp += cm.fp(c);
  }
  return ratio(tp, tp + fp);
}

double micro_recall(const ConfusionMatrix& cm) {
  std::uint64_t tp = 0, fn = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    tp += cm.tp(c);
    fn += cm.fn(c);
  }
  return ratio(tp, tp + fn);
}

EvalReport make_report(const ConfusionMatrix& cm) {
  EvalReport r;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    const std::uint64_t tested = cm.row_sum(c);
    if (tested == 0) continue;
    ClassRow row;
    row.label = cm.labels()[c];
    row.tested = tested;
    row.correct = cm.tp(c);
    row.misclassified = tested - row.correct;
    row.accuracy_pct = percent(row.correct, row.tested);
    r.classes.push_back(std::move(row));
  }
  r.tested = cm.total();
  r.correct = cm.trace();
  r.misclassified = r.tested - r.correct;
  r.overall_accuracy_pct = percent(r.correct, r.tested);
  r.macro_precision = macro_precision(cm);
  r.macro_recall = macro_recall(cm);
  r.macro_f1 = macro_f1(cm);
  r.micro_precision = micro_precision(cm);
  r.micro_recall = micro_recall(cm);
  return r;
}

std::string format_pct(double pct) { return format_fixed(pct, 2); }

std::string display_name(std::string_view label) {
  if (label == "notumor") return "No Tumor";
  std::string s(label);
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string render_table(const EvalReport& report, std::string_view title) {
  const std::vector<std::string> header = {"Class", "Tested Images", "Correct Predictions",
                                           "Misclassified", "Accuracy (%)"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : report.classes)
    rows.push_back({display_name(c.label), std::to_string(c.tested), std::to_string(c.correct),
                    std::to_string(c.misclassified), format_pct(c.accuracy_pct)});
  rows.push_back({"Overall", std::to_string(report.tested), std::to_string(report.correct),
                  std::to_string(report.misclassified), format_pct(report.overall_accuracy_pct)});

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::ostringstream out;
  if (!title.empty()) out << title << "\n";
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      out << pad(row[i], width[i], i > 0);
    }
    out << "\n";
  };
  emit(header);
  std::size_t rule = 0;
  for (auto w : width) rule += w;
  out << std::string(rule + 2 * (width.size() - 1), '-') << "\n";
  for (const auto& row : rows) emit(row);
  return out.str();
}

std::string report_to_json(const EvalReport& report, const ConfusionMatrix& cm,
                           std::string_view dataset, std::string_view scan_type) {
  nlohmann::ordered_json j;
  if (!dataset.empty()) j["dataset"] = dataset;
  if (!scan_type.empty()) j["scan_type"] = scan_type;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& c : report.classes) {
    classes.push_back({{"class", c.label},
                       {"tested", c.tested},
                       {"correct", c.correct},
                       {"misclassified", c.misclassified},
                       {"accuracy_pct", c.accuracy_pct},
                       {"accuracy_pct_display", format_pct(c.accuracy_pct)}});
  }
  j["classes"] = std::move(classes);
  j["overall"] = {{"tested", report.tested},
                  {"correct", report.correct},
                  {"misclassified", report.misclassified},
                  {"accuracy_pct", report.overall_accuracy_pct},
                  {"accuracy_pct_display", format_pct(report.overall_accuracy_pct)}};
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1}};
  j["micro"] = {{"precision", report.micro_precision}, {"recall", report.micro_recall}};
  nlohmann::ordered_json counts = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < cm.size(); ++a) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < cm.size(); ++p) row.push_back(cm.count(a, p));
    counts.push_back(std::move(row));
  }
  j["confusion_matrix"] = {{"labels", cm.labels()}, {"counts", std::move(counts)}};
  return j.dump(2) + "\n";
}

std::string summary_accuracy(const EvalReport& report) {
  return format_percent_compact(report.overall_accuracy_pct) + "%";
}

std::string render_summary(std::span<const DatasetSummary> rows) {
  std::ostringstream out;
  out << "Dataset\tAccuracy\tPrecision\tRecall\tF1\n";
  for (const auto& row : rows) {
    out << row.dataset << "\t" << summary_accuracy(row.report) << "\t"
        << format_fixed(row.report.macro_precision, 2) << "\t"
        << format_fixed(row.report.macro_recall, 2) << "\t"
        << format_fixed(row.report.macro_f1, 3) << "\n";
  }
  return out.str();
}

EvalResult evaluate_dir(const std::filesystem::path& dataset_dir,
                        const registry::Registry& registry, std::string_view scan_type) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dataset_dir, ec))
    throw Error(ErrorCode::DirNotFound, "dataset directory not found: " + dataset_dir.string());
  const auto& bundle = registry.require(scan_type);
  const auto& labels = bundle.labels();

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(dataset_dir))
    if (entry.is_directory() && entry.path().filename().string().front() != '.')
      class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());

  ConfusionMatrix cm(labels.classes);
  for (const auto& dir : class_dirs) {
    const std::string name = dir.filename().string();
    const auto actual = labels.index_of(name);
    if (!actual)
      throw Error(ErrorCode::UnknownClassDir, "class folder '" + name + "' is not in the " +
                                                  std::string(scan_type) + " label map");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().filename().string().front() != '.')
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const auto record = diagnose::predict(file, scan_type, registry);
      cm.add(*actual, *labels.index_of(record.predicted_class));
    }
  }
  return {cm, make_report(cm)};
}

}  // namespace phydcm::metrics
