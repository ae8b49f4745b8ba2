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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phydcm/registry.hpp"

namespace phydcm::metrics {

/// Rows are actual classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> labels);

  static ConfusionMatrix from_counts(std::vector<std::string> labels,
                                     const std::vector<std::vector<std::uint64_t>>& counts);

  /// Per-class tested/correct totals as published in summary tables. The
  /// misclassified remainder of class i is booked against class (i+1) mod k.
  static ConfusionMatrix from_class_totals(std::vector<std::string> labels,
                                           std::span<const std::uint64_t> tested,
                                           std::span<const std::uint64_t> correct);

  void add(std::size_t actual, std::size_t predicted, std::uint64_t count = 1);
  /// Cell-wise sum; labels must match.
  void merge(const ConfusionMatrix& other);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::uint64_t count(std::size_t actual, std::size_t predicted) const;

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t row_sum(std::size_t actual) const;
  std::uint64_t col_sum(std::size_t predicted) const;

  // One-vs-rest counts for class c.
  std::uint64_t tp(std::size_t c) const { return count(c, c); }
  std::uint64_t fn(std::size_t c) const { return row_sum(c) - tp(c); }
  std::uint64_t fp(std::size_t c) const { return col_sum(c) - tp(c); }
  std::uint64_t tn(std::size_t c) const { return total() - tp(c) - fn(c) - fp(c); }

  /// Same matrix with classes reordered: new class i is old class perm[i].
  ConfusionMatrix permuted(std::span<const std::size_t> perm) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::uint64_t> counts_;
};

/// trace / total (0 for an empty matrix).
double accuracy(const ConfusionMatrix& cm);
/// One-vs-rest (TP + TN) / (TP + TN + FP + FN).
double class_accuracy(const ConfusionMatrix& cm, std::size_t c);
/// TP / (TP + FP); 0 when the class was never predicted.
double precision(const ConfusionMatrix& cm, std::size_t c);
/// TP / (TP + FN); 0 when the class has no samples.
double recall(const ConfusionMatrix& cm, std::size_t c);
/// 2PR / (P + R); 0 when P + R == 0.
double f1(double precision, double recall);

double macro_precision(const ConfusionMatrix& cm);
double macro_recall(const ConfusionMatrix& cm);
/// Unweighted mean of per-class F1.
double macro_f1(const ConfusionMatrix& cm);
double micro_precision(const ConfusionMatrix& cm);
double micro_recall(const ConfusionMatrix& cm);

struct ClassRow {
  std::string label;
  std::uint64_t tested = 0;
  std::uint64_t correct = 0;
  std::uint64_t misclassified = 0;
  double accuracy_pct = 0.0;
};

struct EvalReport {
  std::vector<ClassRow> classes;  ///< classes with at least one sample, label order
  std::uint64_t tested = 0;
  std::uint64_t correct = 0;
  std::uint64_t misclassified = 0;
  double overall_accuracy_pct = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
};

EvalReport make_report(const ConfusionMatrix& cm);

/// Two decimals, half away from zero ("80.39").
std::string format_pct(double pct);

/// Display name for a class label ("notumor" -> "No Tumor").
std::string display_name(std::string_view label);

/// Aligned text table: Class | Tested Images | Correct Predictions |
/// Misclassified | Accuracy (%), followed by an Overall row.
std::string render_table(const EvalReport& report, std::string_view title = {});

std::string report_to_json(const EvalReport& report, const ConfusionMatrix& cm,
                           std::string_view dataset = {}, std::string_view scan_type = {});

struct DatasetSummary {
  std::string dataset;
  EvalReport report;
};

/// Cross-dataset table: Dataset | Accuracy | Precision | Recall | F1.
/// Accuracy prints integral percentages without decimals ("100%").
std::string render_summary(std::span<const DatasetSummary> rows);
std::string summary_accuracy(const EvalReport& report);

struct EvalResult {
  ConfusionMatrix cm;
  EvalReport report;
};

/// Predicts every file under dataset_dir/<class>/ with the scan type's
/// model. Throws UnknownClassDir for folders outside the label map.
EvalResult evaluate_dir(const std::filesystem::path& dataset_dir,
                        const registry::Registry& registry, std::string_view scan_type);

}  // namespace phydcm::metrics
