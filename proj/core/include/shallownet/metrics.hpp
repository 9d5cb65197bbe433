#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace shallownet {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t positives() const noexcept { return tp + fn; }
  std::uint64_t negatives() const noexcept { return tn + fp; }
  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Rates are fractions in [0, 1]; multiply by 100 for the percentages shown
/// in result tables.
struct MetricsReport {
  double accuracy = 0;
  double sensitivity = 0;  ///< TPR, recall
  double specificity = 0;  ///< TNR
  double precision = 0;    ///< PPV
  double f1 = 0;
  double mcc = 0;  ///< in [-1, 1]
  ConfusionMatrix cm;
};

/// Predicts positive iff score >= threshold.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// ACC, TPR, SPC, PPV, F1 and MCC from the counts. A 0/0 rate is reported as
/// 0, and MCC is 0 when any factor under its square root is 0. Throws
/// DataError on an all-zero matrix.
MetricsReport report(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold = std::numeric_limits<double>::infinity();
  std::uint64_t fp = 0;
  std::uint64_t tp = 0;
  double fpr = 0;
  double tpr = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;  ///< (0,0) first, (1,1) last, fpr non-decreasing
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  double auc = 0;
};

/// Sweeps the threshold over +inf and then every distinct score in
/// descending order; tied scores move together. Throws DataError when only
/// one class is present.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under the curve, accumulated on the integer counts so
/// the result equals the Mann-Whitney pair statistic exactly.
double auc(const RocCurve& curve);

std::string report_to_json(const MetricsReport& report);

/// Result-table row: accuracy..mcc (percent / raw mcc), tp, tn, timings.
std::string table_row_header();
std::string table_row_csv(const std::string& model_name, const MetricsReport& report, double training_time_s,
                          double per_image_s);

/// `threshold,fpr,tpr` rows; the first threshold is written as `inf`.
std::string roc_to_csv(const RocCurve& curve);
std::string roc_to_svg(const RocCurve& curve, const std::string& title);

}  // namespace shallownet
