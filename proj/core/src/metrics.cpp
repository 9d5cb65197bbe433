#include "shallownet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"
#include "shallownet/error.hpp"

namespace shallownet {

namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("scores (" + std::to_string(scores.size()) + ") and labels (" + std::to_string(labels.size()) +
                     ") differ in length");
  }
  for (double s : scores)
    if (!std::isfinite(s)) throw DataError("scores must be finite");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++(predicted ? cm.tp : cm.fn);
    } else {
      ++(predicted ? cm.fp : cm.tn);
    }
  }
  return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("cannot report metrics for an empty confusion matrix");
  MetricsReport r;
  r.cm = cm;
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());
  r.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  r.specificity = ratio(cm.tn, cm.fp + cm.tn);
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  const double tp = static_cast<double>(cm.tp);
  const double tn = static_cast<double>(cm.tn);
  const double fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn);
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  r.mcc = den == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
  return r;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels);
  RocCurve curve;
  for (int l : labels) ++(l == 1 ? curve.positives : curve.negatives);
  if (curve.positives == 0 || curve.negatives == 0) {
    throw DataError("ROC curve needs both classes present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const auto p = static_cast<double>(curve.positives);
  const auto n = static_cast<double>(curve.negatives);
  curve.points.push_back({});
  RocPoint cur;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == thr; ++i) ++(labels[order[i]] == 1 ? cur.tp : cur.fp);
    cur.threshold = thr;
    cur.fpr = static_cast<double>(cur.fp) / n;
    cur.tpr = static_cast<double>(cur.tp) / p;
    curve.points.push_back(cur);
  }
  curve.auc = auc(curve);
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.positives == 0 || curve.negatives == 0 || curve.points.empty()) return 0.0;
  // Twice the area in units of (1/P) x (1/N) cells.
  std::uint64_t twice_area = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    twice_area += (b.fp - a.fp) * (a.tp + b.tp);
  }
  return static_cast<double>(twice_area) /
         (2.0 * static_cast<double>(curve.positives) * static_cast<double>(curve.negatives));
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["sensitivity"] = r.sensitivity;
  j["specificity"] = r.specificity;
  j["precision"] = r.precision;
  j["f1"] = r.f1;
  j["mcc"] = r.mcc;
  j["confusion"] = {{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"fn", r.cm.fn}, {"tn", r.cm.tn}};
  return j.dump(2) + "\n";
}

std::string table_row_header() {
  return "model,accuracy,sensitivity,specificity,precision,tp,tn,f1,mcc,training_time_s,per_image_s\n";
}

std::string table_row_csv(const std::string& model_name, const MetricsReport& r, double training_time_s,
                          double per_image_s) {
  std::string row = model_name;
  for (double pct : {r.accuracy, r.sensitivity, r.specificity, r.precision}) row += "," + fixed(100.0 * pct, 2);
  row += "," + std::to_string(r.cm.tp) + "," + std::to_string(r.cm.tn);
  row += "," + fixed(100.0 * r.f1, 2) + "," + fixed(r.mcc, 4);
  row += "," + fixed(training_time_s, 2) + "," + fixed(per_image_s, 6) + "\n";
  return row;
}

std::string roc_to_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const RocPoint& pt : curve.points) {
    out += std::isinf(pt.threshold) ? std::string("inf") : fixed(pt.threshold, 9);
    out += "," + fixed(pt.fpr, 9) + "," + fixed(pt.tpr, 9) + "\n";
  }
  return out;
}

std::string roc_to_svg(const RocCurve& curve, const std::string& title) {
  constexpr double size = 400.0;
  constexpr double margin = 50.0;
  auto px = [&](double fpr) { return fixed(margin + fpr * size, 2); };
  auto py = [&](double tpr) { return fixed(margin + (1.0 - tpr) * size, 2); };
  std::string path;
  for (const RocPoint& pt : curve.points) path += (path.empty() ? "" : " ") + px(pt.fpr) + "," + py(pt.tpr);

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"520\" viewBox=\"0 0 500 520\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"500\" height=\"520\" fill=\"white\"/>\n";
  svg += "<rect x=\"50\" y=\"50\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<line x1=\"50\" y1=\"450\" x2=\"450\" y2=\"50\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  svg += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"" + path + "\"/>\n";
  svg += "<text x=\"250\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + title +
         " (AUC = " + fixed(curve.auc, 4) + ")</text>\n";
  svg += "<text x=\"250\" y=\"490\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
         "False Positive Rate</text>\n";
  svg += "<text x=\"20\" y=\"250\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
         "transform=\"rotate(-90 20 250)\">True Positive Rate</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace shallownet
