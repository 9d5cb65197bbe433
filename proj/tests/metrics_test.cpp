#include <gtest/gtest.h>

#include <json.hpp>
#include <random>

#include "oracles.hpp"
#include "reference_rows.hpp"
#include "shallownet/error.hpp"
#include "shallownet/metrics.hpp"

using namespace shallownet;

namespace {

ConfusionMatrix cm(std::uint64_t tp, std::uint64_t fn, std::uint64_t fp, std::uint64_t tn) {
  ConfusionMatrix m;
  m.tp = tp;
  m.fn = fn;
  m.fp = fp;
  m.tn = tn;
  return m;
}

struct Scored {
  std::vector<double> scores;
  std::vector<int> labels;
};

Scored random_scored(std::size_t n, std::mt19937_64& gen, bool allow_ties) {
  Scored s;
  std::uniform_int_distribution<int> bit(0, 1);
  std::uniform_int_distribution<int> coarse(0, 5);
  std::uniform_real_distribution<double> fine(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    s.labels.push_back(bit(gen));
    s.scores.push_back(allow_ties ? coarse(gen) / 5.0 : fine(gen));
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

}  // namespace

TEST(Confusion, TwoSamples) {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<int> l{1, 0};
  EXPECT_EQ(confusion(s, l), cm(1, 0, 0, 1));
}

TEST(Confusion, ThresholdZeroPredictsAllPositive) {
  const std::vector<double> s{0.0, 0.3, 0.7, 0.0};
  const std::vector<int> l{1, 0, 1, 0};
  const auto m = confusion(s, l, 0.0);
  EXPECT_EQ(m.fn, 0u);
  EXPECT_EQ(m.tn, 0u);
}

TEST(Confusion, ThresholdIsInclusive) {
  const std::vector<double> s{0.5};
  const std::vector<int> l{0};
  EXPECT_EQ(confusion(s, l).fp, 1u);
}

TEST(Confusion, MatchesBruteForceCount) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_scored(50, gen, trial % 2 == 0);
    const auto want = oracle::count(d.scores, d.labels, 0.5);
    const auto got = confusion(d.scores, d.labels);
    EXPECT_EQ(got.tp, static_cast<std::uint64_t>(want.tp));
    EXPECT_EQ(got.fp, static_cast<std::uint64_t>(want.fp));
    EXPECT_EQ(got.fn, static_cast<std::uint64_t>(want.fn));
    EXPECT_EQ(got.tn, static_cast<std::uint64_t>(want.tn));
    EXPECT_EQ(got.total(), 50u);
  }
}

TEST(Confusion, LengthMismatchThrows) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> l{1};
  EXPECT_THROW(confusion(s, l), ShapeError);
}

TEST(Report, ReproducesReferenceRows) {
  for (const auto& row : oracle::kReferenceRows) {
    const MetricsReport r = report(cm(row.tp, row.fn, row.fp, row.tn));
    EXPECT_NEAR(100 * r.accuracy, row.accuracy, oracle::kPercentTolerance) << row.name;
    EXPECT_NEAR(100 * r.sensitivity, row.sensitivity, oracle::kPercentTolerance) << row.name;
    EXPECT_NEAR(100 * r.specificity, row.specificity, oracle::kPercentTolerance) << row.name;
    EXPECT_NEAR(100 * r.precision, row.precision, oracle::kPercentTolerance) << row.name;
    EXPECT_NEAR(100 * r.f1, row.f1, oracle::kPercentTolerance) << row.name;
    EXPECT_NEAR(r.mcc, row.mcc, oracle::kMccTolerance) << row.name;
  }
}

TEST(Report, MatchesTextbookFormulas) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> d(1, 500);
  for (int trial = 0; trial < 50; ++trial) {
    const double tp = d(gen), fn = d(gen), fp = d(gen), tn = d(gen);
    const auto want = oracle::rates(tp, fn, fp, tn);
    const auto got = report(cm(tp, fn, fp, tn));
    EXPECT_NEAR(got.accuracy, want.acc, 1e-12);
    EXPECT_NEAR(got.sensitivity, want.tpr, 1e-12);
    EXPECT_NEAR(got.specificity, want.spc, 1e-12);
    EXPECT_NEAR(got.precision, want.ppv, 1e-12);
    EXPECT_NEAR(got.f1, want.f1, 1e-12);
    EXPECT_NEAR(got.mcc, want.mcc, 1e-12);
  }
}

TEST(Report, PerfectClassifier) {
  const auto r = report(cm(10, 0, 0, 10));
  for (double v : {r.accuracy, r.sensitivity, r.specificity, r.precision, r.f1, r.mcc}) EXPECT_EQ(v, 1.0);
}

TEST(Report, ZeroDenominatorsAreZero) {
  const auto no_positive_predictions = report(cm(0, 5, 0, 5));
  EXPECT_EQ(no_positive_predictions.precision, 0.0);
  EXPECT_EQ(no_positive_predictions.mcc, 0.0);
  const auto no_positives = report(cm(0, 0, 3, 7));
  EXPECT_EQ(no_positives.sensitivity, 0.0);
  EXPECT_EQ(no_positives.f1, 0.0);
  EXPECT_EQ(no_positives.mcc, 0.0);
}

TEST(Report, EmptyMatrixThrows) { EXPECT_THROW(report(cm(0, 0, 0, 0)), DataError); }

TEST(Report, InvertedPredictionsFlipMcc) {
  for (const auto& row : oracle::kReferenceRows) {
    const double mcc = report(cm(row.tp, row.fn, row.fp, row.tn)).mcc;
    const double inverted = report(cm(row.fn, row.tp, row.tn, row.fp)).mcc;
    EXPECT_NEAR(inverted, -mcc, 1e-12) << row.name;
  }
}

TEST(Report, F1IsHarmonicMean) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> d(1, 300);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = report(cm(d(gen), d(gen), d(gen), d(gen)));
    EXPECT_NEAR(r.f1, 2 * r.precision * r.sensitivity / (r.precision + r.sensitivity), 1e-12);
  }
}

TEST(Report, RatesInRange) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> d(0, 30);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = cm(d(gen), d(gen), d(gen), d(gen) + 1);
    const auto r = report(m);
    for (double v : {r.accuracy, r.sensitivity, r.specificity, r.precision, r.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(r.mcc, -1.0);
    EXPECT_LE(r.mcc, 1.0);
  }
}

TEST(Roc, PerfectSeparation) {
  const std::vector<double> s{0.9, 0.8, 0.3, 0.1};
  const std::vector<int> l{1, 1, 0, 0};
  const auto c = roc_curve(s, l);
  bool corner = false;
  for (const auto& p : c.points) corner |= p.fpr == 0.0 && p.tpr == 1.0;
  EXPECT_TRUE(corner);
  EXPECT_EQ(c.auc, 1.0);
}

TEST(Roc, ConstantScoresGiveDiagonal) {
  const std::vector<double> s(6, 0.4);
  const std::vector<int> l{1, 0, 1, 0, 0, 1};
  const auto c = roc_curve(s, l);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0].fpr, 0.0);
  EXPECT_EQ(c.points[1].tpr, 1.0);
  EXPECT_EQ(c.auc, 0.5);
}

TEST(Roc, MixedCaseMatchesPairCount) {
  const std::vector<double> s{0.9, 0.7, 0.7, 0.6, 0.4, 0.3, 0.3, 0.1};
  const std::vector<int> l{1, 0, 1, 1, 0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(roc_curve(s, l).auc, oracle::pair_auc(s, l));
}

TEST(Roc, CurveShape) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_scored(40, gen, trial % 2 == 1);
    const auto c = roc_curve(d.scores, d.labels);
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.front().tpr, 0.0);
    EXPECT_TRUE(std::isinf(c.points.front().threshold));
    EXPECT_EQ(c.points.back().fpr, 1.0);
    EXPECT_EQ(c.points.back().tpr, 1.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GE(c.points[i].fpr, c.points[i - 1].fpr);
      EXPECT_GE(c.points[i].tpr, c.points[i - 1].tpr);
      EXPECT_LT(c.points[i].threshold, c.points[i - 1].threshold);
    }
    EXPECT_DOUBLE_EQ(c.auc, oracle::pair_auc(d.scores, d.labels));
  }
}

TEST(Roc, ReversedScoresComplementAuc) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = random_scored(30, gen, trial % 2 == 0);
    const double a = roc_curve(d.scores, d.labels).auc;
    for (double& v : d.scores) v = -v;
    EXPECT_NEAR(roc_curve(d.scores, d.labels).auc, 1.0 - a, 1e-12);
  }
}

TEST(Roc, SingleClassThrows) {
  const std::vector<double> s{0.2, 0.4};
  const std::vector<int> l{1, 1};
  EXPECT_THROW(roc_curve(s, l), DataError);
}

TEST(Serialize, JsonFields) {
  const auto j = nlohmann::json::parse(report_to_json(report(cm(3, 1, 2, 4))));
  for (const char* k : {"accuracy", "sensitivity", "specificity", "precision", "f1", "mcc", "confusion"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["confusion"]["tp"], 3);
  EXPECT_EQ(j["confusion"]["tn"], 4);
}

TEST(Serialize, TableRowMatchesPrintedValues) {
  const auto& row = oracle::kReferenceRows[2];
  const std::string line = table_row_csv(row.name, report(cm(row.tp, row.fn, row.fp, row.tn)), 701.05, 0.0018);
  EXPECT_EQ(line, "cnn3,95.32,94.30,96.34,96.26,2599,2655,95.27,0.9066,701.05,0.001800\n");
  EXPECT_EQ(table_row_header(),
            "model,accuracy,sensitivity,specificity,precision,tp,tn,f1,mcc,training_time_s,per_image_s\n");
}

TEST(Serialize, RocCsvAndSvg) {
  const std::vector<double> s{0.9, 0.2};
  const std::vector<int> l{1, 0};
  const auto c = roc_curve(s, l);
  const std::string csv = roc_to_csv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "threshold,fpr,tpr");
  EXPECT_NE(csv.find("\ninf,0.000000000,0.000000000\n"), std::string::npos);
  const std::string svg = roc_to_svg(c, "demo");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg, roc_to_svg(c, "demo"));
}
