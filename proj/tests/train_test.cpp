#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "shallownet/dataset.hpp"
#include "shallownet/error.hpp"
#include "shallownet/image.hpp"
#include "shallownet/train.hpp"
#include "synthetic_cells.hpp"

using namespace shallownet;

namespace {

// n synthetic cells, alternating labels, already at network resolution.
ImageSet synthetic_set(std::size_t n, std::uint64_t seed) {
  ImageSet set;
  for (std::size_t i = 0; i < n; ++i) {
    const bool infected = i % 2 == 0;
    const Tensor t = to_tensor(fixtures::synthetic_cell(infected, hash_seed({seed, i})));
    set.images.push_back(resize_bilinear(t, kInputSize, kInputSize));
    set.labels.push_back(infected ? 1.f : 0.f);
  }
  return set;
}

std::vector<LayerParams<double>> scalar_param(double v) {
  std::vector<LayerParams<double>> p(1);
  p[0].weights = Tensor64(Shape{1, 1, 1, 1}, v);
  return p;
}

}  // namespace

TEST(Loss, KnownValues) {
  EXPECT_NEAR(bce_loss(0.5, 1), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(0.9, 0), -std::log(0.1), 1e-12);
  EXPECT_NEAR(bce_loss(0.9, 0), 2.3026, 1e-4);
  EXPECT_LT(bce_loss(1.0 - 1e-12, 1), 1e-6);
}

TEST(Loss, ClampKeepsValuesFinite) {
  EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1)));
  EXPECT_TRUE(std::isfinite(bce_loss(1.0, 0)));
  EXPECT_NEAR(bce_loss(0.0, 1), -std::log(1e-7), 1e-9);
}

TEST(Adam, ThreeStepsMatchHandUnrolling) {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  auto params = scalar_param(0.5);
  AdamState<double> state;
  const double g1 = 0.2, g2 = -0.1, g3 = 0.3;
  for (std::uint64_t t = 1; t <= 3; ++t) {
    std::vector<LayerParams<double>> grads(1);
    grads[0].weights = Tensor64(Shape{1, 1, 1, 1}, t == 1 ? g1 : t == 2 ? g2 : g3);
    adam_step(params, grads, state, t, cfg);
  }
  const double b1 = 0.9, b2 = 0.999, eps = 1e-7, lr = 0.01;
  const double m1 = (1 - b1) * g1, v1 = (1 - b2) * g1 * g1;
  const double p1 = 0.5 - lr * (m1 / (1 - b1)) / (std::sqrt(v1 / (1 - b2)) + eps);
  const double m2 = b1 * m1 + (1 - b1) * g2, v2 = b2 * v1 + (1 - b2) * g2 * g2;
  const double p2 = p1 - lr * (m2 / (1 - b1 * b1)) / (std::sqrt(v2 / (1 - b2 * b2)) + eps);
  const double m3 = b1 * m2 + (1 - b1) * g3, v3 = b2 * v2 + (1 - b2) * g3 * g3;
  const double p3 = p2 - lr * (m3 / (1 - b1 * b1 * b1)) / (std::sqrt(v3 / (1 - b2 * b2 * b2)) + eps);
  EXPECT_NEAR(params[0].weights[0], p3, 1e-15);
  EXPECT_NEAR(state.m[0].weights[0], m3, 1e-15);
  EXPECT_NEAR(state.v[0].weights[0], v3, 1e-15);
}

TEST(Adam, ZeroGradientFromFreshStateIsNoOp) {
  auto params = scalar_param(0.25);
  AdamState<double> state;
  std::vector<LayerParams<double>> zero(1);
  zero[0].weights = Tensor64(Shape{1, 1, 1, 1}, 0.0);
  for (std::uint64_t t = 1; t <= 5; ++t) adam_step(params, zero, state, t, TrainConfig{});
  EXPECT_EQ(params[0].weights[0], 0.25);
}

TEST(Adam, MomentsDecayUnderZeroGradient) {
  auto params = scalar_param(0.0);
  AdamState<double> state;
  std::vector<LayerParams<double>> g(1);
  g[0].weights = Tensor64(Shape{1, 1, 1, 1}, 1.0);
  adam_step(params, g, state, 1, TrainConfig{});
  const double m = state.m[0].weights[0];
  const double v = state.v[0].weights[0];
  g[0].weights[0] = 0.0;
  adam_step(params, g, state, 2, TrainConfig{});
  EXPECT_NEAR(state.m[0].weights[0], 0.9 * m, 1e-15);
  EXPECT_NEAR(state.v[0].weights[0], 0.999 * v, 1e-15);
}

TEST(Adam, ConstantGradientStepApproachesLearningRate) {
  TrainConfig cfg;
  for (double g : {0.37, -2.5}) {
    auto params = scalar_param(0.0);
    AdamState<double> state;
    std::vector<LayerParams<double>> grads(1);
    grads[0].weights = Tensor64(Shape{1, 1, 1, 1}, g);
    double before = 0;
    for (std::uint64_t t = 1; t <= 2000; ++t) {
      before = params[0].weights[0];
      adam_step(params, grads, state, t, cfg);
    }
    const double step = params[0].weights[0] - before;
    EXPECT_NEAR(step, -std::copysign(cfg.learning_rate, g), 1e-9);
  }
}

TEST(Adam, RejectsStepZeroAndShapeMismatch) {
  auto params = scalar_param(0.0);
  AdamState<double> state;
  std::vector<LayerParams<double>> g(1);
  g[0].weights = Tensor64(Shape{1, 1, 1, 1}, 1.0);
  EXPECT_THROW(adam_step(params, g, state, 0, TrainConfig{}), ConfigError);
  g[0].weights = Tensor64(Shape{2, 1, 1, 1}, 1.0);
  EXPECT_THROW(adam_step(params, g, state, 1, TrainConfig{}), ShapeError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Train, StepCountCoversPartialBatch) {
  const ImageSet data = synthetic_set(10, 1);
  Model m = build_model(ArchId::cnn1, 1);
  TrainConfig cfg;
  cfg.batch_size = 4;
  Trainer trainer(m, cfg);
  trainer.run_epoch(data);
  trainer.run_epoch(data);
  EXPECT_EQ(trainer.steps(), 6u);
  EXPECT_EQ(trainer.epochs_run(), 2u);
}

TEST(Train, EpochStatsInRange) {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  const auto r = train(synthetic_set(12, 2), build_model(ArchId::cnn1, 2), cfg);
  ASSERT_EQ(r.history.size(), 2u);
  for (const auto& s : r.history) {
    EXPECT_GE(s.loss, 0.0);
    EXPECT_GE(s.accuracy, 0.0);
    EXPECT_LE(s.accuracy, 1.0);
  }
  EXPECT_EQ(r.history[1].epoch, 2u);
}

TEST(Train, DeterministicForSameSeed) {
  const ImageSet data = synthetic_set(20, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 5;
  cfg.augment = true;
  set_num_threads(1);
  const auto a = train(data, build_model(ArchId::cnn2, 5), cfg);
  const auto b = train(data, build_model(ArchId::cnn2, 5), cfg);
  set_num_threads(3);
  const auto c = train(data, build_model(ArchId::cnn2, 5), cfg);
  set_num_threads(1);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.history[e].loss, b.history[e].loss);
    EXPECT_EQ(a.history[e].loss, c.history[e].loss);
  }
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.model, c.model);
  EXPECT_EQ(history_to_csv(a.history, false), history_to_csv(b.history, false));
}

TEST(Train, SeedChangesTrajectory) {
  const ImageSet data = synthetic_set(16, 4);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  cfg.seed = 1;
  const auto a = train(data, build_model(ArchId::cnn1, 1), cfg);
  cfg.seed = 2;
  const auto b = train(data, build_model(ArchId::cnn1, 1), cfg);
  EXPECT_NE(a.model, b.model);
}

TEST(Train, FullBatchTrajectoryMatchesReference) {
  // Per-epoch losses of the same six full-batch Adam steps computed by an
  // independent framework from identical initial weights and images.
  const double reference[] = {0.700675, 6.084319, 1.420414, 1.602903, 1.468400, 1.109904};
  const ImageSet data = synthetic_set(32, 6);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 6;
  const auto r = train(data, build_model(ArchId::cnn3, 6), cfg);
  for (std::size_t e = 0; e < 6; ++e) EXPECT_NEAR(r.history[e].loss, reference[e], 1e-4 * reference[e]) << e;
}

TEST(Train, EmptySetRejected) {
  Model m = build_model(ArchId::cnn1, 1);
  EXPECT_THROW(train(ImageSet{}, m, TrainConfig{}), DataError);
  EXPECT_THROW(train(std::span<const Sample>{}, m, TrainConfig{}), DataError);
}

TEST(Train, DecodeFailureNamesFile) {
  oracle::TempDir dir("train_decode");
  const auto bad = dir / "broken.png";
  std::ofstream(bad) << "not a png";
  const std::vector<Sample> samples{{bad, kParasitized, Split::train}};
  try {
    train(samples, build_model(ArchId::cnn1, 1), TrainConfig{});
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.png"), std::string::npos);
  }
}

TEST(History, CsvFormat) {
  const std::vector<EpochStats> h{{1, 0.5, 0.75, 1.25}, {2, 0.25, 1.0, 1.5}};
  const std::string timed = history_to_csv(h);
  EXPECT_EQ(timed.substr(0, timed.find('\n')), "epoch,loss,train_acc,seconds");
  const std::string untimed = history_to_csv(h, false);
  EXPECT_EQ(std::count(untimed.begin(), untimed.end(), '\n'), 3);
  EXPECT_EQ(untimed.find("1.25"), std::string::npos);
}

TEST(Latency, NeedsThirtyIterations) {
  const Model m = build_model(ArchId::cnn1, 1);
  EXPECT_THROW(benchmark_single_image(m, Tensor(Shape{1, 3, 64, 64}), 1, 29), ConfigError);
}

TEST(Latency, StatsAreOrdered) {
  const Model m = build_model(ArchId::cnn1, 1);
  const auto s = benchmark_single_image(m, Tensor(Shape{1, 3, 64, 64}, 0.5f), 3, 30);
  EXPECT_EQ(s.iterations, 30u);
  EXPECT_GT(s.mean, 0.0);
  EXPECT_LE(s.p50, s.p95);
}

TEST(Latency, ShallowerModelIsFaster) {
  const Tensor img(Shape{1, 3, 64, 64}, 0.5f);
  const auto one = benchmark_single_image(build_model(ArchId::cnn1, 1), img, 5, 40);
  const auto three = benchmark_single_image(build_model(ArchId::cnn3, 1), img, 5, 40);
  EXPECT_LT(one.p50, three.p50);
}

TEST(Latency, IndependentOfImageContent) {
  const Model m = build_model(ArchId::cnn3, 1);
  const ImageSet real = synthetic_set(1, 9);
  const auto flat = benchmark_single_image(m, Tensor(Shape{1, 3, 64, 64}, 0.5f), 5, 40);
  const auto cell = benchmark_single_image(m, real.images[0], 5, 40);
  const double ratio = cell.p50 / flat.p50;
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 2.0);
}

TEST(Latency, RestoresThreadCount) {
  set_num_threads(3);
  benchmark_single_image(build_model(ArchId::cnn1, 1), Tensor(Shape{1, 3, 64, 64}), 1, 30);
  EXPECT_EQ(num_threads(), 3);
  set_num_threads(1);
}
