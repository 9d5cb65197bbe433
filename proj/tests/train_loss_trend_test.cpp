#include <gtest/gtest.h>

#include "shallownet/image.hpp"
#include "shallownet/train.hpp"
#include "synthetic_cells.hpp"

using namespace shallownet;

TEST(LossTrend, OverfitSubsetMostlyNonIncreasing) {
  ImageSet data;
  for (std::size_t i = 0; i < 32; ++i) {
    const bool infected = i % 2 == 0;
    data.images.push_back(
        resize_bilinear(to_tensor(fixtures::synthetic_cell(infected, hash_seed({6, i}))), kInputSize, kInputSize));
    data.labels.push_back(infected ? 1.f : 0.f);
  }
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = 6;
  const auto r = train(data, build_model(ArchId::cnn3, 6), cfg);
  int non_increasing = 0;
  for (std::size_t e = 1; e < 6; ++e) non_increasing += r.history[e].loss <= r.history[e - 1].loss;
  EXPECT_GE(non_increasing, 4) << history_to_csv(r.history, false);
}
