#include <gtest/gtest.h>

#include <random>

#include "cam_fixture.hpp"
#include "shallownet/error.hpp"
#include "shallownet/gradcam.hpp"

using namespace shallownet;

namespace {

using fixtures::averaging_model;
using fixtures::patch_image;
constexpr std::size_t kSide = fixtures::kCamSide;

Tensor random_image(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> d(0.f, 1.f);
  Tensor x(Shape{1, 3, side, side});
  for (float& v : x.data()) v = d(gen);
  return x;
}

}  // namespace

TEST(Gradcam, ConstructedModelWeightsAreSpatialMeans) {
  const Model m = averaging_model();
  const Tensor x = patch_image();
  const Heatmap hm = gradcam(m, x);
  ASSERT_EQ(hm.channel_weights.size(), 1u);
  const float alpha = 1.0f / (kSide * kSide);
  EXPECT_NEAR(hm.channel_weights[0], alpha, 1e-7);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(hm.raw[i], alpha * x[i], 1e-5) << i;
}

TEST(Gradcam, PeakLiesInBrightPatch) {
  const Heatmap hm = gradcam(averaging_model(), patch_image());
  EXPECT_FALSE(hm.degenerate);
  std::size_t best = 0;
  for (std::size_t i = 1; i < hm.values.size(); ++i)
    if (hm.values[i] > hm.values[best]) best = i;
  const std::size_t y = best / hm.width, x = best % hm.width;
  EXPECT_TRUE(fixtures::in_patch(y, x)) << y << "," << x;
  EXPECT_FLOAT_EQ(hm.at(y, x), 1.0f);
  EXPECT_NEAR(hm.at(0, 0), 0.1f, 1e-5);
}

TEST(Gradcam, OppositeTargetOfPositiveEvidenceIsDegenerate) {
  const Heatmap hm = gradcam(averaging_model(), patch_image(), CamTarget::uninfected);
  EXPECT_TRUE(hm.degenerate);
  for (float v : hm.values) EXPECT_EQ(v, 0.0f);
}

TEST(Gradcam, ZeroInputIsDegenerate) {
  const Heatmap hm = gradcam(averaging_model(), Tensor(Shape{1, 1, kSide, kSide}));
  EXPECT_TRUE(hm.degenerate);
}

TEST(Gradcam, ValuesInUnitIntervalAtInputResolution) {
  const Model m = build_model(ArchId::cnn3, 21);
  for (std::uint64_t seed : {1, 2, 3}) {
    const Heatmap hm = gradcam(m, random_image(64, seed));
    ASSERT_EQ(hm.height, 64u);
    ASSERT_EQ(hm.width, 64u);
    ASSERT_EQ(hm.values.size(), 64u * 64u);
    float peak = 0;
    for (float v : hm.values) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
      peak = std::max(peak, v);
    }
    if (!hm.degenerate) {
      EXPECT_FLOAT_EQ(peak, 1.0f);
    }
  }
}

TEST(Gradcam, InvariantToLogitScaling) {
  const Heatmap a = gradcam(averaging_model(1.0f), patch_image());
  const Heatmap b = gradcam(averaging_model(7.5f), patch_image());
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-5);

  Model m = build_model(ArchId::cnn2, 5);
  const Tensor x = random_image(64, 9);
  const Heatmap before = gradcam(m, x);
  const std::size_t head = m.spec.layers.size() - 2;
  for (float& v : m.params[head].weights.data()) v *= 3.0f;
  for (float& v : m.params[head].bias.data()) v *= 3.0f;
  const Heatmap after = gradcam(m, x);
  ASSERT_EQ(before.degenerate, after.degenerate);
  for (std::size_t i = 0; i < before.values.size(); ++i) EXPECT_NEAR(before.values[i], after.values[i], 1e-5);
}

TEST(Gradcam, IndependentOfOtherImages) {
  const Model m = build_model(ArchId::cnn1, 3);
  const Tensor x = random_image(64, 4);
  const Heatmap alone = gradcam(m, x);
  const std::vector<Tensor> batch{random_image(64, 5), x, random_image(64, 6)};
  const Tensor stacked = stack<float>(batch);
  gradcam(m, stacked.sample(0));
  const Heatmap from_batch = gradcam(m, stacked.sample(1));
  EXPECT_EQ(alone.values, from_batch.values);
  EXPECT_THROW(gradcam(m, stacked), ShapeError);
}

TEST(Gradcam, ReadsActivationAfterLastConv) {
  const ModelSpec spec = arch_spec(ArchId::cnn3);
  const std::size_t idx = last_conv_activation(spec);
  EXPECT_EQ(spec.layers[idx - 1].kind, LayerKind::relu);
  EXPECT_EQ(spec.layers[idx - 2].kind, LayerKind::conv2d);
  for (std::size_t i = idx; i < spec.layers.size(); ++i) EXPECT_NE(spec.layers[i].kind, LayerKind::conv2d);
}

TEST(Gradcam, NoConvLayerThrows) {
  ModelSpec spec;
  spec.in_channels = 1;
  spec.in_height = 4;
  spec.in_width = 4;
  spec.layers = {LayerSpec::flatten(), LayerSpec::dense(1), LayerSpec::sigmoid()};
  EXPECT_THROW(last_conv_activation(spec), ConfigError);
  EXPECT_THROW(gradcam(build_model(spec, 1), Tensor(Shape{1, 1, 4, 4})), ConfigError);
}

TEST(Overlay, AlphaEndpoints) {
  Heatmap hm = gradcam(build_model(ArchId::cnn1, 2), random_image(64, 8));
  const Tensor img = random_image(64, 8);
  EXPECT_EQ(overlay(hm, img, 0.0), to_rgb8(img));

  const Rgb8Image full = overlay(hm, img, 1.0);
  for (std::size_t i = 0; i < hm.values.size(); ++i) {
    const auto rgb = colormap(hm.values[i]);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(full.pixels[i * 3 + c], std::lround(rgb[c] * 255.0f), 1) << i;
    }
  }
}

TEST(Overlay, ZeroHeatmapTintsBlue) {
  Heatmap hm;
  hm.height = hm.width = 4;
  hm.values.assign(16, 0.0f);
  const Tensor grey(Shape{1, 3, 4, 4}, 0.5f);
  const Rgb8Image out = overlay(hm, grey, 0.4);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_LT(out.pixels[i * 3 + 0], out.pixels[i * 3 + 2]);
    EXPECT_LT(out.pixels[i * 3 + 1], out.pixels[i * 3 + 2]);
  }
}

TEST(Overlay, ShapeMismatchThrows) {
  Heatmap hm;
  hm.height = hm.width = 4;
  hm.values.assign(16, 0.0f);
  EXPECT_THROW(overlay(hm, Tensor(Shape{1, 3, 5, 4})), ShapeError);
}

TEST(Colormap, Endpoints) {
  EXPECT_EQ(colormap(0.0f), (std::array<float, 3>{0, 0, 1}));
  EXPECT_EQ(colormap(0.5f), (std::array<float, 3>{0, 1, 0}));
  EXPECT_EQ(colormap(1.0f), (std::array<float, 3>{1, 0, 0}));
  EXPECT_EQ(colormap(-2.0f), colormap(0.0f));
}

TEST(Gradcam, CsvHasOneRowPerImageRow) {
  const Heatmap hm = gradcam(averaging_model(), patch_image());
  const std::string csv = heatmap_to_csv(hm);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(kSide));
  EXPECT_EQ(csv.substr(0, csv.find('\n')).size(), kSide * 8 + (kSide - 1));
}
