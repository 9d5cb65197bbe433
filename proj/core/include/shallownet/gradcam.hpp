#pragma once

#include <array>
#include <string>
#include <vector>

#include "shallownet/image.hpp"
#include "shallownet/model.hpp"

namespace shallownet {

/// Which class the explanation is for. The single-logit head has no second
/// output, so `uninfected` explains the negated logit.
enum class CamTarget { parasitized, uninfected };

struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;        ///< height * width, in [0, 1], max 1 unless degenerate
  std::size_t source_activation = 0;  ///< index into ForwardCache::activations
  std::vector<float> channel_weights;  ///< alpha_k: spatial mean of d(score)/dA^k
  Tensor raw;                       ///< ReLU(sum_k alpha_k A^k) at feature-map resolution
  bool degenerate = false;          ///< raw map was all zero

  float at(std::size_t y, std::size_t x) const noexcept { return values[y * width + x]; }
};

/// Activation index of the feature maps Grad-CAM reads: the output of the
/// activation that follows the last conv2d, or the conv output itself.
/// Throws ConfigError when the model has no conv layer.
std::size_t last_conv_activation(const ModelSpec& spec);

/// Gradient-weighted class activation map for one (1, C, H, W) image,
/// upsampled bilinearly to H x W and normalised by its maximum.
Heatmap gradcam(const Model& model, const Tensor& image, CamTarget target = CamTarget::parasitized);

/// Blue (0) -> green (0.5) -> red (1).
std::array<float, 3> colormap(float v) noexcept;

/// (1 - alpha) * image + alpha * colormap(heatmap).
Rgb8Image overlay(const Heatmap& heatmap, const Tensor& image, double alpha = 0.4);

/// One CSV row per image row, `%.6f` values.
std::string heatmap_to_csv(const Heatmap& heatmap);

}  // namespace shallownet
