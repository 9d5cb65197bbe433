#include "shallownet/gradcam.hpp"

#include <algorithm>
#include <cstdio>

namespace shallownet {

std::size_t last_conv_activation(const ModelSpec& spec) {
  std::size_t conv = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].kind == LayerKind::conv2d) conv = i;
  if (conv == spec.layers.size()) throw ConfigError("Grad-CAM needs a model with at least one conv2d layer");
  if (conv + 1 < spec.layers.size() && spec.layers[conv + 1].kind == LayerKind::relu) return conv + 2;
  return conv + 1;
}

Heatmap gradcam(const Model& model, const Tensor& image, CamTarget target) {
  const Shape& is = image.shape();
  if (is.n != 1) throw ShapeError("gradcam expects a single image, got " + is.to_string());
  const std::size_t a_idx = last_conv_activation(model.spec);
  const auto fwd = forward(model, image);
  const std::size_t top = logit_activation(model.spec);
  Tensor upstream(fwd.cache.activations[top].shape(), target == CamTarget::parasitized ? 1.0f : -1.0f);
  const auto bp = backprop(model, fwd.cache, std::move(upstream), top, a_idx, true);

  const Tensor& act = fwd.cache.activations[a_idx];
  const Tensor& grad = bp.grad_bottom;
  const Shape& s = act.shape();
  const std::size_t hw = s.h * s.w;

  Heatmap hm;
  hm.source_activation = a_idx;
  hm.channel_weights.resize(s.c);
  for (std::size_t k = 0; k < s.c; ++k) {
    double sum = 0;
    for (std::size_t i = 0; i < hw; ++i) sum += grad[k * hw + i];
    hm.channel_weights[k] = static_cast<float>(sum / static_cast<double>(hw));
  }
  hm.raw = Tensor(Shape{1, 1, s.h, s.w});
  for (std::size_t i = 0; i < hw; ++i) {
    float v = 0;
    for (std::size_t k = 0; k < s.c; ++k) v += hm.channel_weights[k] * act[k * hw + i];
    hm.raw[i] = std::max(v, 0.0f);
  }

  const Tensor up = resize_bilinear(hm.raw, is.h, is.w);
  hm.height = is.h;
  hm.width = is.w;
  hm.values.assign(up.data().begin(), up.data().end());
  const float peak = *std::max_element(hm.values.begin(), hm.values.end());
  if (peak > 0.0f) {
    for (float& v : hm.values) v /= peak;
  } else {
    std::fill(hm.values.begin(), hm.values.end(), 0.0f);
    hm.degenerate = true;
  }
  return hm;
}

std::array<float, 3> colormap(float v) noexcept {
  v = std::clamp(v, 0.0f, 1.0f);
  if (v <= 0.5f) return {0.0f, 2.0f * v, 1.0f - 2.0f * v};
  return {2.0f * v - 1.0f, 2.0f - 2.0f * v, 0.0f};
}

Rgb8Image overlay(const Heatmap& heatmap, const Tensor& image, double alpha) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3 || s.h != heatmap.height || s.w != heatmap.width) {
    throw ShapeError("overlay: image " + s.to_string() + " does not match heatmap " +
                     std::to_string(heatmap.height) + "x" + std::to_string(heatmap.width));
  }
  const auto a = static_cast<float>(std::clamp(alpha, 0.0, 1.0));
  const std::size_t hw = s.h * s.w;
  Tensor blended(s);
  for (std::size_t i = 0; i < hw; ++i) {
    const auto rgb = colormap(heatmap.values[i]);
    for (std::size_t c = 0; c < 3; ++c) blended[c * hw + i] = (1.0f - a) * image[c * hw + i] + a * rgb[c];
  }
  return to_rgb8(blended);
}

std::string heatmap_to_csv(const Heatmap& heatmap) {
  std::string out;
  char buf[32];
  for (std::size_t y = 0; y < heatmap.height; ++y) {
    for (std::size_t x = 0; x < heatmap.width; ++x) {
      std::snprintf(buf, sizeof buf, x == 0 ? "%.6f" : ",%.6f", static_cast<double>(heatmap.at(y, x)));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace shallownet
