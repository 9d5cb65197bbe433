#include "shallownet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shallownet {

void AugmentParams::validate() const {
  if (!(rotation_max_deg >= 0.0 && rotation_max_deg <= 180.0)) {
    throw ConfigError("rotation_max_deg must lie in [0, 180]");
  }
  if (!(zoom_min > 0.0 && zoom_max >= zoom_min)) throw ConfigError("zoom range must be positive and ordered");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0 && vflip_prob >= 0.0 && vflip_prob <= 1.0)) {
    throw ConfigError("flip probabilities must lie in [0, 1]");
  }
}

AugmentDraw draw_augment(const AugmentParams& params, SplitMix64& rng) {
  AugmentDraw d;
  d.angle_deg = rng.uniform(-params.rotation_max_deg, params.rotation_max_deg);
  d.zoom = rng.uniform(params.zoom_min, params.zoom_max);
  d.hflip = rng.bernoulli(params.hflip_prob);
  d.vflip = rng.bernoulli(params.vflip_prob);
  return d;
}

Tensor hflip(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(s);
  for (std::size_t row = 0; row < s.n * s.c * s.h; ++row) {
    const float* src = image.data().data() + row * s.w;
    float* dst = out.data().data() + row * s.w;
    for (std::size_t x = 0; x < s.w; ++x) dst[x] = src[s.w - 1 - x];
  }
  return out;
}

Tensor vflip(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(s);
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    const float* src = image.data().data() + plane * s.h * s.w;
    float* dst = out.data().data() + plane * s.h * s.w;
    for (std::size_t y = 0; y < s.h; ++y) std::copy(src + (s.h - 1 - y) * s.w, src + (s.h - y) * s.w, dst + y * s.w);
  }
  return out;
}

namespace {

Tensor rotate_zoom(const Tensor& image, double angle_deg, double zoom) {
  const Shape& s = image.shape();
  Tensor out(s);
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta) / zoom;
  const double sn = std::sin(theta) / zoom;
  const double cx = (static_cast<double>(s.w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(s.h) - 1.0) / 2.0;
  const double max_x = static_cast<double>(s.w - 1);
  const double max_y = static_cast<double>(s.h - 1);
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = std::clamp(cx + cs * dx + sn * dy, 0.0, max_x);
      const double sy = std::clamp(cy - sn * dx + cs * dy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(sx);
      const auto y0 = static_cast<std::size_t>(sy);
      const std::size_t x1 = std::min(x0 + 1, s.w - 1);
      const std::size_t y1 = std::min(y0 + 1, s.h - 1);
      const auto fx = static_cast<float>(sx - static_cast<double>(x0));
      const auto fy = static_cast<float>(sy - static_cast<double>(y0));
      for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
        const float* src = image.data().data() + plane * s.h * s.w;
        const float top = src[y0 * s.w + x0] + (src[y0 * s.w + x1] - src[y0 * s.w + x0]) * fx;
        const float bot = src[y1 * s.w + x0] + (src[y1 * s.w + x1] - src[y1 * s.w + x0]) * fx;
        out[plane * s.h * s.w + y * s.w + x] = std::clamp(top + (bot - top) * fy, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

}  // namespace

Tensor apply_augment(const Tensor& image, const AugmentDraw& draw) {
  Tensor out = (draw.angle_deg == 0.0 && draw.zoom == 1.0) ? image : rotate_zoom(image, draw.angle_deg, draw.zoom);
  if (draw.hflip) out = hflip(out);
  if (draw.vflip) out = vflip(out);
  return out;
}

Tensor augment(const Tensor& image, const AugmentParams& params, SplitMix64& rng) {
  return apply_augment(image, draw_augment(params, rng));
}

std::uint64_t augment_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample_index) noexcept {
  return hash_seed({seed, epoch, sample_index});
}

}  // namespace shallownet
