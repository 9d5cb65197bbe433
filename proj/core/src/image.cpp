#include "shallownet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

namespace shallownet {

namespace {

struct PngImageGuard {
  png_image* image;
  ~PngImageGuard() { png_image_free(image); }
};

}  // namespace

Rgb8Image read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  PngImageGuard guard{&image};
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError("cannot decode image " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    throw FormatError("cannot decode image " + path.string() + ": " + image.message);
  }
  Rgb8Image out{image.width, image.height, std::vector<std::uint8_t>(std::size_t{image.width} * image.height * 3)};
  for (std::size_t i = 0, n = std::size_t{image.width} * image.height; i < n; ++i) {
    out.pixels[3 * i + 0] = rgba[4 * i + 0];
    out.pixels[3 * i + 1] = rgba[4 * i + 1];
    out.pixels[3 * i + 2] = rgba[4 * i + 2];
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Rgb8Image& img) {
  if (img.pixels.size() != img.width * img.height * 3 || img.width == 0 || img.height == 0) {
    throw ShapeError("write_png: pixel buffer does not match " + std::to_string(img.width) + "x" +
                     std::to_string(img.height));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  PngImageGuard guard{&image};
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + image.message);
  }
}

Tensor to_tensor(const Rgb8Image& image) {
  Tensor t(Shape{1, 3, image.height, image.width});
  const std::size_t hw = image.width * image.height;
  for (std::size_t i = 0; i < hw; ++i)
    for (std::size_t c = 0; c < 3; ++c) t[c * hw + i] = static_cast<float>(image.pixels[3 * i + c]) / 255.0f;
  return t;
}

Rgb8Image to_rgb8(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) throw ShapeError("to_rgb8 expects (1, 3, h, w), got " + s.to_string());
  Rgb8Image out{s.w, s.h, std::vector<std::uint8_t>(s.w * s.h * 3)};
  const std::size_t hw = s.w * s.h;
  for (std::size_t i = 0; i < hw; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(image[c * hw + i], 0.0f, 1.0f);
      out.pixels[3 * i + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

namespace {

struct Tap {
  std::size_t i0, i1;
  float t;
};

std::vector<Tap> taps(std::size_t in, std::size_t out) {
  std::vector<Tap> r(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double src = std::clamp((static_cast<double>(o) + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(src);
    r[o] = {i0, std::min(i0 + 1, in - 1), static_cast<float>(src - static_cast<double>(i0))};
  }
  return r;
}

}  // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  const Shape& s = image.shape();
  if (s.h == 0 || s.w == 0 || out_h == 0 || out_w == 0) {
    throw ShapeError("resize_bilinear needs non-empty extents, got " + s.to_string());
  }
  if (s.h == out_h && s.w == out_w) return image;
  const auto ty = taps(s.h, out_h);
  const auto tx = taps(s.w, out_w);
  Tensor out(Shape{s.n, s.c, out_h, out_w});
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    const float* src = image.data().data() + plane * s.h * s.w;
    float* dst = out.data().data() + plane * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const float* r0 = src + ty[y].i0 * s.w;
      const float* r1 = src + ty[y].i1 * s.w;
      for (std::size_t x = 0; x < out_w; ++x) {
        const Tap& h = tx[x];
        const float top = r0[h.i0] + (r0[h.i1] - r0[h.i0]) * h.t;
        const float bot = r1[h.i0] + (r1[h.i1] - r1[h.i0]) * h.t;
        dst[y * out_w + x] = top + (bot - top) * ty[y].t;
      }
    }
  }
  return out;
}

Tensor load_image(const std::filesystem::path& path, std::size_t target) {
  return resize_bilinear(to_tensor(read_png(path)), target, target);
}

}  // namespace shallownet
