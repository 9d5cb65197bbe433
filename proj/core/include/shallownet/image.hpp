#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "shallownet/tensor.hpp"

namespace shallownet {

/// Side of the square network input.
inline constexpr std::size_t kInputSize = 64;

/// Interleaved 8-bit RGB pixels, row-major.
struct Rgb8Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  ///< width * height * 3

  bool operator==(const Rgb8Image&) const = default;
};

/// Decodes a PNG (gray, RGB or RGBA; alpha dropped). Throws FormatError
/// naming the path when the file cannot be decoded.
Rgb8Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Rgb8Image& image);

/// (1, 3, h, w) tensor with values scaled by 1/255.
Tensor to_tensor(const Rgb8Image& image);
/// Inverse of to_tensor with rounding and clamping to [0, 255].
Rgb8Image to_rgb8(const Tensor& image);

/// Bilinear resize using pixel-centre alignment and edge clamping. Resizing
/// to the current size returns an exact copy.
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

/// read_png -> to_tensor -> resize to target x target.
Tensor load_image(const std::filesystem::path& path, std::size_t target = kInputSize);

}  // namespace shallownet
