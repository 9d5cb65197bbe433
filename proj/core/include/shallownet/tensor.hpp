#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shallownet/error.hpp"

namespace shallownet {

/// Extents of a 4-D tensor in (batch, channel, height, width) order.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const noexcept { return n * c * h * w; }
  constexpr bool operator==(const Shape&) const = default;

  std::string to_string() const;
};

/// Dense row-major (n, c, h, w) array, w fastest.
///
/// `BasicTensor<float>` carries every activation and parameter. The double
/// instantiation is a shadow mode used by gradient-check harnesses.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
  BasicTensor(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.to_string());
    }
  }

  /// A rows x cols matrix stored as shape (1, 1, rows, cols).
  static BasicTensor matrix(std::size_t rows, std::size_t cols, std::vector<T> values) {
    return BasicTensor(Shape{1, 1, rows, cols}, std::move(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[offset(n, c, h, w)];
  }
  const T& operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[offset(n, c, h, w)];
  }

  /// Same data under a new shape of equal size.
  BasicTensor reshaped(Shape shape) const& { return BasicTensor(shape, data_); }
  BasicTensor reshaped(Shape shape) && { return BasicTensor(shape, std::move(data_)); }

  /// Copy of sample `index` as a (1, c, h, w) tensor.
  BasicTensor sample(std::size_t index) const {
    const std::size_t per = shape_.c * shape_.h * shape_.w;
    auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * per);
    return BasicTensor(Shape{1, shape_.c, shape_.h, shape_.w}, std::vector<T>(first, first + static_cast<std::ptrdiff_t>(per)));
  }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor& other) const = default;

 private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Stacks (1, c, h, w) tensors of equal shape into one (n, c, h, w) batch.
template <typename T>
BasicTensor<T> stack(std::span<const BasicTensor<T>> items);

/// Number of worker threads used by large matrix products. 1 disables
/// threading. Results never depend on this value.
void set_num_threads(int threads);
int num_threads() noexcept;

/// C[m x n] (+)= A[m x k] * B[k x n], all row-major. Every output element is
/// summed over k strictly left to right, so results are bit-reproducible and
/// independent of the thread count.
template <typename T>
void gemm(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate = false);

/// dst[cols x rows] = transpose of src[rows x cols].
template <typename T>
void transpose(std::span<const T> src, std::span<T> dst, std::size_t rows, std::size_t cols);

/// Matrix product of two matrices stored as (1, 1, rows, cols) tensors.
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Applies `f` to every element; the result has the same shape.
template <typename T, typename F>
BasicTensor<T> map(const BasicTensor<T>& t, F&& f) {
  BasicTensor<T> out(t.shape());
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<T>(f(src[i]));
  return out;
}

template <typename T>
bool all_finite(const BasicTensor<T>& t) noexcept;

}  // namespace shallownet
