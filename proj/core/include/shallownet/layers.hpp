#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "shallownet/tensor.hpp"

namespace shallownet {

// Layer kernels. Every function is instantiated for float (the production
// path) and double (the gradient-check shadow mode).
//
// Parameter layouts:
//   conv kernels  (out_channels, in_channels, 3, 3), bias (out_channels, 1, 1, 1)
//   dense weights (in_features, out_features, 1, 1), bias (out_features, 1, 1, 1)

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;  ///< empty when not requested
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  /// Flat offset into the input of the element that won each window.
  std::vector<std::uint32_t> argmax;
};

/// 3x3 convolution, stride 1, zero "same" padding, lowered to one
/// im2col + gemm per sample.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias);

/// Kernel and bias gradients are summed over the batch in sample order.
template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                             const BasicTensor<T>& grad_out, bool need_input_grad = true);

/// 2x2 max pool with stride 2. Ties go to the lowest flat index.
template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> maxpool2x2_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                                   const BasicTensor<T>& grad_out);

/// Fully connected layer over the flattened per-sample features.
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool need_input_grad = true);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Passes the gradient where the pre-activation is strictly positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& pre_activation, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> sigmoid_forward(const BasicTensor<T>& input);

/// Takes the sigmoid *output*, not its input.
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_out);

/// Logistic function with separate branches for positive and negative
/// arguments so neither side overflows.
template <typename T>
inline T sigmoid(T x) noexcept {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace shallownet
