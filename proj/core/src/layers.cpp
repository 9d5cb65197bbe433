#include "shallownet/layers.hpp"

#include <algorithm>

namespace shallownet {

namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kTaps = kKernel * kKernel;

void require(bool ok, const std::string& what, const Shape& a, const Shape& b) {
  if (!ok) throw ShapeError(what + ": " + a.to_string() + " vs " + b.to_string());
}

// Writes the 3x3 patches of `sample` into columns [col0, col0 + h*w) of a
// row-major [c*9 x ld] matrix.
template <typename T>
void im2col(const T* sample, std::size_t c, std::size_t h, std::size_t w, T* cols, std::size_t ld,
            std::size_t col0) {
  for (std::size_t ci = 0; ci < c; ++ci) {
    const T* plane = sample + ci * h * w;
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        T* row = cols + (ci * kTaps + ky * kKernel + kx) * ld + col0;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - 1;
        const std::size_t x_lo = dx < 0 ? 1 : 0;
        const std::size_t x_hi = dx > 0 ? w - 1 : w;
        for (std::size_t y = 0; y < h; ++y) {
          T* out = row + y * w;
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(out, out + w, T{});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sy) * w;
          if (x_lo > 0) out[0] = T{};
          if (x_hi < w) out[w - 1] = T{};
          std::copy(src + static_cast<std::ptrdiff_t>(x_lo) + dx, src + static_cast<std::ptrdiff_t>(x_hi) + dx, out + x_lo);
        }
      }
    }
  }
}

// Scatter-adds columns [col0, col0 + h*w) back onto one sample's gradient.
template <typename T>
void col2im(const T* cols, std::size_t ld, std::size_t col0, std::size_t c, std::size_t h, std::size_t w,
            T* sample) {
  for (std::size_t ci = 0; ci < c; ++ci) {
    T* plane = sample + ci * h * w;
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const T* row = cols + (ci * kTaps + ky * kKernel + kx) * ld + col0;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - 1;
        const std::size_t x_lo = dx < 0 ? 1 : 0;
        const std::size_t x_hi = dx > 0 ? w - 1 : w;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          T* dst = plane + static_cast<std::size_t>(sy) * w;
          const T* src = row + y * w;
          for (std::size_t x = x_lo; x < x_hi; ++x) dst[static_cast<std::ptrdiff_t>(x) + dx] += src[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                              const BasicTensor<T>& bias) {
  const Shape& s = input.shape();
  const Shape& k = kernels.shape();
  require(k.h == kKernel && k.w == kKernel, "conv2d kernels must be 3x3", k, Shape{k.n, k.c, 3, 3});
  require(k.c == s.c, "conv2d channel mismatch (input vs kernels)", s, k);
  require(bias.size() == k.n, "conv2d bias length mismatch", bias.shape(), k);

  const std::size_t hw = s.h * s.w;
  const std::size_t taps = s.c * kTaps;
  std::vector<T> cols(taps * hw);
  BasicTensor<T> out(Shape{s.n, k.n, s.h, s.w});
  for (std::size_t b = 0; b < s.n; ++b) {
    im2col(input.data().data() + b * s.c * hw, s.c, s.h, s.w, cols.data(), hw, 0);
    auto dst = out.data().subspan(b * k.n * hw, k.n * hw);
    gemm<T>(kernels.data(), cols, dst, k.n, taps, hw);
    for (std::size_t co = 0; co < k.n; ++co) {
      const T bv = bias[co];
      T* plane = dst.data() + co * hw;
      for (std::size_t i = 0; i < hw; ++i) plane[i] += bv;
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                             const BasicTensor<T>& grad_out, bool need_input_grad) {
  const Shape& s = input.shape();
  const Shape& k = kernels.shape();
  require(k.h == kKernel && k.w == kKernel && k.c == s.c, "conv2d_backward kernel mismatch", s, k);
  require(grad_out.shape() == Shape{s.n, k.n, s.h, s.w}, "conv2d_backward grad_out mismatch", grad_out.shape(),
          Shape{s.n, k.n, s.h, s.w});

  const std::size_t hw = s.h * s.w;
  const std::size_t taps = s.c * kTaps;

  ConvGrads<T> grads;
  grads.bias = BasicTensor<T>(Shape{k.n, 1, 1, 1});
  grads.kernels = BasicTensor<T>(k);
  if (need_input_grad) grads.input = BasicTensor<T>(s);

  std::vector<T> cols(taps * hw);
  std::vector<T> cols_t(taps * hw);
  std::vector<T> w_t;
  std::vector<T> gcols;
  if (need_input_grad) {
    w_t.resize(kernels.size());
    transpose<T>(kernels.data(), w_t, k.n, taps);
    gcols.resize(taps * hw);
  }
  // Samples are reduced in batch order, so the sums are fixed for a given batch.
  for (std::size_t b = 0; b < s.n; ++b) {
    const auto g = grad_out.data().subspan(b * k.n * hw, k.n * hw);
    for (std::size_t co = 0; co < k.n; ++co) {
      T sum = grads.bias[co];
      const T* row = g.data() + co * hw;
      for (std::size_t i = 0; i < hw; ++i) sum += row[i];
      grads.bias[co] = sum;
    }
    im2col(input.data().data() + b * s.c * hw, s.c, s.h, s.w, cols.data(), hw, 0);
    transpose<T>(cols, cols_t, taps, hw);
    gemm<T>(g, cols_t, grads.kernels.data(), k.n, hw, taps, b > 0);
    if (need_input_grad) {
      gemm<T>(w_t, g, gcols, taps, k.n, hw);
      col2im(gcols.data(), hw, 0, s.c, s.h, s.w, grads.input.data().data() + b * s.c * hw);
    }
  }
  return grads;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input) {
  const Shape& s = input.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("maxpool2x2 needs even spatial extents, got " + s.to_string());
  }
  const std::size_t oh = s.h / 2;
  const std::size_t ow = s.w / 2;
  PoolResult<T> r{BasicTensor<T>(Shape{s.n, s.c, oh, ow}), std::vector<std::uint32_t>(s.n * s.c * oh * ow)};
  const T* in = input.data().data();
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    const std::size_t base = plane * s.h * s.w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++o) {
        const std::size_t top = base + 2 * y * s.w + 2 * x;
        const std::size_t cand[4] = {top, top + 1, top + s.w, top + s.w + 1};
        std::size_t best = cand[0];
        for (std::size_t i = 1; i < 4; ++i) {
          if (in[cand[i]] > in[best]) best = cand[i];
        }
        r.output[o] = in[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2x2_backward(const Shape& input_shape, std::span<const std::uint32_t> argmax,
                                   const BasicTensor<T>& grad_out) {
  const Shape expect{input_shape.n, input_shape.c, input_shape.h / 2, input_shape.w / 2};
  require(grad_out.shape() == expect && argmax.size() == expect.size(), "maxpool2x2_backward shape mismatch",
          grad_out.shape(), expect);
  BasicTensor<T> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_out[i];
  return grad;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
  const Shape& s = input.shape();
  const Shape& w = weights.shape();
  const std::size_t features = s.c * s.h * s.w;
  require(w.n == features && w.h == 1 && w.w == 1, "dense input features vs weights", s, w);
  require(bias.size() == w.c, "dense bias length mismatch", bias.shape(), w);

  BasicTensor<T> out(Shape{s.n, w.c, 1, 1});
  gemm<T>(input.data(), weights.data(), out.data(), s.n, features, w.c);
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t j = 0; j < w.c; ++j) out[b * w.c + j] += bias[j];
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool need_input_grad) {
  const Shape& s = input.shape();
  const Shape& w = weights.shape();
  const std::size_t features = s.c * s.h * s.w;
  require(w.n == features, "dense_backward input features vs weights", s, w);
  require(grad_out.shape() == Shape{s.n, w.c, 1, 1}, "dense_backward grad_out mismatch", grad_out.shape(),
          Shape{s.n, w.c, 1, 1});

  DenseGrads<T> grads;
  std::vector<T> x_t(input.size());
  transpose<T>(input.data(), x_t, s.n, features);
  grads.weights = BasicTensor<T>(w);
  gemm<T>(x_t, grad_out.data(), grads.weights.data(), features, s.n, w.c);

  grads.bias = BasicTensor<T>(Shape{w.c, 1, 1, 1});
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t j = 0; j < w.c; ++j) grads.bias[j] += grad_out[b * w.c + j];

  if (need_input_grad) {
    std::vector<T> w_t(weights.size());
    transpose<T>(weights.data(), w_t, features, w.c);
    grads.input = BasicTensor<T>(s);
    gemm<T>(grad_out.data(), w_t, grads.input.data(), s.n, w.c, features);
  }
  return grads;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  return map(input, [](T v) { return v > T{0} ? v : T{0}; });
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& pre_activation, const BasicTensor<T>& grad_out) {
  require(pre_activation.shape() == grad_out.shape(), "relu_backward shape mismatch", pre_activation.shape(),
          grad_out.shape());
  BasicTensor<T> g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = pre_activation[i] > T{0} ? grad_out[i] : T{0};
  return g;
}

template <typename T>
BasicTensor<T> sigmoid_forward(const BasicTensor<T>& input) {
  return map(input, [](T v) { return sigmoid(v); });
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& output, const BasicTensor<T>& grad_out) {
  require(output.shape() == grad_out.shape(), "sigmoid_backward shape mismatch", output.shape(), grad_out.shape());
  BasicTensor<T> g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * output[i] * (T{1} - output[i]);
  return g;
}

#define SHALLOWNET_INSTANTIATE(T)                                                                         \
  template BasicTensor<T> conv2d_forward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                 \
                                            const BasicTensor<T>&);                                       \
  template ConvGrads<T> conv2d_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                           const BasicTensor<T>&, bool);                                  \
  template PoolResult<T> maxpool2x2_forward<T>(const BasicTensor<T>&);                                    \
  template BasicTensor<T> maxpool2x2_backward<T>(const Shape&, std::span<const std::uint32_t>,            \
                                                 const BasicTensor<T>&);                                  \
  template BasicTensor<T> dense_forward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                           const BasicTensor<T>&);                                        \
  template DenseGrads<T> dense_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                           const BasicTensor<T>&, bool);                                  \
  template BasicTensor<T> relu_forward<T>(const BasicTensor<T>&);                                         \
  template BasicTensor<T> relu_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> sigmoid_forward<T>(const BasicTensor<T>&);                                      \
  template BasicTensor<T> sigmoid_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&);

SHALLOWNET_INSTANTIATE(float)
SHALLOWNET_INSTANTIATE(double)

#undef SHALLOWNET_INSTANTIATE

}  // namespace shallownet
