#include "shallownet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace shallownet {

std::string Shape::to_string() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

namespace {

std::atomic<int> g_threads{1};

// Register tile: MR rows of A against an NR-wide packed panel of B, held in
// GCC vector-extension registers.
#if defined(__AVX512F__)
constexpr std::size_t kVecBytes = 64;
#else
constexpr std::size_t kVecBytes = 32;
#endif

template <typename T>
using Vec [[gnu::vector_size(kVecBytes)]] = T;

template <typename T>
constexpr std::size_t kLanes = kVecBytes / sizeof(T);
template <typename T>
constexpr std::size_t kNR = 2 * kLanes<T>;
constexpr std::size_t kMR = 6;

// Below this many multiply-adds threading costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 21;

template <typename T, std::size_t MR>
void micro_kernel(const T* a, std::size_t lda, const T* panel, std::size_t ldp, std::size_t k, T* c,
                  std::size_t ldc, std::size_t nr, bool accumulate) {
  constexpr std::size_t L = kLanes<T>;
  using V = Vec<T>;
  V acc0[MR];
  V acc1[MR];
  for (std::size_t r = 0; r < MR; ++r) {
    acc0[r] = V{};
    acc1[r] = V{};
  }
  for (std::size_t p = 0; p < k; ++p) {
    V b0;
    V b1;
    __builtin_memcpy(&b0, panel + p * ldp, sizeof(V));
    __builtin_memcpy(&b1, panel + p * ldp + L, sizeof(V));
    for (std::size_t r = 0; r < MR; ++r) {
      const T av = a[r * lda + p];
      acc0[r] += av * b0;
      acc1[r] += av * b1;
    }
  }
  for (std::size_t r = 0; r < MR; ++r) {
    T tmp[2 * L];
    __builtin_memcpy(tmp, &acc0[r], sizeof(V));
    __builtin_memcpy(tmp + L, &acc1[r], sizeof(V));
    T* crow = c + r * ldc;
    if (accumulate) {
      for (std::size_t j = 0; j < nr; ++j) crow[j] += tmp[j];
    } else {
      for (std::size_t j = 0; j < nr; ++j) crow[j] = tmp[j];
    }
  }
}

template <typename T, std::size_t MR>
void run_kernel(std::size_t rows, const T* a, std::size_t k, const T* panel, std::size_t ldp, T* c, std::size_t ldc,
                std::size_t nr, bool accumulate) {
  if constexpr (MR > 0) {
    if (rows == MR) {
      micro_kernel<T, MR>(a, k, panel, ldp, k, c, ldc, nr, accumulate);
    } else {
      run_kernel<T, MR - 1>(rows, a, k, panel, ldp, c, ldc, nr, accumulate);
    }
  }
}

// Outputs narrower than one vector: plain fused multiply-adds, still summed
// left to right over k. Chosen by n alone, so every row of every batch size
// takes the same path.
template <typename T>
void gemm_narrow(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc{};
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[i * k + p], b[p * n + j], acc);
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}

template <typename T>
void gemm_tiles(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate,
                std::size_t tile_begin, std::size_t tile_end) {
  constexpr std::size_t NR = kNR<T>;
  // With a single row block each panel is used once, so packing does not pay.
  const bool direct = m <= kMR;
  std::vector<T> panel;
  for (std::size_t tile = tile_begin; tile < tile_end; ++tile) {
    const std::size_t j0 = tile * NR;
    const std::size_t nr = std::min(NR, n - j0);
    const T* bp = b + j0;
    std::size_t ldp = n;
    if (!direct || nr < NR) {
      panel.resize(k * NR);
      for (std::size_t p = 0; p < k; ++p) {
        const T* src = b + p * n + j0;
        T* dst = panel.data() + p * NR;
        std::copy(src, src + nr, dst);
        std::fill(dst + nr, dst + NR, T{});
      }
      bp = panel.data();
      ldp = NR;
    }
    for (std::size_t i = 0; i < m; i += kMR) {
      run_kernel<T, kMR>(std::min(kMR, m - i), a + i * k, k, bp, ldp, c + i * n + j0, n, nr, accumulate);
    }
  }
}

}  // namespace

void set_num_threads(int threads) { g_threads.store(std::max(1, threads)); }
int num_threads() noexcept { return g_threads.load(); }

template <typename T>
void gemm(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
          std::size_t n, bool accumulate) {
  if (a.size() != m * k || b.size() != k * n || c.size() != m * n) {
    throw ShapeError("gemm operand sizes do not match m=" + std::to_string(m) + " k=" + std::to_string(k) +
                     " n=" + std::to_string(n));
  }
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::fill(c.begin(), c.end(), T{});
    return;
  }
  if (n < kLanes<T>) {
    gemm_narrow(a.data(), b.data(), c.data(), m, k, n, accumulate);
    return;
  }
  constexpr std::size_t NR = kNR<T>;
  const std::size_t tiles = (n + NR - 1) / NR;
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(num_threads()), tiles);
  if (threads <= 1 || m * n * k < kParallelWork) {
    gemm_tiles(a.data(), b.data(), c.data(), m, k, n, accumulate, 0, tiles);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads - 1);
  const std::size_t per = tiles / threads;
  const std::size_t extra = tiles % threads;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t end = begin + per + (t < extra ? 1 : 0);
    if (t + 1 == threads) {
      gemm_tiles(a.data(), b.data(), c.data(), m, k, n, accumulate, begin, end);
    } else {
      workers.emplace_back([=] { gemm_tiles(a.data(), b.data(), c.data(), m, k, n, accumulate, begin, end); });
    }
    begin = end;
  }
}

template <typename T>
void transpose(std::span<const T> src, std::span<T> dst, std::size_t rows, std::size_t cols) {
  if (src.size() != rows * cols || dst.size() != rows * cols) {
    throw ShapeError("transpose operand sizes do not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  constexpr std::size_t B = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += B) {
    for (std::size_t j0 = 0; j0 < cols; j0 += B) {
      const std::size_t i1 = std::min(rows, i0 + B);
      const std::size_t j1 = std::min(cols, j0 + B);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
      }
    }
  }
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != 1 || sa.c != 1 || sb.n != 1 || sb.c != 1 || sa.w != sb.h) {
    throw ShapeError("matmul shape mismatch: " + sa.to_string() + " x " + sb.to_string());
  }
  BasicTensor<T> out(Shape{1, 1, sa.h, sb.w});
  gemm<T>(a.data(), b.data(), out.data(), sa.h, sa.w, sb.w);
  return out;
}

template <typename T>
BasicTensor<T> stack(std::span<const BasicTensor<T>> items) {
  if (items.empty()) throw ShapeError("cannot stack an empty list of tensors");
  const Shape one = items.front().shape();
  if (one.n != 1) throw ShapeError("stack expects (1, c, h, w) items, got " + one.to_string());
  BasicTensor<T> out(Shape{items.size(), one.c, one.h, one.w});
  const std::size_t per = one.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].shape() != one) {
      throw ShapeError("stack shape mismatch: " + items[i].shape().to_string() + " vs " + one.to_string());
    }
    std::copy(items[i].data().begin(), items[i].data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * per));
  }
  return out;
}

template <typename T>
bool all_finite(const BasicTensor<T>& t) noexcept {
  return std::all_of(t.data().begin(), t.data().end(), [](T v) { return std::isfinite(v); });
}

#define SHALLOWNET_INSTANTIATE(T)                                                                     \
  template void gemm<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t, std::size_t, \
                        std::size_t, bool);                                                           \
  template void transpose<T>(std::span<const T>, std::span<T>, std::size_t, std::size_t);            \
  template BasicTensor<T> matmul<T>(const BasicTensor<T>&, const BasicTensor<T>&);                   \
  template BasicTensor<T> stack<T>(std::span<const BasicTensor<T>>);                                 \
  template bool all_finite<T>(const BasicTensor<T>&) noexcept;

SHALLOWNET_INSTANTIATE(float)
SHALLOWNET_INSTANTIATE(double)

#undef SHALLOWNET_INSTANTIATE

}  // namespace shallownet
