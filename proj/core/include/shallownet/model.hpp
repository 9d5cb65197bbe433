#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shallownet/layers.hpp"
#include "shallownet/tensor.hpp"

namespace shallownet {

/// The three shallow architectures. Values double as the checkpoint byte.
enum class ArchId : std::uint8_t { cnn1 = 1, cnn2 = 2, cnn3 = 3 };

std::string_view to_string(ArchId arch) noexcept;
/// Throws ConfigError for anything other than cnn1/cnn2/cnn3.
ArchId parse_arch(std::string_view name);

enum class LayerKind : std::uint8_t { conv2d, maxpool2x2, flatten, dense, relu, sigmoid };

std::string_view to_string(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  /// Output channels for conv2d, output features for dense; unused otherwise.
  std::size_t units = 0;

  static LayerSpec conv2d(std::size_t out_channels) { return {LayerKind::conv2d, out_channels}; }
  static LayerSpec dense(std::size_t out_features) { return {LayerKind::dense, out_features}; }
  static LayerSpec maxpool2x2() { return {LayerKind::maxpool2x2, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0}; }
  static LayerSpec relu() { return {LayerKind::relu, 0}; }
  static LayerSpec sigmoid() { return {LayerKind::sigmoid, 0}; }

  bool has_parameters() const noexcept { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
  bool operator==(const LayerSpec&) const = default;
};

struct ModelSpec {
  /// Empty for hand-built layer lists (tests, Grad-CAM oracles).
  std::optional<ArchId> arch;
  std::size_t in_channels = 3;
  std::size_t in_height = 64;
  std::size_t in_width = 64;
  std::vector<LayerSpec> layers;

  bool operator==(const ModelSpec&) const = default;
};

/// Layer table of a named architecture. `input_size` is the square input
/// side; 64 for the real models, smaller for gradient-check toys. Must be
/// divisible by 2^(number of conv blocks).
ModelSpec arch_spec(ArchId arch, std::size_t input_size = 64);

/// Per-sample output shape (n = 1) of every layer. Throws ConfigError when the
/// layer list is not shape-consistent or does not end in dense(1) -> sigmoid.
std::vector<Shape> validate_spec(const ModelSpec& spec);

template <typename T>
struct LayerParams {
  BasicTensor<T> weights;
  BasicTensor<T> bias;

  bool empty() const noexcept { return weights.empty(); }
  bool operator==(const LayerParams&) const = default;
};

/// (weights, bias) shapes per layer; zero shapes for parameter-free layers.
std::vector<std::pair<Shape, Shape>> parameter_shapes(const ModelSpec& spec);

template <typename T>
struct BasicModel {
  ModelSpec spec;
  std::vector<LayerParams<T>> params;  ///< one entry per layer
  std::uint64_t seed = 0;

  std::size_t parameter_count() const noexcept;

  template <typename U>
  BasicModel<U> cast() const {
    BasicModel<U> out{spec, {}, seed};
    out.params.reserve(params.size());
    for (const auto& p : params) out.params.push_back({p.weights.template cast<U>(), p.bias.template cast<U>()});
    return out;
  }

  bool operator==(const BasicModel&) const = default;
};

using Model = BasicModel<float>;
using Model64 = BasicModel<double>;

/// Gradients share the parameter layout of the model.
template <typename T>
using Gradients = std::vector<LayerParams<T>>;

/// He-style uniform init in +-sqrt(6 / fan_in), zero biases, from SplitMix64(seed).
Model build_model(ArchId arch, std::uint64_t seed, std::size_t input_size = 64);
Model build_model(const ModelSpec& spec, std::uint64_t seed);

template <typename T>
struct ForwardCache {
  /// activations[0] is the input; activations[i + 1] is the output of layer i.
  std::vector<BasicTensor<T>> activations;
  /// Winning input offsets for each maxpool layer (empty for other layers).
  std::vector<std::vector<std::uint32_t>> argmax;
};

template <typename T>
struct ForwardResult {
  std::vector<T> scores;
  ForwardCache<T> cache;
};

/// Full forward pass keeping every intermediate activation.
template <typename T>
ForwardResult<T> forward(const BasicModel<T>& model, const BasicTensor<T>& batch);

/// Scores only; intermediates are released as soon as they are consumed.
template <typename T>
std::vector<T> predict(const BasicModel<T>& model, const BasicTensor<T>& batch);

/// Gradient of the mean binary cross-entropy over the batch with respect to
/// every parameter. Uses the fused sigmoid + BCE derivative (score - label) / n.
template <typename T>
Gradients<T> backward(const BasicModel<T>& model, const ForwardCache<T>& cache, std::span<const T> labels);

template <typename T>
struct BackpropResult {
  Gradients<T> params;
  BasicTensor<T> grad_bottom;  ///< gradient w.r.t. activations[bottom]
};

/// Propagates `upstream` (gradient w.r.t. activations[top]) down through
/// layers top-1 .. bottom.
template <typename T>
BackpropResult<T> backprop(const BasicModel<T>& model, const ForwardCache<T>& cache, BasicTensor<T> upstream,
                           std::size_t top, std::size_t bottom, bool want_bottom_grad);

/// Index into ForwardCache::activations of the pre-sigmoid logit.
std::size_t logit_activation(const ModelSpec& spec) noexcept;

}  // namespace shallownet
