#include "shallownet/model.hpp"

#include <cmath>

#include "shallownet/rng.hpp"

namespace shallownet {

std::string_view to_string(ArchId arch) noexcept {
  switch (arch) {
    case ArchId::cnn1: return "cnn1";
    case ArchId::cnn2: return "cnn2";
    case ArchId::cnn3: return "cnn3";
  }
  return "unknown";
}

ArchId parse_arch(std::string_view name) {
  if (name == "cnn1") return ArchId::cnn1;
  if (name == "cnn2") return ArchId::cnn2;
  if (name == "cnn3") return ArchId::cnn3;
  throw ConfigError("unknown arch_id '" + std::string(name) + "' (expected cnn1, cnn2 or cnn3)");
}

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2x2: return "maxpool2x2";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
  }
  return "unknown";
}

ModelSpec arch_spec(ArchId arch, std::size_t input_size) {
  std::vector<std::size_t> widths;
  switch (arch) {
    case ArchId::cnn1: widths = {32}; break;
    case ArchId::cnn2: widths = {32, 64}; break;
    case ArchId::cnn3: widths = {32, 64, 128}; break;
  }
  ModelSpec spec{arch, 3, input_size, input_size, {}};
  for (std::size_t w : widths) {
    spec.layers.push_back(LayerSpec::conv2d(w));
    spec.layers.push_back(LayerSpec::relu());
    spec.layers.push_back(LayerSpec::maxpool2x2());
  }
  spec.layers.push_back(LayerSpec::flatten());
  if (arch != ArchId::cnn1) {
    spec.layers.push_back(LayerSpec::dense(128));
    spec.layers.push_back(LayerSpec::relu());
  }
  spec.layers.push_back(LayerSpec::dense(1));
  spec.layers.push_back(LayerSpec::sigmoid());
  validate_spec(spec);
  return spec;
}

std::vector<Shape> validate_spec(const ModelSpec& spec) {
  auto fail = [](std::size_t i, const std::string& why) -> void {
    throw ConfigError("layer " + std::to_string(i) + ": " + why);
  };
  if (spec.in_channels == 0 || spec.in_height == 0 || spec.in_width == 0) {
    throw ConfigError("model input shape must be non-empty");
  }
  const std::size_t n = spec.layers.size();
  if (n < 2 || spec.layers[n - 1].kind != LayerKind::sigmoid || spec.layers[n - 2].kind != LayerKind::dense ||
      spec.layers[n - 2].units != 1) {
    throw ConfigError("model must end with dense(1) -> sigmoid");
  }
  std::vector<Shape> shapes;
  Shape cur{1, spec.in_channels, spec.in_height, spec.in_width};
  bool flat = false;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::conv2d:
        if (flat) fail(i, "conv2d after flatten");
        if (l.units == 0) fail(i, "conv2d needs at least one output channel");
        cur.c = l.units;
        break;
      case LayerKind::maxpool2x2:
        if (flat) fail(i, "maxpool2x2 after flatten");
        if (cur.h % 2 != 0 || cur.w % 2 != 0) fail(i, "maxpool2x2 on odd extent " + cur.to_string());
        cur.h /= 2;
        cur.w /= 2;
        break;
      case LayerKind::flatten:
        cur = Shape{1, cur.c * cur.h * cur.w, 1, 1};
        flat = true;
        break;
      case LayerKind::dense:
        if (!flat) fail(i, "dense before flatten");
        if (l.units == 0) fail(i, "dense needs at least one output feature");
        cur = Shape{1, l.units, 1, 1};
        break;
      case LayerKind::relu:
      case LayerKind::sigmoid:
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

std::vector<std::pair<Shape, Shape>> parameter_shapes(const ModelSpec& spec) {
  const std::vector<Shape> out = validate_spec(spec);
  std::vector<std::pair<Shape, Shape>> shapes(spec.layers.size());
  Shape in{1, spec.in_channels, spec.in_height, spec.in_width};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.kind == LayerKind::conv2d) {
      shapes[i] = {Shape{l.units, in.c, 3, 3}, Shape{l.units, 1, 1, 1}};
    } else if (l.kind == LayerKind::dense) {
      shapes[i] = {Shape{in.c * in.h * in.w, l.units, 1, 1}, Shape{l.units, 1, 1, 1}};
    }
    in = out[i];
  }
  return shapes;
}

template <typename T>
std::size_t BasicModel<T>::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const auto& p : params) total += p.weights.size() + p.bias.size();
  return total;
}

Model build_model(ArchId arch, std::uint64_t seed, std::size_t input_size) {
  return build_model(arch_spec(arch, input_size), seed);
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  const auto shapes = parameter_shapes(spec);
  Model model{spec, std::vector<LayerParams<float>>(spec.layers.size()), seed};
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!spec.layers[i].has_parameters()) continue;
    const auto& [ws, bs] = shapes[i];
    const std::size_t fan_in = spec.layers[i].kind == LayerKind::conv2d ? ws.c * ws.h * ws.w : ws.n;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor weights(ws);
    for (float& v : weights.data()) v = static_cast<float>(rng.uniform(-limit, limit));
    model.params[i] = {std::move(weights), Tensor(bs)};
  }
  return model;
}

std::size_t logit_activation(const ModelSpec& spec) noexcept {
  // Last layer is sigmoid; its input is the logit.
  return spec.layers.size() - 1;
}

namespace {

template <typename T>
void check_input(const ModelSpec& spec, const BasicTensor<T>& batch) {
  const Shape& s = batch.shape();
  if (s.n == 0 || s.c != spec.in_channels || s.h != spec.in_height || s.w != spec.in_width) {
    throw ShapeError("model expects input (n, " + std::to_string(spec.in_channels) + ", " +
                     std::to_string(spec.in_height) + ", " + std::to_string(spec.in_width) + "), got " +
                     s.to_string());
  }
}

template <typename T>
BasicTensor<T> apply_layer(const LayerSpec& layer, const LayerParams<T>& p, const BasicTensor<T>& in,
                           std::vector<std::uint32_t>* argmax) {
  switch (layer.kind) {
    case LayerKind::conv2d: return conv2d_forward(in, p.weights, p.bias);
    case LayerKind::maxpool2x2: {
      auto r = maxpool2x2_forward(in);
      if (argmax) *argmax = std::move(r.argmax);
      return std::move(r.output);
    }
    case LayerKind::flatten: {
      const Shape& s = in.shape();
      return in.reshaped(Shape{s.n, s.c * s.h * s.w, 1, 1});
    }
    case LayerKind::dense: return dense_forward(in, p.weights, p.bias);
    case LayerKind::relu: return relu_forward(in);
    case LayerKind::sigmoid: return sigmoid_forward(in);
  }
  throw ConfigError("unknown layer kind");
}

}  // namespace

template <typename T>
ForwardResult<T> forward(const BasicModel<T>& model, const BasicTensor<T>& batch) {
  check_input(model.spec, batch);
  ForwardResult<T> r;
  const std::size_t n = model.spec.layers.size();
  r.cache.activations.reserve(n + 1);
  r.cache.argmax.resize(n);
  r.cache.activations.push_back(batch);
  for (std::size_t i = 0; i < n; ++i) {
    r.cache.activations.push_back(
        apply_layer(model.spec.layers[i], model.params[i], r.cache.activations.back(), &r.cache.argmax[i]));
  }
  const auto out = r.cache.activations.back().data();
  r.scores.assign(out.begin(), out.end());
  return r;
}

template <typename T>
std::vector<T> predict(const BasicModel<T>& model, const BasicTensor<T>& batch) {
  check_input(model.spec, batch);
  BasicTensor<T> cur = apply_layer(model.spec.layers[0], model.params[0], batch, nullptr);
  for (std::size_t i = 1; i < model.spec.layers.size(); ++i) {
    cur = apply_layer(model.spec.layers[i], model.params[i], cur, nullptr);
  }
  return {cur.data().begin(), cur.data().end()};
}

template <typename T>
BackpropResult<T> backprop(const BasicModel<T>& model, const ForwardCache<T>& cache, BasicTensor<T> upstream,
                           std::size_t top, std::size_t bottom, bool want_bottom_grad) {
  const auto& layers = model.spec.layers;
  if (top > layers.size() || bottom > top || cache.activations.size() != layers.size() + 1) {
    throw ShapeError("backprop range does not match the forward cache");
  }
  if (upstream.shape() != cache.activations[top].shape()) {
    throw ShapeError("backprop upstream gradient " + upstream.shape().to_string() + " vs activation " +
                     cache.activations[top].shape().to_string());
  }
  BackpropResult<T> r;
  r.params.resize(layers.size());
  BasicTensor<T> grad = std::move(upstream);
  for (std::size_t i = top; i-- > bottom;) {
    const BasicTensor<T>& in = cache.activations[i];
    const BasicTensor<T>& out = cache.activations[i + 1];
    const bool need_input = i > bottom || want_bottom_grad;
    switch (layers[i].kind) {
      case LayerKind::conv2d: {
        auto g = conv2d_backward(in, model.params[i].weights, grad, need_input);
        r.params[i] = {std::move(g.kernels), std::move(g.bias)};
        grad = std::move(g.input);
        break;
      }
      case LayerKind::dense: {
        auto g = dense_backward(in, model.params[i].weights, grad, need_input);
        r.params[i] = {std::move(g.weights), std::move(g.bias)};
        grad = std::move(g.input);
        break;
      }
      case LayerKind::maxpool2x2:
        grad = maxpool2x2_backward(in.shape(), std::span<const std::uint32_t>(cache.argmax[i]), grad);
        break;
      case LayerKind::flatten:
        grad = std::move(grad).reshaped(in.shape());
        break;
      case LayerKind::relu:
        grad = relu_backward(in, grad);
        break;
      case LayerKind::sigmoid:
        grad = sigmoid_backward(out, grad);
        break;
    }
  }
  if (want_bottom_grad) r.grad_bottom = std::move(grad);
  return r;
}

template <typename T>
Gradients<T> backward(const BasicModel<T>& model, const ForwardCache<T>& cache, std::span<const T> labels) {
  if (cache.activations.size() != model.spec.layers.size() + 1) {
    throw ShapeError("forward cache does not belong to this model");
  }
  const BasicTensor<T>& scores = cache.activations.back();
  const std::size_t n = scores.shape().n;
  if (labels.size() != n) {
    throw ShapeError("label vector length " + std::to_string(labels.size()) + " does not match batch size " +
                     std::to_string(n));
  }
  const std::size_t top = logit_activation(model.spec);
  BasicTensor<T> upstream(cache.activations[top].shape());
  const T inv_n = T{1} / static_cast<T>(n);
  for (std::size_t b = 0; b < n; ++b) upstream[b] = (scores[b] - labels[b]) * inv_n;
  return backprop(model, cache, std::move(upstream), top, 0, false).params;
}

#define SHALLOWNET_INSTANTIATE(T)                                                                            \
  template struct BasicModel<T>;                                                                             \
  template ForwardResult<T> forward<T>(const BasicModel<T>&, const BasicTensor<T>&);                         \
  template std::vector<T> predict<T>(const BasicModel<T>&, const BasicTensor<T>&);                           \
  template Gradients<T> backward<T>(const BasicModel<T>&, const ForwardCache<T>&, std::span<const T>);       \
  template BackpropResult<T> backprop<T>(const BasicModel<T>&, const ForwardCache<T>&, BasicTensor<T>,       \
                                         std::size_t, std::size_t, bool);

SHALLOWNET_INSTANTIATE(float)
SHALLOWNET_INSTANTIATE(double)

#undef SHALLOWNET_INSTANTIATE

}  // namespace shallownet
