#include "shallownet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>

#include "shallownet/rng.hpp"

namespace shallownet {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
    throw ConfigError("adam hyperparameters out of range");
  }
  augment_params.validate();
}

double bce_loss(double score, double label) noexcept {
  constexpr double eps = 1e-7;
  const double p = std::clamp(score, eps, 1.0 - eps);
  return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

template <typename T>
void adam_step(std::vector<LayerParams<T>>& params, const Gradients<T>& grads, AdamState<T>& state, std::uint64_t t,
               const TrainConfig& config) {
  if (t < 1) throw ConfigError("adam step index must be >= 1");
  if (grads.size() != params.size()) throw ShapeError("adam_step: gradient list does not match parameters");
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = {BasicTensor<T>(params[i].weights.shape()), BasicTensor<T>(params[i].bias.shape())};
      state.v[i] = state.m[i];
    }
  }
  const auto& a = config.adam;
  const T b1 = static_cast<T>(a.beta1);
  const T b2 = static_cast<T>(a.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(a.beta1, static_cast<double>(t)));
  const T c2 = static_cast<T>(1.0 - std::pow(a.beta2, static_cast<double>(t)));
  const T lr = static_cast<T>(config.learning_rate);
  const T eps = static_cast<T>(a.epsilon);

  auto update = [&](BasicTensor<T>& p, const BasicTensor<T>& g, BasicTensor<T>& m, BasicTensor<T>& v) {
    if (p.empty()) return;
    if (g.shape() != p.shape()) {
      throw ShapeError("adam_step: gradient " + g.shape().to_string() + " vs parameter " + p.shape().to_string());
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weights, grads[i].weights, state.m[i].weights, state.v[i].weights);
    update(params[i].bias, grads[i].bias, state.m[i].bias, state.v[i].bias);
  }
}

template void adam_step<float>(std::vector<LayerParams<float>>&, const Gradients<float>&, AdamState<float>&,
                               std::uint64_t, const TrainConfig&);
template void adam_step<double>(std::vector<LayerParams<double>>&, const Gradients<double>&, AdamState<double>&,
                                std::uint64_t, const TrainConfig&);

Trainer::Trainer(Model& model, TrainConfig config) : model_(model), config_(std::move(config)) {
  config_.validate();
}

Tensor Trainer::make_batch(const ImageSet& data, std::span<const std::size_t> indices) const {
  std::vector<Tensor> items;
  items.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (config_.augment) {
      SplitMix64 rng(augment_seed(config_.seed, epoch_, idx));
      items.push_back(augment(data.images[idx], config_.augment_params, rng));
    } else {
      items.push_back(data.images[idx]);
    }
  }
  return stack<float>(items);
}

EpochStats Trainer::run_epoch(const ImageSet& data) {
  if (data.size() == 0) throw DataError("training set is empty");
  if (data.labels.size() != data.size()) throw ShapeError("image and label counts differ");
  const auto start = Clock::now();
  const std::size_t n = data.size();
  ++epoch_;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (config_.shuffle_each_epoch) {
    SplitMix64 rng(config_.seed ^ static_cast<std::uint64_t>(epoch_));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  }

  const std::size_t bs = config_.batch_size;
  const std::size_t batches = (n + bs - 1) / bs;
  auto indices_of = [&](std::size_t b) {
    return std::span<const std::size_t>(order).subspan(b * bs, std::min(bs, n - b * bs));
  };
  const bool prefetch = num_threads() > 1;

  double loss_sum = 0;
  std::size_t correct = 0;
  Tensor batch = make_batch(data, indices_of(0));
  for (std::size_t b = 0; b < batches; ++b) {
    std::future<Tensor> next;
    if (prefetch && b + 1 < batches) {
      next = std::async(std::launch::async, [&, b] { return make_batch(data, indices_of(b + 1)); });
    }
    const auto idx = indices_of(b);
    std::vector<float> labels(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) labels[k] = data.labels[idx[k]];

    auto fwd = forward(model_, batch);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      loss_sum += bce_loss(fwd.scores[k], labels[k]);
      correct += ((fwd.scores[k] >= 0.5f ? 1.0f : 0.0f) == labels[k]) ? 1 : 0;
    }
    const auto grads = backward(model_, fwd.cache, std::span<const float>(labels));
    fwd = {};
    adam_step(model_.params, grads, state_, ++step_, config_);

    if (b + 1 < batches) batch = prefetch ? next.get() : make_batch(data, indices_of(b + 1));
  }
  return {epoch_, loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n),
          seconds_since(start)};
}

TrainResult train(const ImageSet& data, Model model, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw DataError("training set is empty");
  const auto start = Clock::now();
  TrainResult result{std::move(model), {}, 0.0};
  Trainer trainer(result.model, config);
  for (std::size_t e = 0; e < config.epochs; ++e) result.history.push_back(trainer.run_epoch(data));
  result.total_seconds = seconds_since(start);
  return result;
}

TrainResult train(std::span<const Sample> samples, Model model, const TrainConfig& config) {
  if (samples.empty()) throw DataError("training set is empty");
  return train(load_images(samples), std::move(model), config);
}

std::string history_to_csv(std::span<const EpochStats> history, bool include_time) {
  std::string out = "epoch,loss,train_acc,seconds\n";
  char buf[160];
  for (const EpochStats& e : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6f,%.3f\n", e.epoch, e.loss, e.accuracy, include_time ? e.seconds : 0.0);
    out += buf;
  }
  return out;
}

LatencyStats benchmark_single_image(const Model& model, const Tensor& image, std::size_t warmup, std::size_t iters) {
  if (iters < 30) throw ConfigError("benchmark needs at least 30 timed iterations");
  if (image.shape().n != 1) throw ShapeError("benchmark expects a single image, got " + image.shape().to_string());
  struct ThreadsGuard {
    int saved = num_threads();
    ThreadsGuard() { set_num_threads(1); }
    ~ThreadsGuard() { set_num_threads(saved); }
  } single_threaded;
  for (std::size_t i = 0; i < warmup; ++i) (void)predict(model, image);
  std::vector<double> times(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const auto start = Clock::now();
    const auto scores = predict(model, image);
    times[i] = seconds_since(start);
    if (scores.empty()) throw Error("forward produced no score");
  }
  LatencyStats s;
  s.iterations = iters;
  s.mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(iters);
  std::sort(times.begin(), times.end());
  auto rank = [&](double q) {
    const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(iters)));
    return times[std::clamp<std::size_t>(r, 1, iters) - 1];
  };
  s.p50 = rank(0.50);
  s.p95 = rank(0.95);
  return s;
}

}  // namespace shallownet
