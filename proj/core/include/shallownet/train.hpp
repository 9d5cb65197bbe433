#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shallownet/augment.hpp"
#include "shallownet/dataset.hpp"
#include "shallownet/model.hpp"

namespace shallownet {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  AdamConfig adam;
  bool augment = false;
  AugmentParams augment_params;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;  ///< 1-based
  double loss = 0;        ///< mean BCE over the epoch's samples
  double accuracy = 0;    ///< at threshold 0.5, measured before each step's update
  double seconds = 0;     ///< wall clock of this epoch
};

/// Binary cross-entropy with the score clamped to [1e-7, 1 - 1e-7].
double bce_loss(double score, double label) noexcept;

template <typename T>
struct AdamState {
  Gradients<T> m;
  Gradients<T> v;
};

/// One Adam update with bias correction at step `t` (1-based):
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Moment tensors are created on first use.
template <typename T>
void adam_step(std::vector<LayerParams<T>>& params, const Gradients<T>& grads, AdamState<T>& state, std::uint64_t t,
               const TrainConfig& config);

/// Stateful epoch loop. Owns the optimizer state; mutates the model in place.
class Trainer {
 public:
  Trainer(Model& model, TrainConfig config);

  /// One pass over `data` in ceil(N / batch_size) steps (last partial batch
  /// kept). Augmentation, when enabled, is drawn per sample from
  /// augment_seed(seed, epoch, sample_index).
  EpochStats run_epoch(const ImageSet& data);

  std::size_t epochs_run() const noexcept { return epoch_; }
  std::uint64_t steps() const noexcept { return step_; }

 private:
  Tensor make_batch(const ImageSet& data, std::span<const std::size_t> indices) const;

  Model& model_;
  TrainConfig config_;
  AdamState<float> state_;
  std::size_t epoch_ = 0;
  std::uint64_t step_ = 0;
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
  double total_seconds = 0;
};

TrainResult train(const ImageSet& data, Model model, const TrainConfig& config);
/// Decodes the samples (see load_images) and trains on them.
TrainResult train(std::span<const Sample> samples, Model model, const TrainConfig& config);

/// `epoch,loss,train_acc,seconds`. With `include_time == false` the seconds
/// column is written as 0 so the file is reproducible byte for byte.
std::string history_to_csv(std::span<const EpochStats> history, bool include_time = true);

struct LatencyStats {
  double mean = 0;
  double p50 = 0;
  double p95 = 0;
  std::size_t iterations = 0;
};

/// Forward-only timing of one (1, 3, H, W) image on the calling thread.
/// Requires iters >= 30.
LatencyStats benchmark_single_image(const Model& model, const Tensor& image, std::size_t warmup,
                                    std::size_t iters);

}  // namespace shallownet
