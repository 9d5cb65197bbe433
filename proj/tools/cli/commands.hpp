#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cli/run_config.hpp"
#include "shallownet/gradcam.hpp"

namespace shallownet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitData = 2;

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;  // default: manifest.csv beside the checkpoint
  std::filesystem::path scores;    // score,label CSV; bypasses the model entirely
  std::string name;                // row label; default: the checkpoint's arch
  double training_seconds = -1;    // < 0: taken from summary.json beside the checkpoint
};

struct PredictOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path image;
};

struct GradcamOptions {
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> images;
  CamTarget target = CamTarget::parasitized;
  double alpha = 0.4;
};

struct BenchOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path image;  // default: a seeded random input
  std::size_t warmup = 10;
  std::size_t iterations = 100;
};

// Each command returns a process exit code and reports errors on stderr.
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config, const EvalOptions& options);
int cmd_predict(const RunConfig& config, const PredictOptions& options);
int cmd_gradcam(const RunConfig& config, const GradcamOptions& options);
int cmd_bench(const RunConfig& config, const BenchOptions& options);

/// Parses argv and dispatches to one subcommand.
int run(int argc, char** argv);

}  // namespace shallownet::cli
