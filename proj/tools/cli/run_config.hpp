#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "shallownet/model.hpp"
#include "shallownet/train.hpp"

namespace shallownet::cli {

// Everything a run needs. Filled from an optional key=value file first, then
// from command-line flags; keys are the flag names without the dashes.
struct RunConfig {
  std::filesystem::path data;
  std::string arch = "cnn3";
  TrainConfig train;
  double split_ratio = 0.8;
  std::size_t per_class = 0;  // 0 = use every image
  std::filesystem::path out = "run";
  int threads = 1;
  bool deterministic = false;

  ArchId arch_id() const { return parse_arch(arch); }
  /// Threads actually used; --deterministic pins this to 1.
  int effective_threads() const noexcept { return deterministic ? 1 : threads; }
  void validate() const;
};

/// Registers the shared run flags and --config on the root command.
void add_run_options(CLI::App& app, RunConfig& config);

nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace shallownet::cli
