#include "cli/run_config.hpp"

#include "shallownet/error.hpp"

namespace shallownet::cli {

void RunConfig::validate() const {
  arch_id();
  train.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split must lie strictly between 0 and 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

void add_run_options(CLI::App& app, RunConfig& c) {
  app.set_config("--config", "", "key=value file; flags given on the command line take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--data", c.data, "dataset root with Parasitized/ and Uninfected/");
  app.add_option("--arch", c.arch, "model architecture")->check(CLI::IsMember({"cnn1", "cnn2", "cnn3"}));
  app.add_option("--epochs", c.train.epochs)->capture_default_str();
  app.add_option("--batch", c.train.batch_size)->capture_default_str();
  app.add_option("--lr", c.train.learning_rate)->capture_default_str();
  app.add_option("--adam-beta1", c.train.adam.beta1)->capture_default_str();
  app.add_option("--adam-beta2", c.train.adam.beta2)->capture_default_str();
  app.add_option("--adam-epsilon", c.train.adam.epsilon)->capture_default_str();
  app.add_flag("--augment,!--no-augment", c.train.augment, "on-the-fly augmentation");
  app.add_option("--rotation", c.train.augment_params.rotation_max_deg, "max rotation, degrees")
      ->capture_default_str();
  app.add_option("--zoom-min", c.train.augment_params.zoom_min)->capture_default_str();
  app.add_option("--zoom-max", c.train.augment_params.zoom_max)->capture_default_str();
  app.add_option("--hflip", c.train.augment_params.hflip_prob, "horizontal flip probability")
      ->capture_default_str();
  app.add_option("--vflip", c.train.augment_params.vflip_prob, "vertical flip probability")->capture_default_str();
  app.add_flag("--shuffle,!--no-shuffle", c.train.shuffle_each_epoch, "reshuffle every epoch");
  app.add_option("--seed", c.train.seed)->capture_default_str();
  app.add_option("--split", c.split_ratio, "train fraction")->capture_default_str();
  app.add_option("--per-class", c.per_class, "balanced subset size per class (0 = all)")->capture_default_str();
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--threads", c.threads)->capture_default_str();
  app.add_flag("--deterministic", c.deterministic, "single-threaded numerics, no wall-clock values in artifacts");
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  const AugmentParams& a = c.train.augment_params;
  nlohmann::ordered_json j;
  j["data"] = c.data.generic_string();
  j["arch"] = c.arch;
  j["epochs"] = c.train.epochs;
  j["batch"] = c.train.batch_size;
  j["lr"] = c.train.learning_rate;
  j["adam"] = {{"beta1", c.train.adam.beta1}, {"beta2", c.train.adam.beta2}, {"epsilon", c.train.adam.epsilon}};
  j["augment"] = c.train.augment;
  j["augment_params"] = {{"rotation_max_deg", a.rotation_max_deg},
                         {"zoom_min", a.zoom_min},
                         {"zoom_max", a.zoom_max},
                         {"hflip_prob", a.hflip_prob},
                         {"vflip_prob", a.vflip_prob}};
  j["shuffle"] = c.train.shuffle_each_epoch;
  j["seed"] = c.train.seed;
  j["split"] = c.split_ratio;
  j["per_class"] = c.per_class;
  j["out"] = c.out.generic_string();
  j["threads"] = c.effective_threads();
  j["deterministic"] = c.deterministic;
  return j;
}

}  // namespace shallownet::cli
