#include "cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli/outputs.hpp"
#include "shallownet/checkpoint.hpp"
#include "shallownet/dataset.hpp"
#include "shallownet/error.hpp"
#include "shallownet/metrics.hpp"
#include "shallownet/rng.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace shallownet::cli {
namespace {

constexpr std::size_t kScoreChunk = 256;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> score_samples(const Model& model, std::span<const Sample> samples) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); i += kScoreChunk) {
    const auto chunk = samples.subspan(i, std::min(kScoreChunk, samples.size() - i));
    const ImageSet set = load_images(chunk);
    const Tensor batch = stack<float>(set.images);
    for (float s : predict(model, batch)) scores.push_back(s);
  }
  return scores;
}

struct ScoreTable {
  std::vector<double> scores;
  std::vector<int> labels;
};

ScoreTable read_scores(const fs::path& path) {
  std::istringstream in(read_text(path));
  ScoreTable t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (row == 1 && line.rfind("score", 0) == 0)) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(line);
      t.scores.push_back(std::stod(line.substr(0, comma)));
      const int label = std::stoi(line.substr(comma + 1));
      if (label != kParasitized && label != kUninfected) throw std::invalid_argument(line);
      t.labels.push_back(label);
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(row) + ": expected `score,label`");
    }
  }
  if (t.scores.empty()) throw DataError("no scores in " + path.string());
  return t;
}

double stored_training_seconds(const fs::path& checkpoint) {
  const fs::path summary = checkpoint.parent_path() / "summary.json";
  std::error_code ec;
  if (!fs::exists(summary, ec)) return 0.0;
  const auto j = nlohmann::json::parse(read_text(summary), nullptr, false);
  if (j.is_discarded() || !j.contains("training_seconds")) return 0.0;
  return j["training_seconds"].get<double>();
}

}  // namespace

int cmd_train(const RunConfig& config) {
  return guarded([&] {
    config.validate();
    if (config.data.empty()) throw ConfigError("--data is required");
    set_num_threads(config.effective_threads());

    DatasetManifest manifest = ingest(config.data);
    if (config.per_class > 0) manifest = balanced_subset(manifest, config.per_class, config.train.seed);
    manifest = split(manifest, config.split_ratio, config.train.seed);
    const std::vector<Sample> train_samples = manifest.subset(Split::train);

    std::cerr << "train " << config.arch << ": " << train_samples.size() << " train / "
              << manifest.count(Split::test) << " test images\n";
    const ImageSet data = load_images(train_samples);

    Model model = build_model(config.arch_id(), config.train.seed);
    Trainer trainer(model, config.train);
    std::vector<EpochStats> history;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t e = 0; e < config.train.epochs; ++e) {
      history.push_back(trainer.run_epoch(data));
      const EpochStats& s = history.back();
      std::fprintf(stderr, "epoch %zu/%zu  loss %.5f  acc %.4f  %.1fs\n", s.epoch, config.train.epochs, s.loss,
                   s.accuracy, s.seconds);
    }
    const double elapsed = seconds_since(t0);
    const bool timed = !config.deterministic;

    OutputSet out(config.out);
    save_model(model, out.track("model.snet"));
    out.write_text("manifest.csv", manifest_to_csv(manifest));
    out.write_text("history.csv", history_to_csv(history, timed));

    Json summary;
    summary["config"] = to_json(config);
    summary["dataset"] = {{"images", manifest.samples.size()},
                          {"parasitized", manifest.count(kParasitized)},
                          {"uninfected", manifest.count(kUninfected)},
                          {"train", manifest.count(Split::train)},
                          {"test", manifest.count(Split::test)},
                          {"skipped_files", manifest.skipped}};
    summary["parameters"] = model.parameter_count();
    summary["steps"] = trainer.steps();
    summary["final_loss"] = history.back().loss;
    summary["final_train_accuracy"] = history.back().accuracy;
    summary["training_seconds"] = timed ? elapsed : 0.0;
    out.write_text("summary.json", summary.dump(2) + "\n");
    out.commit();
    std::cerr << "wrote " << config.out.string() << " (" << elapsed << " s)\n";
    return kExitOk;
  });
}

int cmd_eval(const RunConfig& config, const EvalOptions& opt) {
  return guarded([&] {
    set_num_threads(config.effective_threads());
    std::vector<double> scores;
    std::vector<int> labels;
    std::string name = opt.name;
    double per_image = 0.0;
    double train_seconds = opt.training_seconds < 0 ? 0.0 : opt.training_seconds;

    if (!opt.scores.empty()) {
      ScoreTable t = read_scores(opt.scores);
      scores = std::move(t.scores);
      labels = std::move(t.labels);
      if (name.empty()) name = opt.scores.stem().string();
    } else {
      if (opt.checkpoint.empty()) throw ConfigError("eval needs --model or --scores");
      const Model model = load_model(opt.checkpoint);
      const fs::path manifest_path =
          opt.manifest.empty() ? opt.checkpoint.parent_path() / "manifest.csv" : opt.manifest;
      const DatasetManifest manifest = read_manifest(manifest_path);
      std::vector<Sample> test = manifest.subset(Split::test);
      if (test.empty()) throw DataError("no images in the test split of " + manifest_path.string());
      scores = score_samples(model, test);
      for (const Sample& s : test) labels.push_back(s.label);
      if (name.empty()) name = std::string(to_string(*model.spec.arch));
      if (opt.training_seconds < 0) train_seconds = stored_training_seconds(opt.checkpoint);
      if (!config.deterministic) {
        per_image = benchmark_single_image(model, load_image(test.front().path), 5, 30).mean;
      }
    }
    if (config.deterministic) train_seconds = 0.0;

    const MetricsReport rep = report(confusion(scores, labels));
    Json metrics = Json::parse(report_to_json(rep));
    std::optional<RocCurve> roc;
    try {
      roc = roc_curve(scores, labels);
      metrics["auc"] = roc->auc;
    } catch (const DataError& e) {
      std::cerr << "warning: " << e.what() << "; ROC skipped\n";
      metrics["auc"] = nullptr;
    }
    metrics["samples"] = scores.size();
    metrics["training_seconds"] = train_seconds;
    metrics["per_image_seconds"] = per_image;

    OutputSet out(config.out);
    out.write_text("metrics.json", metrics.dump(2) + "\n");
    out.write_text("results.csv", table_row_header() + table_row_csv(name, rep, train_seconds, per_image));
    if (roc) {
      out.write_text("roc.csv", roc_to_csv(*roc));
      out.write_text("roc.svg", roc_to_svg(*roc, name));
    }
    out.commit();
    std::printf("%s", table_row_csv(name, rep, train_seconds, per_image).c_str());
    return kExitOk;
  });
}

int cmd_predict(const RunConfig& config, const PredictOptions& opt) {
  return guarded([&] {
    set_num_threads(config.effective_threads());
    const Model model = load_model(opt.checkpoint);
    const float p = predict(model, load_image(opt.image)).front();
    Json line;
    line["image"] = opt.image.generic_string();
    line["label"] = p >= 0.5f ? "parasitized" : "uninfected";
    line["probability"] = static_cast<double>(p);
    std::printf("%s\n", line.dump().c_str());
    return kExitOk;
  });
}

int cmd_gradcam(const RunConfig& config, const GradcamOptions& opt) {
  return guarded([&] {
    set_num_threads(config.effective_threads());
    const Model model = load_model(opt.checkpoint);
    OutputSet out(config.out);
    for (const fs::path& path : opt.images) {
      const Tensor image = load_image(path);
      const Heatmap cam = gradcam(model, image, opt.target);
      const std::string stem = path.stem().string();
      out.write_png(stem + "_cam.png", overlay(cam, image, opt.alpha));
      out.write_text(stem + "_cam.csv", heatmap_to_csv(cam));
      Json line;
      line["image"] = path.generic_string();
      line["probability"] = static_cast<double>(predict(model, image).front());
      line["degenerate"] = cam.degenerate;
      std::printf("%s\n", line.dump().c_str());
    }
    out.commit();
    return kExitOk;
  });
}

int cmd_bench(const RunConfig& config, const BenchOptions& opt) {
  return guarded([&] {
    const Model model = load_model(opt.checkpoint);
    const std::size_t side = model.spec.in_height;
    Tensor image(Shape{1, model.spec.in_channels, side, model.spec.in_width});
    if (opt.image.empty()) {
      SplitMix64 rng(config.train.seed);
      for (float& v : image.data()) v = static_cast<float>(rng.uniform());
    } else {
      image = load_image(opt.image, side);
    }
    const LatencyStats s = benchmark_single_image(model, image, opt.warmup, opt.iterations);
    Json j;
    j["arch"] = to_string(*model.spec.arch);
    j["mean_s"] = s.mean;
    j["p50_s"] = s.p50;
    j["p95_s"] = s.p95;
    j["iterations"] = s.iterations;
    j["threads"] = 1;
    std::printf("%s\n", j.dump().c_str());
    return kExitOk;
  });
}

int run(int argc, char** argv) {
  CLI::App app{"Shallow CNN malaria cell classifier"};
  app.fallthrough();
  app.require_subcommand(1);
  RunConfig config;
  add_run_options(app, config);

  auto* train = app.add_subcommand("train", "ingest, split, train; writes model.snet, manifest.csv, history.csv, "
                                            "summary.json");

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "score the test split; writes metrics.json, results.csv, roc.csv, roc.svg");
  eval->add_option("--model", eval_opt.checkpoint, "checkpoint")->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_opt.manifest)->check(CLI::ExistingFile);
  eval->add_option("--scores", eval_opt.scores, "precomputed score,label CSV")->check(CLI::ExistingFile);
  eval->add_option("--name", eval_opt.name, "model name in results.csv");
  eval->add_option("--training-seconds", eval_opt.training_seconds);

  PredictOptions predict_opt;
  auto* predict_cmd = app.add_subcommand("predict", "classify one image; prints a JSON line");
  predict_cmd->add_option("--model", predict_opt.checkpoint)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("image", predict_opt.image)->required();

  GradcamOptions cam_opt;
  std::string target = "parasitized";
  auto* cam = app.add_subcommand("gradcam", "write <stem>_cam.png and <stem>_cam.csv per image");
  cam->add_option("--model", cam_opt.checkpoint)->required()->check(CLI::ExistingFile);
  cam->add_option("--target", target)->check(CLI::IsMember({"parasitized", "uninfected"}))->capture_default_str();
  cam->add_option("--alpha", cam_opt.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cam->add_option("images", cam_opt.images)->required();

  BenchOptions bench_opt;
  auto* bench = app.add_subcommand("bench", "single-image forward latency on one thread");
  bench->add_option("--model", bench_opt.checkpoint)->required()->check(CLI::ExistingFile);
  bench->add_option("--image", bench_opt.image)->check(CLI::ExistingFile);
  bench->add_option("--warmup", bench_opt.warmup)->capture_default_str();
  bench->add_option("--iters", bench_opt.iterations)->check(CLI::Range(30, 1000000))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitFailure;
  }

  if (train->parsed()) return cmd_train(config);
  if (eval->parsed()) return cmd_eval(config, eval_opt);
  if (predict_cmd->parsed()) return cmd_predict(config, predict_opt);
  if (cam->parsed()) {
    cam_opt.target = target == "uninfected" ? CamTarget::uninfected : CamTarget::parasitized;
    return cmd_gradcam(config, cam_opt);
  }
  return cmd_bench(config, bench_opt);
}

}  // namespace shallownet::cli
