#include "shallownet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "shallownet/image.hpp"
#include "shallownet/rng.hpp"

namespace shallownet {

namespace fs = std::filesystem;

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unassigned: return "";
  }
  return "";
}

std::size_t DatasetManifest::count(int label) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label; }));
}

std::size_t DatasetManifest::count(int label, Split sp) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [&](const Sample& s) { return s.label == label && s.split == sp; }));
}

std::size_t DatasetManifest::count(Split sp) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.split == sp; }));
}

std::vector<Sample> DatasetManifest::subset(Split sp) const {
  std::vector<Sample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out), [&](const Sample& s) { return s.split == sp; });
  return out;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<fs::path> find_class_dir(const fs::path& root, const std::string& name) {
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && lower(entry.path().filename().string()) == name) return entry.path();
  }
  return std::nullopt;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

void sort_by_path(std::vector<Sample>& samples) {
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.path.generic_string() < b.path.generic_string(); });
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

DatasetManifest ingest(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw DataError("no images found: dataset root " + root.string() + " is not a directory");
  }
  DatasetManifest m;
  const std::pair<const char*, int> classes[] = {{"parasitized", kParasitized}, {"uninfected", kUninfected}};
  for (const auto& [name, label] : classes) {
    const auto dir = find_class_dir(root, name);
    if (!dir) throw DataError("missing directory " + (root / name).string() + " (expected Parasitized/ and Uninfected/)");
    for (const auto& entry : fs::directory_iterator(*dir)) {
      if (!entry.is_regular_file()) continue;
      if (lower(entry.path().extension().string()) != ".png") {
        ++m.skipped;
        continue;
      }
      m.samples.push_back({entry.path(), label, Split::unassigned});
    }
  }
  if (m.samples.empty()) throw DataError("no images found under " + root.string());
  sort_by_path(m.samples);
  return m;
}

DatasetManifest split(const DatasetManifest& manifest, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie strictly between 0 and 1");
  const std::size_t n = manifest.samples.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw DataError("split of " + std::to_string(n) + " samples at ratio " + std::to_string(ratio) +
                    " leaves one side empty");
  }
  DatasetManifest out = manifest;
  out.seed = seed;
  const auto order = permutation(n, seed);
  for (std::size_t r = 0; r < n; ++r) out.samples[order[r]].split = r < n_train ? Split::train : Split::test;
  return out;
}

DatasetManifest balanced_subset(const DatasetManifest& manifest, std::size_t per_class, std::uint64_t seed) {
  DatasetManifest out;
  out.seed = seed;
  for (int label : {kParasitized, kUninfected}) {
    std::vector<Sample> pool;
    for (const Sample& s : manifest.samples)
      if (s.label == label) pool.push_back(s);
    if (pool.size() < per_class) {
      throw DataError("balanced subset needs " + std::to_string(per_class) + " samples of label " +
                      std::to_string(label) + ", only " + std::to_string(pool.size()) + " available");
    }
    const auto order = permutation(pool.size(), hash_seed({seed, static_cast<std::uint64_t>(label)}));
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s = pool[order[i]];
      s.split = Split::unassigned;
      out.samples.push_back(std::move(s));
    }
  }
  sort_by_path(out.samples);
  return out;
}

std::string manifest_to_csv(const DatasetManifest& manifest) {
  std::string out = "path,label,split\n";
  for (const Sample& s : manifest.samples) {
    out += csv_field(s.path.generic_string());
    out += ',';
    out += std::to_string(s.label);
    out += ',';
    out += to_string(s.split);
    out += '\n';
  }
  return out;
}

DatasetManifest manifest_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || parse_csv_line(line) != std::vector<std::string>{"path", "label", "split"}) {
    throw FormatError("manifest must start with header 'path,label,split'");
  }
  DatasetManifest m;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = parse_csv_line(line);
    if (f.size() != 3) throw FormatError("manifest line " + std::to_string(line_no) + ": expected 3 fields");
    Sample s;
    s.path = f[0];
    if (f[1] == "1") {
      s.label = kParasitized;
    } else if (f[1] == "0") {
      s.label = kUninfected;
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    if (f[2] == "train") {
      s.split = Split::train;
    } else if (f[2] == "test") {
      s.split = Split::test;
    } else if (f[2].empty()) {
      s.split = Split::unassigned;
    } else {
      throw FormatError("manifest line " + std::to_string(line_no) + ": unknown split '" + f[2] + "'");
    }
    m.samples.push_back(std::move(s));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << manifest_to_csv(manifest);
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return manifest_from_csv(ss.str());
}

ImageSet load_images(std::span<const Sample> samples) {
  ImageSet set;
  set.images.resize(samples.size());
  set.labels.resize(samples.size());
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), samples.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < samples.size(); i += stride) {
      set.images[i] = load_image(samples[i].path);
      set.labels[i] = static_cast<float>(samples[i].label);
    }
  };
  if (threads <= 1) {
    work(0, 1);
    return set;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return set;
}

}  // namespace shallownet
