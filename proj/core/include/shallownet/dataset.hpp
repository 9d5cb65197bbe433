#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "shallownet/tensor.hpp"

namespace shallownet {

inline constexpr int kParasitized = 1;
inline constexpr int kUninfected = 0;

enum class Split : std::uint8_t { unassigned, train, test };

std::string_view to_string(Split split) noexcept;

struct Sample {
  std::filesystem::path path;
  int label = kUninfected;  ///< taken from the parent directory name only
  Split split = Split::unassigned;

  bool operator==(const Sample&) const = default;
};

struct DatasetManifest {
  std::vector<Sample> samples;  ///< sorted by path
  std::uint64_t seed = 0;       ///< seed of the last split
  std::size_t skipped = 0;      ///< non-PNG files ignored during ingest

  std::size_t count(int label) const noexcept;
  std::size_t count(int label, Split split) const noexcept;
  std::size_t count(Split split) const noexcept;
  std::vector<Sample> subset(Split split) const;

  bool operator==(const DatasetManifest&) const = default;
};

/// Scans root/Parasitized and root/Uninfected (names matched
/// case-insensitively) for *.png files. Other files are counted in
/// `skipped`. The result is sorted by path, so enumeration order never leaks
/// into later seeded steps.
DatasetManifest ingest(const std::filesystem::path& root);

/// Seeded Fisher-Yates permutation of the sorted samples; the first
/// round(ratio * N) go to train, the rest to test. Not stratified.
DatasetManifest split(const DatasetManifest& manifest, double ratio, std::uint64_t seed);

/// `per_class` samples of each label drawn with a seeded permutation, the
/// result re-sorted by path and left unassigned.
DatasetManifest balanced_subset(const DatasetManifest& manifest, std::size_t per_class, std::uint64_t seed);

/// CSV with header `path,label,split`.
std::string manifest_to_csv(const DatasetManifest& manifest);
DatasetManifest manifest_from_csv(const std::string& text);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Decoded, resized images held in memory with float labels.
struct ImageSet {
  std::vector<Tensor> images;  ///< each (1, 3, 64, 64)
  std::vector<float> labels;

  std::size_t size() const noexcept { return images.size(); }
};

/// Decodes every sample with load_image, using up to num_threads() workers.
/// Decode failures surface as FormatError naming the file.
ImageSet load_images(std::span<const Sample> samples);

}  // namespace shallownet
