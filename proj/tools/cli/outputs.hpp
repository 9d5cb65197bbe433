#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "shallownet/image.hpp"

namespace shallownet::cli {

// Files written by one command. Unless commit() is called, everything
// written through it is deleted again when it goes out of scope.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  ~OutputSet();
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  std::filesystem::path path(std::string_view name) const { return dir_ / name; }

  void write_text(std::string_view name, std::string_view text);
  void write_png(std::string_view name, const Rgb8Image& image);
  /// Registers a file written by someone else (e.g. save_model).
  std::filesystem::path track(std::string_view name);

  void commit() noexcept { committed_ = true; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
  bool created_dir_ = false;
  bool committed_ = false;
};

}  // namespace shallownet::cli
