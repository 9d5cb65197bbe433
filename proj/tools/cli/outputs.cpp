#include "cli/outputs.hpp"

#include <fstream>

#include "shallownet/error.hpp"

namespace fs = std::filesystem;

namespace shallownet::cli {

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) dir_ = ".";
  std::error_code ec;
  if (!fs::exists(dir_, ec)) {
    if (!fs::create_directories(dir_, ec) || ec) throw IoError("cannot create output directory " + dir_.string());
    created_dir_ = true;
  } else if (!fs::is_directory(dir_, ec)) {
    throw IoError("output path is not a directory: " + dir_.string());
  }
}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const fs::path& p : written_) {
    fs::remove(p, ec);
    fs::remove(fs::path(p) += ".tmp", ec);
  }
  if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

fs::path OutputSet::track(std::string_view name) {
  written_.push_back(path(name));
  return written_.back();
}

void OutputSet::write_text(std::string_view name, std::string_view text) {
  const fs::path target = track(name);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void OutputSet::write_png(std::string_view name, const Rgb8Image& image) {
  shallownet::write_png(track(name), image);
}

}  // namespace shallownet::cli
