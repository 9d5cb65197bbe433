#include "shallownet/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace shallownet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'N', 'E', 'T'};

template <typename U>
void put(std::vector<std::uint8_t>& out, U value) {
  std::uint8_t raw[sizeof(U)];
  std::memcpy(raw, &value, sizeof(U));
  out.insert(out.end(), raw, raw + sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    if (remaining() < sizeof(U)) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                        std::to_string(pos_));
    }
    U value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return value;
  }

  void read_floats(std::span<float> dst) {
    const std::size_t n = dst.size_bytes();
    if (remaining() < n) {
      throw FormatError("checkpoint truncated inside parameter data at byte " + std::to_string(pos_));
    }
    std::memcpy(dst.data(), bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Record {
  std::uint16_t layer;
  Tensor values;
};

std::size_t conv_blocks(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const auto& l : spec.layers) n += l.kind == LayerKind::maxpool2x2 ? 1 : 0;
  return n;
}

std::size_t last_conv_width(const ModelSpec& spec) {
  std::size_t w = 0;
  for (const auto& l : spec.layers)
    if (l.kind == LayerKind::conv2d) w = l.units;
  return w;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  if (!model.spec.arch) throw ConfigError("only cnn1/cnn2/cnn3 models can be saved");
  const auto shapes = parameter_shapes(model.spec);
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint16_t>(out, kCheckpointVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(*model.spec.arch));
  put<std::uint64_t>(out, model.seed);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    if (!model.spec.layers[i].has_parameters()) continue;
    for (const Tensor* t : {&model.params[i].weights, &model.params[i].bias}) {
      const Shape& s = t->shape();
      put<std::uint16_t>(out, static_cast<std::uint16_t>(i));
      for (std::size_t e : {s.n, s.c, s.h, s.w}) put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
      const auto* raw = reinterpret_cast<const std::uint8_t*>(t->data().data());
      out.insert(out.end(), raw, raw + t->data().size_bytes());
    }
  }
  return out;
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(in.get<std::uint8_t>("magic"));
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not a checkpoint: magic bytes are not 'SNET'");
  const auto version = in.get<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto arch_byte = in.get<std::uint8_t>("arch_id");
  if (arch_byte < 1 || arch_byte > 3) throw FormatError("unknown arch_id byte " + std::to_string(arch_byte));
  const auto arch = static_cast<ArchId>(arch_byte);
  const auto seed = in.get<std::uint64_t>("seed");

  std::vector<Record> records;
  while (in.remaining() > 0) {
    Record r;
    r.layer = in.get<std::uint16_t>("layer index");
    Shape s;
    s.n = in.get<std::uint32_t>("shape");
    s.c = in.get<std::uint32_t>("shape");
    s.h = in.get<std::uint32_t>("shape");
    s.w = in.get<std::uint32_t>("shape");
    if (s.size() > in.remaining() / sizeof(float)) {
      throw FormatError("checkpoint truncated: record for layer " + std::to_string(r.layer) + " declares " +
                        s.to_string() + " but only " + std::to_string(in.remaining()) + " bytes remain");
    }
    r.values = Tensor(s);
    in.read_floats(r.values.data());
    records.push_back(std::move(r));
  }

  // Recover the input size from the first dense record: in_features = c * side^2.
  const ModelSpec base = arch_spec(arch);
  const std::size_t blocks = conv_blocks(base);
  const std::size_t width = last_conv_width(base);
  std::size_t input_size = 0;
  for (const Record& r : records) {
    const auto& layers = base.layers;
    if (r.layer < layers.size() && layers[r.layer].kind == LayerKind::dense) {
      const std::size_t features = r.values.shape().n;
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(features / width))));
      if (side * side * width == features) input_size = side << blocks;
      break;
    }
  }
  const auto inconsistent = [&](const std::string& why) {
    return FormatError("checkpoint shape table inconsistent with arch_id " + std::string(to_string(arch)) + ": " +
                       why);
  };
  if (input_size == 0) throw inconsistent("cannot derive input size from dense layer");

  Model model{arch_spec(arch, input_size), {}, seed};
  model.params.resize(model.spec.layers.size());
  const auto shapes = parameter_shapes(model.spec);
  std::size_t next = 0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!model.spec.layers[i].has_parameters()) continue;
    Tensor* slots[2] = {&model.params[i].weights, &model.params[i].bias};
    const Shape expect[2] = {shapes[i].first, shapes[i].second};
    for (int k = 0; k < 2; ++k, ++next) {
      if (next >= records.size()) throw inconsistent("missing parameters for layer " + std::to_string(i));
      Record& r = records[next];
      if (r.layer != i || r.values.shape() != expect[k]) {
        throw inconsistent("record " + std::to_string(next) + " (layer " + std::to_string(r.layer) + ", " +
                           r.values.shape().to_string() + ") expected layer " + std::to_string(i) + ", " +
                           expect[k].to_string());
      }
      *slots[k] = std::move(r.values);
    }
  }
  if (next != records.size()) throw inconsistent("unexpected extra records");
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace shallownet
