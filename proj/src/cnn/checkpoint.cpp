#include "adinkra/cnn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "adinkra/core/crc32.hpp"

namespace adinkra::cnn {

namespace {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

// Serialization helpers. The format is little-endian; these encode
// explicitly byte by byte so the file layout does not depend on host
// endianness.
void put_bytes(std::vector<std::uint8_t>& out, const void* p,
               std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  out.insert(out.end(), b, b + n);
}

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  static_assert(std::is_integral_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(
        static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  put_le(out, bits);
}

void put_f32(std::vector<std::uint8_t>& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  put_le(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw TruncationError("checkpoint file ends prematurely");
  }

  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf.data() + pos, n);
    pos += n;
  }

  template <typename U>
  U get_le() {
    static_assert(std::is_integral_v<U>);
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += sizeof(U);
    return static_cast<U>(v);
  }

  double get_f64() {
    const std::uint64_t bits = get_le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  float get_f32() {
    const std::uint32_t bits = get_le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

void put_i64_list(std::vector<std::uint8_t>& out,
                  const std::vector<std::int64_t>& xs) {
  put_le(out, static_cast<std::uint32_t>(xs.size()));
  for (auto x : xs) put_le(out, x);
}

std::vector<std::int64_t> get_i64_list(Reader& r) {
  const std::uint32_t n = r.get_le<std::uint32_t>();
  std::vector<std::int64_t> xs(n);
  for (auto& x : xs) x = r.get_le<std::int64_t>();
  return xs;
}

void put_spec(std::vector<std::uint8_t>& out, const ModelSpec& spec) {
  put_le(out, spec.input_size);
  put_le(out, spec.input_channels);
  put_i64_list(out, spec.conv_channels);
  put_i64_list(out, spec.pool_after);
  put_i64_list(out, spec.fc_widths);
  put_f64(out, spec.dropout_p);
  put_le(out, spec.num_classes);
}

ModelSpec get_spec(Reader& r) {
  ModelSpec spec;
  spec.input_size = r.get_le<std::int64_t>();
  spec.input_channels = r.get_le<std::int64_t>();
  spec.conv_channels = get_i64_list(r);
  spec.pool_after = get_i64_list(r);
  spec.fc_widths = get_i64_list(r);
  spec.dropout_p = r.get_f64();
  spec.num_classes = r.get_le<std::int64_t>();
  return spec;
}

void put_history(std::vector<std::uint8_t>& out, const TrainHistory& h) {
  put_le(out, static_cast<std::uint32_t>(h.epochs.size()));
  for (const auto& e : h.epochs) {
    put_le(out, e.epoch);
    put_f64(out, e.train_loss);
    put_f64(out, e.train_acc);
    put_f64(out, e.val_loss);
    put_f64(out, e.val_acc);
    put_f64(out, e.seconds);
    put_le(out, e.peak_mem_bytes);
  }
  put_le(out, h.best_epoch);
  put_f64(out, h.best_val_acc);
}

TrainHistory get_history(Reader& r) {
  TrainHistory h;
  const std::uint32_t n = r.get_le<std::uint32_t>();
  h.epochs.resize(n);
  for (auto& e : h.epochs) {
    e.epoch = r.get_le<std::int64_t>();
    e.train_loss = r.get_f64();
    e.train_acc = r.get_f64();
    e.val_loss = r.get_f64();
    e.val_acc = r.get_f64();
    e.seconds = r.get_f64();
    e.peak_mem_bytes = r.get_le<std::int64_t>();
  }
  h.best_epoch = r.get_le<std::int64_t>();
  h.best_val_acc = r.get_f64();
  return h;
}

constexpr char kMagic[4] = {'A', 'D', 'N', 'K'};

}  // namespace

template <typename T>
void save_checkpoint(const ModelState<T>& model, const TrainHistory& history,
                     const std::string& path) {
  std::vector<std::uint8_t> out;
  put_bytes(out, kMagic, 4);
  put_le(out, kCheckpointVersion);
  put_spec(out, model.spec);
  put_le(out, model.seed);
  put_history(out, history);

  std::int64_t total = 0;
  for (const auto& p : model.params) total += p.value->numel();
  put_le(out, total);
  const std::size_t payload_begin = out.size();
  out.reserve(out.size() + static_cast<std::size_t>(total) * 4 + 4);
  for (const auto& p : model.params)
    for (const T v : p.value->values()) put_f32(out, static_cast<float>(v));
  const std::uint32_t crc =
      core::crc32(out.data() + payload_begin, out.size() - payload_begin);
  put_le(out, crc);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write checkpoint: " + path);
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("checkpoint write failed: " + path);
}

template <typename T>
std::pair<ModelState<T>, TrainHistory> load_checkpoint(
    const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> buf(
      (std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  Reader r{buf};

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw InputError("not a checkpoint file: " + path);
  const std::uint16_t version = r.get_le<std::uint16_t>();
  if (version != kCheckpointVersion)
    throw VersionError("unsupported checkpoint format version " +
                       std::to_string(version) + " (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  const ModelSpec spec = get_spec(r);
  const std::uint64_t seed = r.get_le<std::uint64_t>();
  TrainHistory history = get_history(r);

  ModelState<T> model = detail::allocate_model<T>(spec, seed);
  const std::int64_t declared = r.get_le<std::int64_t>();
  if (declared != model.param_count())
    throw InputError("checkpoint parameter count " + std::to_string(declared) +
                     " does not match the architecture (" +
                     std::to_string(model.param_count()) + ")");
  const std::size_t payload_begin = r.pos;
  const std::size_t payload_bytes = static_cast<std::size_t>(declared) * 4;
  r.need(payload_bytes + 4);  // values plus the trailing checksum
  const std::uint32_t want_crc =
      core::crc32(buf.data() + payload_begin, payload_bytes);
  for (auto& p : model.params)
    for (auto& v : p.value->values()) v = static_cast<T>(r.get_f32());
  const std::uint32_t stored_crc = r.get_le<std::uint32_t>();
  if (stored_crc != want_crc)
    throw ChecksumError("checkpoint payload checksum mismatch in " + path);
  return {std::move(model), std::move(history)};
}

template void save_checkpoint<float>(const ModelState<float>&,
                                     const TrainHistory&, const std::string&);
template void save_checkpoint<double>(const ModelState<double>&,
                                      const TrainHistory&,
                                      const std::string&);
template std::pair<ModelState<float>, TrainHistory> load_checkpoint<float>(
    const std::string&);
template std::pair<ModelState<double>, TrainHistory> load_checkpoint<double>(
    const std::string&);

}  // namespace adinkra::cnn
