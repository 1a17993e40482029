#include "adinkra/ml/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace adinkra::ml {

void validate(const FeatureMatrix& m, std::int64_t num_classes) {
  if (m.rows < 0 || m.dim < 0)
    throw PreconditionError("feature matrix: negative extent");
  if (static_cast<std::int64_t>(m.values.size()) != m.rows * m.dim)
    throw PreconditionError(
        "feature matrix: value count " + std::to_string(m.values.size()) +
        " does not match " + std::to_string(m.rows) + "x" +
        std::to_string(m.dim));
  if (!m.labels.empty()) {
    if (static_cast<std::int64_t>(m.labels.size()) != m.rows)
      throw PreconditionError("feature matrix: " +
                              std::to_string(m.labels.size()) +
                              " labels for " + std::to_string(m.rows) +
                              " rows");
    for (const auto label : m.labels) {
      if (label < 0 || (num_classes >= 0 && label >= num_classes))
        throw PreconditionError("feature matrix: label " +
                                std::to_string(label) + " out of range");
    }
  }
}

std::int64_t infer_num_classes(const FeatureMatrix& m) {
  std::int64_t top = -1;
  for (const auto label : m.labels) top = label > top ? label : top;
  return top + 1;
}

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_i64(std::string& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t u = 0;
  std::memcpy(&u, &v, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw TruncationError("feature file ends after " +
                            std::to_string(buf.size()) + " bytes");
  }
  std::uint16_t get_u16() {
    need(2);
    const auto b0 = static_cast<unsigned char>(buf[pos]);
    const auto b1 = static_cast<unsigned char>(buf[pos + 1]);
    pos += 2;
    return static_cast<std::uint16_t>(b0 | (b1 << 8));
  }
  std::int64_t get_i64() {
    need(8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 8;
    return static_cast<std::int64_t>(u);
  }
  float get_f32() {
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i)
      u |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i]))
           << (8 * i);
    pos += 4;
    float v = 0.0f;
    std::memcpy(&v, &u, 4);
    return v;
  }
};

}  // namespace

void save_features(const FeatureMatrix& m, const std::string& path) {
  validate(m);
  if (static_cast<std::int64_t>(m.labels.size()) != m.rows)
    throw PreconditionError("save_features: matrix has no labels");
  std::string out;
  out.reserve(14 + m.labels.size() * 8 + m.values.size() * 4);
  out += "ADNF";
  put_u16(out, kFeatureFileVersion);
  put_i64(out, m.rows);
  put_i64(out, m.dim);
  for (const auto label : m.labels) put_i64(out, label);
  for (const auto v : m.values) put_f32(out, v);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file || !file.write(out.data(), static_cast<std::streamsize>(out.size())))
    throw IoError("cannot write feature file " + path);
}

FeatureMatrix load_features(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot open feature file " + path);
  std::string buf((std::istreambuf_iterator<char>(file)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};
  r.need(4);
  if (buf.compare(0, 4, "ADNF") != 0)
    throw InputError(path + " is not a feature file");
  r.pos = 4;
  const auto version = r.get_u16();
  if (version != kFeatureFileVersion)
    throw VersionError("feature file " + path + " has version " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kFeatureFileVersion));
  FeatureMatrix m;
  m.rows = r.get_i64();
  m.dim = r.get_i64();
  if (m.rows < 0 || m.dim < 0)
    throw InputError("feature file " + path + " declares negative extents");
  const auto rows = static_cast<std::size_t>(m.rows);
  const auto count = static_cast<std::size_t>(m.rows) *
                     static_cast<std::size_t>(m.dim);
  r.need(rows * 8 + count * 4);
  if (r.buf.size() != r.pos + rows * 8 + count * 4)
    throw InputError("feature file " + path + " has trailing bytes");
  m.labels.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) m.labels.push_back(r.get_i64());
  m.values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) m.values.push_back(r.get_f32());
  validate(m);
  return m;
}

Standardizer Standardizer::fit(const FeatureMatrix& train) {
  validate(train);
  if (train.rows == 0)
    throw PreconditionError("standardizer: empty training matrix");
  Standardizer s;
  s.mean.assign(static_cast<std::size_t>(train.dim), 0.0);
  s.inv_std.assign(static_cast<std::size_t>(train.dim), 0.0);
  for (std::int64_t i = 0; i < train.rows; ++i) {
    const float* x = train.row(i);
    for (std::int64_t j = 0; j < train.dim; ++j) s.mean[j] += x[j];
  }
  for (auto& v : s.mean) v /= static_cast<double>(train.rows);
  for (std::int64_t i = 0; i < train.rows; ++i) {
    const float* x = train.row(i);
    for (std::int64_t j = 0; j < train.dim; ++j) {
      const double d = x[j] - s.mean[j];
      s.inv_std[j] += d * d;
    }
  }
  for (auto& v : s.inv_std) {
    const double stddev = std::sqrt(v / static_cast<double>(train.rows));
    v = 1.0 / (stddev > 1e-8 ? stddev : 1e-8);
  }
  return s;
}

FeatureMatrix Standardizer::transform(const FeatureMatrix& m) const {
  validate(m);
  if (m.dim != static_cast<std::int64_t>(mean.size()))
    throw PreconditionError("standardizer: fitted on dimension " +
                            std::to_string(mean.size()) + ", got " +
                            std::to_string(m.dim));
  FeatureMatrix out = m;
  for (std::int64_t i = 0; i < m.rows; ++i) {
    float* x = out.row(i);
    for (std::int64_t j = 0; j < m.dim; ++j)
      x[j] = static_cast<float>((x[j] - mean[j]) * inv_std[j]);
  }
  return out;
}

FeatureMatrix reorder(const FeatureMatrix& m,
                      const std::vector<std::int64_t>& order) {
  validate(m);
  FeatureMatrix out;
  out.rows = static_cast<std::int64_t>(order.size());
  out.dim = m.dim;
  out.values.resize(static_cast<std::size_t>(out.rows * out.dim));
  if (!m.labels.empty()) out.labels.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = order[i];
    if (src < 0 || src >= m.rows)
      throw PreconditionError("reorder: index " + std::to_string(src) +
                              " outside " + std::to_string(m.rows) + " rows");
    std::memcpy(out.row(static_cast<std::int64_t>(i)), m.row(src),
                static_cast<std::size_t>(m.dim) * sizeof(float));
    if (!m.labels.empty()) out.labels.push_back(m.labels[src]);
  }
  return out;
}

double accuracy(const std::vector<std::int64_t>& predicted,
                const std::vector<std::int64_t>& labels) {
  if (predicted.size() != labels.size() || predicted.empty())
    throw PreconditionError("accuracy: size mismatch or empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace adinkra::ml
