#include "hctagger/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hct {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian; big-endian hosts are unsupported");

namespace {

constexpr char kMagic[8] = {'H', 'C', 'T', 'C', 'K', 'P', 'T', '\n'};
constexpr uint32_t kSchemaVersion = 1;

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) throw CheckpointError("truncated checkpoint");
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_bytes(size_t n) {
    if (pos_ + n > bytes_.size()) throw CheckpointError("truncated checkpoint");
    std::string out(bytes_.substr(pos_, n));
    pos_ += n;
    return out;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

template <typename T>
Checkpoint::Record make_record(Checkpoint::DType dtype, const Mat<T>& m) {
  Checkpoint::Record rec;
  rec.dtype = dtype;
  rec.dims = {static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())};
  rec.bytes.resize(sizeof(T) * m.size());
  // Row-major payload from Eigen's column-major storage.
  size_t off = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::memcpy(rec.bytes.data() + off, &m(i, j), sizeof(T));
      off += sizeof(T);
    }
  return rec;
}

template <typename T>
Mat<T> record_to_matrix(const Checkpoint::Record& rec, const std::string& name) {
  if (rec.dims.size() != 2) throw CheckpointError("tensor is not rank-2: " + name);
  const auto rows = static_cast<Eigen::Index>(rec.dims[0]);
  const auto cols = static_cast<Eigen::Index>(rec.dims[1]);
  if (rec.bytes.size() != sizeof(T) * static_cast<size_t>(rows) * static_cast<size_t>(cols))
    throw CheckpointError("tensor payload size mismatch: " + name);
  Mat<T> m(rows, cols);
  size_t off = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::memcpy(&m(i, j), rec.bytes.data() + off, sizeof(T));
      off += sizeof(T);
    }
  return m;
}

}  // namespace

void Checkpoint::add_f32(const std::string& name, const Mat<float>& m) {
  records_[name] = make_record(DType::F32, m);
}

void Checkpoint::add_f64(const std::string& name, const Mat<double>& m) {
  records_[name] = make_record(DType::F64, m);
}

const Checkpoint::Record& Checkpoint::record(const std::string& name) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw CheckpointError("missing tensor: " + name);
  return it->second;
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [name, _] : records_) out.push_back(name);
  return out;
}

Mat<float> Checkpoint::matrix_f32(const std::string& name) const {
  const Record& rec = record(name);
  if (rec.dtype != DType::F32) throw CheckpointError("tensor is not f32: " + name);
  return record_to_matrix<float>(rec, name);
}

Mat<double> Checkpoint::matrix_f64(const std::string& name) const {
  const Record& rec = record(name);
  if (rec.dtype != DType::F64) throw CheckpointError("tensor is not f64: " + name);
  return record_to_matrix<double>(rec, name);
}

std::string Checkpoint::serialize() const {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put(out, kSchemaVersion);
  put(out, static_cast<uint64_t>(metadata.size()));
  out += metadata;
  put(out, static_cast<uint32_t>(records_.size()));
  for (const auto& [name, rec] : records_) {
    put(out, static_cast<uint32_t>(name.size()));
    out += name;
    put(out, static_cast<uint8_t>(rec.dtype));
    put(out, static_cast<uint8_t>(rec.dims.size()));
    for (uint64_t d : rec.dims) put(out, d);
    out.append(reinterpret_cast<const char*>(rec.bytes.data()), rec.bytes.size());
  }
  return out;
}

Checkpoint Checkpoint::deserialize(std::string_view bytes) {
  Reader r(bytes);
  const std::string magic = r.get_bytes(sizeof kMagic);
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0)
    throw CheckpointError("not a checkpoint file (bad magic)");
  const auto version = r.get<uint32_t>();
  if (version != kSchemaVersion)
    throw CheckpointError("unsupported checkpoint schema version " + std::to_string(version));

  Checkpoint ckpt;
  const auto meta_len = r.get<uint64_t>();
  ckpt.metadata = r.get_bytes(meta_len);
  const auto count = r.get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<uint32_t>();
    std::string name = r.get_bytes(name_len);
    Record rec;
    rec.dtype = static_cast<DType>(r.get<uint8_t>());
    if (rec.dtype != DType::F32 && rec.dtype != DType::F64)
      throw CheckpointError("unknown dtype in tensor: " + name);
    const auto rank = r.get<uint8_t>();
    uint64_t elems = 1;
    for (uint8_t d = 0; d < rank; ++d) {
      rec.dims.push_back(r.get<uint64_t>());
      elems *= rec.dims.back();
    }
    const size_t elem_size = rec.dtype == DType::F32 ? 4 : 8;
    std::string payload = r.get_bytes(elems * elem_size);
    rec.bytes.assign(payload.begin(), payload.end());
    ckpt.records_[std::move(name)] = std::move(rec);
  }
  if (!r.exhausted()) throw CheckpointError("trailing bytes after checkpoint records");
  return ckpt;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

Checkpoint Checkpoint::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace hct
