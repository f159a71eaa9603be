#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hctagger/tensor.hpp"

namespace hct {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Self-describing tensor container:
//   magic "HCTCKPT\n", u32 schema version,
//   u64 metadata length + UTF-8 metadata bytes (JSON),
//   u32 record count, then per record:
//     u32 name length + name bytes, u8 dtype (0 = f32, 1 = f64),
//     u8 rank, u64 dims[rank], row-major little-endian payload.
// Round-trips bit-exactly. Only little-endian hosts are supported.
class Checkpoint {
 public:
  enum class DType : uint8_t { F32 = 0, F64 = 1 };

  struct Record {
    DType dtype;
    std::vector<uint64_t> dims;
    std::vector<uint8_t> bytes;  // row-major payload
  };

  std::string metadata;  // UTF-8, conventionally JSON

  void add_f32(const std::string& name, const Mat<float>& m);
  void add_f64(const std::string& name, const Mat<double>& m);

  bool has(const std::string& name) const { return records_.count(name) > 0; }
  const Record& record(const std::string& name) const;
  std::vector<std::string> names() const;

  // Matrices are written/read in row-major order regardless of the in-memory
  // layout; dims are {rows, cols}.
  Mat<float> matrix_f32(const std::string& name) const;
  Mat<double> matrix_f64(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load_file(const std::string& path);

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);

 private:
  std::map<std::string, Record> records_;  // ordered: deterministic output
};

template <typename T>
void checkpoint_add(Checkpoint& ckpt, const std::string& name, const Mat<T>& m) {
  if constexpr (std::is_same_v<T, float>) ckpt.add_f32(name, m);
  else ckpt.add_f64(name, m);
}

template <typename T>
Mat<T> checkpoint_matrix(const Checkpoint& ckpt, const std::string& name) {
  if constexpr (std::is_same_v<T, float>) return ckpt.matrix_f32(name);
  else return ckpt.matrix_f64(name);
}

}  // namespace hct
