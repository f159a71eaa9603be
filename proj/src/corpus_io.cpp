#include "hctagger/corpus_io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "hctagger/rng.hpp"
#include "vendor_json.hpp"

namespace hct {

TsvLoadResult load_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  TsvLoadResult result;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_valid_utf8(line))
      throw DataError(path + ":" + std::to_string(line_no) + ": invalid UTF-8");
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      ++result.skipped_lines;
      continue;
    }
    result.examples.push_back(
        {decode_utf8(std::string_view(line).substr(0, tab)),
         decode_utf8(std::string_view(line).substr(tab + 1))});
  }
  return result;
}

std::string to_tsv(const std::vector<ParallelExample>& examples) {
  std::string out;
  for (const ParallelExample& ex : examples) {
    out += encode_utf8(ex.source);
    out += '\t';
    out += encode_utf8(ex.target);
    out += '\n';
  }
  return out;
}

void save_tsv(const std::string& path, const std::vector<ParallelExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open dataset file for writing: " + path);
  out << to_tsv(examples);
  if (!out) throw DataError("failed writing dataset file: " + path);
}

WebisSplit split_webis(const std::vector<ParallelExample>& examples, uint64_t seed) {
  constexpr size_t kDev = 5000, kTest = 5000;
  if (examples.size() < 2 * kDev) throw DataError("split requires at least 10,000 examples");

  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  WebisSplit split;
  split.dev.reserve(kDev);
  split.test.reserve(kTest);
  split.train.reserve(examples.size() - kDev - kTest);
  for (size_t i = 0; i < order.size(); ++i) {
    const ParallelExample& ex = examples[order[i]];
    if (i < kDev) split.dev.push_back(ex);
    else if (i < kDev + kTest) split.test.push_back(ex);
    else split.train.push_back(ex);
  }
  return split;
}

void normalize_examples(std::vector<ParallelExample>& examples, const NormalizeConfig& config) {
  if (config.is_identity()) return;
  for (ParallelExample& ex : examples) {
    ex.source = normalize(ex.source, config);
    ex.target = normalize(ex.target, config);
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw DataError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

ManifestEntry manifest_entry_for(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return {path, sha256_hex(bytes), static_cast<int64_t>(bytes.size())};
}

std::string manifest_json(const std::vector<ManifestEntry>& files, const std::string& config_json,
                          uint64_t seed, const std::string& tool_version) {
  nlohmann::json j;
  j["version"] = tool_version;
  j["seed"] = seed;
  j["config"] = config_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_json);
  auto arr = nlohmann::json::array();
  for (const ManifestEntry& f : files)
    arr.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = arr;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& files,
                    const std::string& config_json, uint64_t seed,
                    const std::string& tool_version) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open manifest for writing: " + path);
  out << manifest_json(files, config_json, seed, tool_version);
  if (!out) throw DataError("failed writing manifest: " + path);
}

}  // namespace hct
