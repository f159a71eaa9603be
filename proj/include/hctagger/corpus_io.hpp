#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hctagger/edit_alignment.hpp"
#include "hctagger/unicode.hpp"

namespace hct {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One (misspelled source, error-free target) pair. Tag sequences are derived
// on demand via extract_tags; TSV framing guarantees neither side contains a
// tab or newline.
struct ParallelExample {
  Str source;
  Str target;
};

struct TsvLoadResult {
  std::vector<ParallelExample> examples;
  int64_t skipped_lines = 0;  // lines without exactly two fields
};

// UTF-8 `source<TAB>target` per line, order preserved. Malformed lines are
// skipped and counted; unreadable files and invalid UTF-8 raise DataError.
TsvLoadResult load_tsv(const std::string& path);

void save_tsv(const std::string& path, const std::vector<ParallelExample>& examples);
std::string to_tsv(const std::vector<ParallelExample>& examples);

struct WebisSplit {
  std::vector<ParallelExample> train, dev, test;
};

// Seeded shuffle, then 5000 dev + 5000 test + remainder train.
// Requires at least 10,000 examples.
WebisSplit split_webis(const std::vector<ParallelExample>& examples, uint64_t seed);

void normalize_examples(std::vector<ParallelExample>& examples, const NormalizeConfig& config);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

// JSON manifest written beside generated datasets / run outputs: file paths
// with SHA-256 digests plus the producing configuration.
struct ManifestEntry {
  std::string path;
  std::string sha256;
  int64_t bytes = 0;
};

std::string manifest_json(const std::vector<ManifestEntry>& files, const std::string& config_json,
                          uint64_t seed, const std::string& tool_version);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& files,
                    const std::string& config_json, uint64_t seed,
                    const std::string& tool_version);
ManifestEntry manifest_entry_for(const std::string& path);

}  // namespace hct
