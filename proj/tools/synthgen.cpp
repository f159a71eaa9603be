// hct-synthgen: deterministic synthetic misspelling corpora for benchmarks
// and self-contained test runs. Emits TSV splits plus a manifest with
// SHA-256 digests.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hctagger/corpus_io.hpp"
#include "hctagger/model_bundle.hpp"
#include "hctagger/synth.hpp"
#include "json.hpp"

using namespace hct;
using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"hct-synthgen: generate synthetic short-text misspelling corpora"};

  std::string out_dir = ".";
  std::string prefix = "synth";
  int64_t n_train = 6000, n_dev = 750, n_test = 750;
  double error_rate = 1.0;
  uint64_t seed = 0;
  bool single_file = false;
  int64_t n_total = 0;

  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--prefix", prefix, "Output file prefix");
  app.add_option("--train", n_train, "Training pairs");
  app.add_option("--dev", n_dev, "Dev pairs");
  app.add_option("--test", n_test, "Test pairs");
  app.add_option("--total", n_total,
                 "Emit one unsplit file with this many pairs instead of three splits");
  app.add_option("--error-rate", error_rate, "Fraction of corrupted sources");
  app.add_option("--seed", seed, "RNG seed");
  app.add_flag("--single-file", single_file, "Alias for --total with train+dev+test pairs");

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    SynthConfig config;
    config.seed = seed;
    config.error_rate = error_rate;

    std::vector<ManifestEntry> files;
    json file_config{{"error_rate", error_rate}, {"prefix", prefix}};

    if (single_file && n_total == 0) n_total = n_train + n_dev + n_test;
    if (n_total > 0) {
      config.n_examples = n_total;
      std::vector<ParallelExample> all = generate_synthetic_corpus(config);
      const std::string path = out_dir + "/" + prefix + ".tsv";
      save_tsv(path, all);
      files.push_back(manifest_entry_for(path));
      file_config["total"] = n_total;
    } else {
      config.n_examples = n_train + n_dev + n_test;
      std::vector<ParallelExample> all = generate_synthetic_corpus(config);
      struct SplitSpec {
        const char* name;
        int64_t count;
      };
      const SplitSpec splits[] = {{"train", n_train}, {"dev", n_dev}, {"test", n_test}};
      int64_t offset = 0;
      for (const SplitSpec& s : splits) {
        std::vector<ParallelExample> part(all.begin() + offset, all.begin() + offset + s.count);
        const std::string path = out_dir + "/" + prefix + "." + s.name + ".tsv";
        save_tsv(path, part);
        files.push_back(manifest_entry_for(path));
        offset += s.count;
      }
      file_config["train"] = n_train;
      file_config["dev"] = n_dev;
      file_config["test"] = n_test;
    }

    const std::string manifest_path = out_dir + "/" + prefix + ".manifest.json";
    write_manifest(manifest_path, files, file_config.dump(), seed, hct_version());
    std::cerr << "wrote " << files.size() << " file(s) under " << out_dir << "\n";
    for (const auto& f : files) std::cout << f.path << "\t" << f.sha256 << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
