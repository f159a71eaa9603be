#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "hctagger/corpus_io.hpp"
#include "hctagger/synth.hpp"

using namespace hct;

namespace {

std::string temp_file(const char* name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_tsv parses well-formed files and preserves order") {
  const std::string path = temp_file("hct_pairs.tsv", "shies\tshoes\nfashien\tfashion\n");
  TsvLoadResult r = load_tsv(path);
  REQUIRE(r.examples.size() == 2);
  CHECK(r.skipped_lines == 0);
  CHECK(r.examples[0].source == U"shies");
  CHECK(r.examples[0].target == U"shoes");
  CHECK(r.examples[1].source == U"fashien");
  std::remove(path.c_str());
}

TEST_CASE("malformed lines are skipped and counted") {
  const std::string path =
      temp_file("hct_bad.tsv", "a\tb\nno_tab_line\nx\ty\tz\textra\nc\td\n");
  TsvLoadResult r = load_tsv(path);
  CHECK(r.examples.size() == 2);
  CHECK(r.skipped_lines == 2);
  std::remove(path.c_str());
}

TEST_CASE("unreadable files and invalid UTF-8 raise DataError") {
  CHECK_THROWS_AS(load_tsv("/nonexistent/corpus.tsv"), DataError);
  const std::string path = temp_file("hct_bin.tsv", std::string("a\t\xFF\xFE\n", 6));
  CHECK_THROWS_AS(load_tsv(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("load then re-serialize is byte-identical for well-formed files") {
  const std::string content = "shies\tshoes\ncassueldress\tcasual dress\n\tempty source\n";
  const std::string path = temp_file("hct_round.tsv", content);
  TsvLoadResult r = load_tsv(path);
  CHECK(to_tsv(r.examples) == content);
  std::remove(path.c_str());
}

TEST_CASE("split_webis produces disjoint splits of the documented sizes") {
  SynthConfig config;
  config.n_examples = 54772;
  config.error_rate = 0.17;
  config.seed = 7;
  std::vector<ParallelExample> corpus = generate_synthetic_corpus(config);
  REQUIRE(corpus.size() == 54772);

  WebisSplit split = split_webis(corpus, 11);
  CHECK(split.train.size() == 44772);
  CHECK(split.dev.size() == 5000);
  CHECK(split.test.size() == 5000);

  // Union equals the input multiset.
  auto key = [](const ParallelExample& ex) {
    return encode_utf8(ex.source) + "\t" + encode_utf8(ex.target);
  };
  std::multiset<std::string> original, recombined;
  for (const auto& ex : corpus) original.insert(key(ex));
  for (const auto& part : {split.train, split.dev, split.test})
    for (const auto& ex : part) recombined.insert(key(ex));
  CHECK(original == recombined);

  // Deterministic per seed; different seeds give different dev sets.
  WebisSplit again = split_webis(corpus, 11);
  CHECK(to_tsv(again.dev) == to_tsv(split.dev));
  WebisSplit other = split_webis(corpus, 12);
  CHECK(to_tsv(other.dev) != to_tsv(split.dev));
}

TEST_CASE("split_webis rejects undersized corpora") {
  std::vector<ParallelExample> tiny(9999, {U"a", U"a"});
  CHECK_THROWS_AS(split_webis(tiny, 1), DataError);
}

TEST_CASE("normalization modes") {
  NormalizeConfig identity;
  CHECK(normalize(U"ABC", identity) == U"ABC");

  NormalizeConfig lower{true, false};
  CHECK(normalize(U"ABC", lower) == U"abc");

  NormalizeConfig nfc{false, true};
  const Str decomposed{U'e', 0x0301};  // e + combining acute
  const Str composed{0x00E9};          // é
  CHECK(normalize(decomposed, nfc) == composed);
  CHECK(normalize(composed, nfc) == composed);
}

TEST_CASE("sha256 matches a known vector") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest lists files with digests") {
  const std::string data_path = temp_file("hct_manifest_data.tsv", "a\tb\n");
  const std::string manifest_path =
      (std::filesystem::temp_directory_path() / "hct_manifest.json").string();
  write_manifest(manifest_path, {manifest_entry_for(data_path)}, R"({"note":"test"})", 3,
                 "hctagger test");
  std::ifstream in(manifest_path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content.find(sha256_hex("a\tb\n")) != std::string::npos);
  CHECK(content.find("\"seed\": 3") != std::string::npos);
  std::remove(data_path.c_str());
  std::remove(manifest_path.c_str());
}

TEST_CASE("synthetic corpora honor error rates and determinism") {
  SynthConfig config;
  config.n_examples = 2000;
  config.error_rate = 1.0;
  config.seed = 5;
  std::vector<ParallelExample> noisy = generate_synthetic_corpus(config);
  REQUIRE(noisy.size() == 2000);
  for (const auto& ex : noisy) REQUIRE(ex.source != ex.target);

  config.error_rate = 0.17;
  std::vector<ParallelExample> mixed = generate_synthetic_corpus(config);
  int64_t errors = 0;
  for (const auto& ex : mixed)
    if (ex.source != ex.target) ++errors;
  CHECK(errors == 340);  // exact count at rate 0.17

  std::vector<ParallelExample> repeat = generate_synthetic_corpus(config);
  CHECK(to_tsv(repeat) == to_tsv(mixed));
}
