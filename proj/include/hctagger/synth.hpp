#pragma once

#include <cstdint>
#include <vector>

#include "hctagger/corpus_io.hpp"

namespace hct {

// Deterministic generator of short-text misspelling corpora. Clean queries
// are drawn from a fixed lexicon; a typo model (vowel swaps, fat-finger
// substitutions, dropped/doubled characters, dropped spaces, transpositions,
// y->ie endings) corrupts a configurable fraction of them. Used for the
// self-contained benchmark datasets shipped with the repository; real
// datasets drop in through the same TSV format.
struct SynthConfig {
  int64_t n_examples = 1000;
  double error_rate = 1.0;  // fraction of pairs whose source is corrupted
  uint64_t seed = 0;
  int min_words = 2;
  int max_words = 4;
};

std::vector<ParallelExample> generate_synthetic_corpus(const SynthConfig& config);

}  // namespace hct
