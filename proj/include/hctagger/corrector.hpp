#pragma once

#include <array>
#include <string>
#include <vector>

#include "hctagger/corpus_io.hpp"
#include "hctagger/model_bundle.hpp"

namespace hct {

struct CorrectionResult {
  Str output;
  TagSequence tags;    // tags of the final executed pass
  int iterations = 1;  // predict+apply passes executed
  bool changed = false;
};

// Single-pass correction by default; with max_iterations > 1 the corrected
// string feeds back as input until a fixpoint or the iteration cap. Unknown
// characters embed as UNK; correction never fails on any input text.
CorrectionResult correct(const ModelBundle& bundle, StrView text, int max_iterations = 1);
std::string correct_utf8(const ModelBundle& bundle, const std::string& utf8_text,
                         int max_iterations = 1);

struct EvalResult {
  double exact_match_accuracy = 0.0;
  double tag_accuracy = 0.0;  // over all non-padded positions incl. BOS slot
  int64_t examples = 0;
  int64_t positions = 0;
  // confusion[gold][predicted] over coarse classes (gold OOV folds to its
  // coarse class).
  std::array<std::array<int64_t, 4>, 4> coarse_confusion{};
};

// Deterministic evaluation of held-out pairs. Pairs are normalized with the
// bundle's recorded configuration before scoring; outputs compare as raw
// strings.
EvalResult evaluate(const ModelBundle& bundle, const std::vector<ParallelExample>& pairs,
                    int max_iterations = 1);

enum class BenchUnit { Words, Queries };

struct BenchResult {
  BenchUnit unit;
  double rate = 0.0;             // median of the per-run rates
  std::array<double, 3> runs{};  // rate of each timed run
  int64_t units = 0;             // words or queries in one pass
  double seconds_median = 0.0;
};

// Single-stream batch-1 wall-clock benchmark: one warm-up pass, then three
// timed passes; reports the median rate. Words count whitespace-separated
// tokens of the inputs.
BenchResult bench(const ModelBundle& bundle, const std::vector<ParallelExample>& pairs,
                  BenchUnit unit, int max_iterations = 1);

int64_t count_words(StrView text);

}  // namespace hct
