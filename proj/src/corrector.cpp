#include "hctagger/corrector.hpp"

#include <algorithm>
#include <chrono>

#include "hctagger/training.hpp"

namespace hct {

namespace {

DecodeMode bundle_decode_mode(const ModelBundle& bundle) {
  return bundle.config.decode_mode == "hier" ? DecodeMode::Hierarchical : DecodeMode::FineArgmax;
}

TagSequence predict_for(const ModelBundle& bundle, StrView text) {
  Mat<float> emb = bundle.embed(text);
  return predict_tags(bundle.tagger, bundle.tag_vocab, emb, bundle_decode_mode(bundle));
}

}  // namespace

CorrectionResult correct(const ModelBundle& bundle, StrView text, int max_iterations) {
  if (max_iterations < 1) max_iterations = 1;
  CorrectionResult result;
  Str current(text);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    result.tags = predict_for(bundle, current);
    Str next = apply_tags(current, result.tags);
    result.iterations = iter;
    const bool moved = next != current;
    current = std::move(next);
    if (!moved) break;  // fixpoint
  }
  result.changed = current != text;
  result.output = std::move(current);
  return result;
}

std::string correct_utf8(const ModelBundle& bundle, const std::string& utf8_text,
                         int max_iterations) {
  Str text = normalize(decode_utf8(utf8_text), bundle.config.norm);
  return encode_utf8(correct(bundle, text, max_iterations).output);
}

EvalResult evaluate(const ModelBundle& bundle, const std::vector<ParallelExample>& pairs,
                    int max_iterations) {
  if (pairs.empty()) throw DataError("evaluation set is empty");
  EvalResult result;
  result.examples = static_cast<int64_t>(pairs.size());

  int64_t exact = 0, tag_hits = 0;
  for (const ParallelExample& raw : pairs) {
    ParallelExample ex{normalize(raw.source, bundle.config.norm),
                       normalize(raw.target, bundle.config.norm)};
    CorrectionResult corrected = correct(bundle, ex.source, max_iterations);
    if (corrected.output == ex.target) ++exact;

    // Tag diagnostics use first-pass predictions against the gold alignment.
    const TagSequence predicted =
        max_iterations == 1 ? corrected.tags : predict_for(bundle, ex.source);
    const std::vector<EncodedTag> gold = bundle.tag_vocab.encode(extract_tags(ex.source, ex.target));
    for (size_t p = 0; p < gold.size(); ++p) {
      const EncodedTag pred_id = bundle.tag_vocab.encode_tag(predicted[p]);
      ++result.positions;
      if (!is_oov(gold[p]) && pred_id == gold[p]) ++tag_hits;
      const Coarse gc = is_oov(gold[p]) ? oov_coarse(gold[p])
                                        : bundle.tag_vocab.coarse_of(gold[p]);
      const Coarse pc = coarse_of_tag(predicted[p]);
      ++result.coarse_confusion[static_cast<int>(gc)][static_cast<int>(pc)];
    }
  }
  result.exact_match_accuracy = static_cast<double>(exact) / static_cast<double>(result.examples);
  result.tag_accuracy =
      result.positions > 0 ? static_cast<double>(tag_hits) / static_cast<double>(result.positions)
                           : 0.0;
  return result;
}

int64_t count_words(StrView text) {
  int64_t words = 0;
  bool in_word = false;
  for (char32_t c : text) {
    const bool space = c == U' ' || c == U'\t' || c == U'\n' || c == U'\r';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

BenchResult bench(const ModelBundle& bundle, const std::vector<ParallelExample>& pairs,
                  BenchUnit unit, int max_iterations) {
  if (pairs.empty()) throw DataError("benchmark set is empty");

  std::vector<Str> inputs;
  inputs.reserve(pairs.size());
  int64_t words = 0;
  for (const ParallelExample& ex : pairs) {
    inputs.push_back(normalize(ex.source, bundle.config.norm));
    words += count_words(inputs.back());
  }

  BenchResult result;
  result.unit = unit;
  result.units = unit == BenchUnit::Words ? words : static_cast<int64_t>(inputs.size());

  // Warm-up pass over a slice, untimed.
  const size_t warm = std::min<size_t>(inputs.size(), 100);
  for (size_t i = 0; i < warm; ++i) correct(bundle, inputs[i], max_iterations);

  std::array<double, 3> seconds{};
  for (int run = 0; run < 3; ++run) {
    const auto t0 = std::chrono::steady_clock::now();
    for (const Str& text : inputs) correct(bundle, text, max_iterations);
    seconds[run] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.runs[run] = static_cast<double>(result.units) / seconds[run];
  }
  std::array<double, 3> sorted = seconds;
  std::sort(sorted.begin(), sorted.end());
  result.seconds_median = sorted[1];
  result.rate = static_cast<double>(result.units) / sorted[1];
  return result;
}

}  // namespace hct
