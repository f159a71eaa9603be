#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "hctagger/corrector.hpp"
#include "hctagger/synth.hpp"
#include "hctagger/training.hpp"

using namespace hct;

namespace {

// All-Keep model: zero weights, so every logit ties and the lowest id (Keep)
// wins. No LM, tiny dimensions — fast even on large test sets.
ModelBundle identity_bundle(const std::vector<ParallelExample>& pairs) {
  std::vector<Str> lines;
  for (const auto& ex : pairs) {
    lines.push_back(ex.source);
    lines.push_back(ex.target);
  }
  ModelBundle bundle;
  bundle.char_vocab = CharVocab::build(lines);
  bundle.tag_vocab = build_vocab(std::vector<TagSequence>{}, 1);
  bundle.config.h_tag = 2;
  bundle.config.input_dim = 2;
  bundle.config.use_pretrained_lm = false;
  Rng rng(0);
  bundle.tagger.init(2, 2, bundle.tag_vocab.size(), rng);
  bundle.tagger.fwd.w.v.setZero();
  bundle.tagger.fwd.b.v.setZero();
  bundle.tagger.bwd.w.v.setZero();
  bundle.tagger.bwd.b.v.setZero();
  bundle.tagger.out_w.v.setZero();
  bundle.tagger.out_b.v.setZero();
  Tensor<float> table;
  table.resize(2, bundle.char_vocab.size());
  bundle.embed_table = std::move(table);
  return bundle;
}

ModelBundle overfit_bundle(const std::vector<ParallelExample>& pairs, double* train_acc) {
  std::vector<TagSequence> seqs;
  for (const auto& ex : pairs) seqs.push_back(extract_tags(ex.source, ex.target));
  TagVocabulary vocab = build_vocab(seqs, 1);

  std::vector<Str> targets;
  for (const auto& ex : pairs) targets.push_back(ex.target);
  CharLm<float> lm;
  LmPretrainConfig lm_config;
  lm_config.embed_dim = 8;
  lm_config.hidden = 10;
  lm_config.epochs = 2;
  lm_config.batch = 8;
  lm_config.seed = 3;
  pretrain_lm(lm, targets, lm_config);

  TrainConfig config;
  config.h_tag = 24;
  config.batch = 8;
  config.lr = 1e-2;
  config.max_epochs = 350;
  config.patience = 350;
  config.seed = 4;
  TrainResult result = train(config, pairs, pairs, vocab, std::move(lm));
  if (train_acc) *train_acc = result.best_dev_accuracy;
  return std::move(result.bundle);
}

}  // namespace

TEST_CASE("identity model leaves inputs unchanged") {
  std::vector<ParallelExample> pairs{{U"shies", U"shoes"}, {U"abc", U"abc"}};
  ModelBundle bundle = identity_bundle(pairs);

  CorrectionResult r = correct(bundle, U"shies");
  CHECK(r.output == U"shies");
  CHECK(r.iterations == 1);
  CHECK_FALSE(r.changed);

  // Unknown characters embed as UNK and never crash.
  CHECK(correct(bundle, U"π∆ß").output == U"π∆ß");
  CHECK(correct(bundle, U"").output == U"");
}

TEST_CASE("oracle tags through apply_tags give perfect evaluation bounds") {
  // evaluate() on an identity model scores exactly the unchanged fraction.
  SynthConfig sc;
  sc.n_examples = 400;
  sc.error_rate = 0.25;
  sc.seed = 6;
  std::vector<ParallelExample> pairs = generate_synthetic_corpus(sc);
  ModelBundle bundle = identity_bundle(pairs);

  EvalResult result = evaluate(bundle, pairs);
  int64_t unchanged = 0;
  for (const auto& ex : pairs)
    if (ex.source == ex.target) ++unchanged;
  CHECK(result.exact_match_accuracy ==
        doctest::Approx(static_cast<double>(unchanged) / pairs.size()));
  CHECK(result.examples == 400);
  // Keep-row of the confusion matrix dominates for a mostly-clean corpus.
  CHECK(result.coarse_confusion[0][0] > 0);
}

TEST_CASE("evaluate rejects an empty test set") {
  ModelBundle bundle = identity_bundle({{U"a", U"a"}});
  CHECK_THROWS_AS(evaluate(bundle, {}), DataError);
}

TEST_CASE("trained toy model corrects, reports fixpoints, and round-trips via disk") {
  SynthConfig sc;
  sc.n_examples = 40;
  sc.seed = 8;
  std::vector<ParallelExample> pairs = generate_synthetic_corpus(sc);
  double train_acc = 0.0;
  ModelBundle bundle = overfit_bundle(pairs, &train_acc);
  REQUIRE(train_acc >= 0.9);

  // The paper's flagship example shape: single-pass correction of a pair the
  // model trained on.
  const ParallelExample& probe = pairs.front();
  REQUIRE(probe.source != probe.target);
  CorrectionResult r = correct(bundle, probe.source);
  CHECK(r.output == probe.target);
  CHECK(r.changed);
  CHECK(r.iterations == 1);

  // A trained model does not invent prefix insertions on empty input.
  CorrectionResult empty = correct(bundle, U"");
  CHECK(empty.output == U"");

  // Save/load round-trip preserves behavior exactly.
  const std::string path =
      (std::filesystem::temp_directory_path() / "hct_test_bundle.ckpt").string();
  bundle.save(path);
  ModelBundle loaded = ModelBundle::load(path);
  EvalResult before = evaluate(bundle, pairs);
  EvalResult after = evaluate(loaded, pairs);
  CHECK(before.exact_match_accuracy == after.exact_match_accuracy);
  CHECK(before.tag_accuracy == after.tag_accuracy);
  std::remove(path.c_str());

  // Iterated correction composes the single-pass function and stops at the
  // fixpoint.
  CorrectionResult once = correct(bundle, probe.source, 1);
  CorrectionResult thrice = correct(bundle, probe.source, 3);
  Str manual = once.output;
  for (int i = 0; i < 2; ++i) {
    Str next = apply_tags(manual, predict_tags(bundle.tagger, bundle.tag_vocab,
                                               bundle.embed(manual),
                                               DecodeMode::FineArgmax));
    if (next == manual) break;
    manual = next;
  }
  CHECK(thrice.output == manual);
  CHECK(thrice.iterations <= 3);
}

TEST_CASE("evaluate is a pure function of its inputs") {
  SynthConfig sc;
  sc.n_examples = 50;
  sc.error_rate = 0.4;
  sc.seed = 10;
  std::vector<ParallelExample> pairs = generate_synthetic_corpus(sc);
  ModelBundle bundle = identity_bundle(pairs);
  EvalResult a = evaluate(bundle, pairs);
  EvalResult b = evaluate(bundle, pairs);
  CHECK(a.exact_match_accuracy == b.exact_match_accuracy);
  CHECK(a.tag_accuracy == b.tag_accuracy);
  CHECK(a.coarse_confusion == b.coarse_confusion);
}

TEST_CASE("word counting for bench rates") {
  CHECK(count_words(U"") == 0);
  CHECK(count_words(U"hello") == 1);
  CHECK(count_words(U"  two  words  ") == 2);
  CHECK(count_words(U"a\tb\nc") == 3);
}

TEST_CASE("bench reports positive finite rates and size-independent throughput") {
  SynthConfig sc;
  sc.n_examples = 60;
  sc.seed = 13;
  std::vector<ParallelExample> pairs = generate_synthetic_corpus(sc);
  ModelBundle bundle = identity_bundle(pairs);

  BenchResult words = bench(bundle, pairs, BenchUnit::Words);
  CHECK(words.rate > 0.0);
  CHECK(std::isfinite(words.rate));
  int64_t expect_words = 0;
  for (const auto& ex : pairs) expect_words += count_words(ex.source);
  CHECK(words.units == expect_words);

  BenchResult queries = bench(bundle, pairs, BenchUnit::Queries);
  CHECK(queries.units == 60);
  CHECK(queries.rate > 0.0);

  // Doubling the test set leaves the rate within noise; generously bounded
  // here to keep the test robust on loaded machines.
  std::vector<ParallelExample> doubled = pairs;
  doubled.insert(doubled.end(), pairs.begin(), pairs.end());
  BenchResult big = bench(bundle, doubled, BenchUnit::Queries);
  CHECK(big.rate > queries.rate * 0.4);
  CHECK(big.rate < queries.rate * 2.5);
}
