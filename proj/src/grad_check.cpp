#include "hctagger/grad_check.hpp"

#include <algorithm>

#include "hctagger/char_lm.hpp"
#include "hctagger/training.hpp"

namespace hct {

template <typename T>
double max_rel_grad_error(const ParamList<T>& params, const std::function<double()>& loss_fn,
                          int max_samples, double step, Rng& rng) {
  struct Coord {
    Tensor<T>* tensor;
    Eigen::Index i, j;
    double analytic;
  };
  std::vector<Coord> coords;
  for (const auto& p : params)
    for (Eigen::Index j = 0; j < p.tensor->v.cols(); ++j)
      for (Eigen::Index i = 0; i < p.tensor->v.rows(); ++i)
        coords.push_back({p.tensor, i, j, static_cast<double>(p.tensor->g(i, j))});

  if (static_cast<int>(coords.size()) > max_samples) {
    rng.shuffle(coords);
    coords.resize(max_samples);
  }

  double worst = 0.0;
  for (const Coord& c : coords) {
    const T saved = c.tensor->v(c.i, c.j);
    c.tensor->v(c.i, c.j) = saved + static_cast<T>(step);
    const double up = loss_fn();
    c.tensor->v(c.i, c.j) = saved - static_cast<T>(step);
    const double down = loss_fn();
    c.tensor->v(c.i, c.j) = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({1e-4, std::abs(c.analytic), std::abs(numeric)});
    worst = std::max(worst, std::abs(c.analytic - numeric) / denom);
  }
  return worst;
}

template double max_rel_grad_error(const ParamList<float>&, const std::function<double()>&, int,
                                   double, Rng&);
template double max_rel_grad_error(const ParamList<double>&, const std::function<double()>&, int,
                                   double, Rng&);

namespace {

std::vector<std::vector<int>> tiny_lm_batch(const CharVocab& vocab) {
  std::vector<std::vector<int>> batch;
  batch.push_back(vocab.encode(U"abcab"));
  batch.push_back(vocab.encode(U"cb"));
  batch.push_back(vocab.encode(U"bacca"));
  return batch;
}

}  // namespace

GradCheckReport lm_grad_check(uint64_t seed) {
  // e=4, h=6, |V|=5 (a, b, c + reserved).
  std::vector<Str> corpus{U"abcab", U"cb", U"bacca"};
  CharVocab vocab = CharVocab::build(corpus);
  CharLm<double> lm;
  Rng rng(seed);
  lm.init(vocab, 4, 6, rng);

  const auto batch = tiny_lm_batch(vocab);
  ParamList<double> params = lm.params(true);
  zero_grads(params);
  lm_loss(lm, batch, true);

  GradCheckReport report;
  Rng sample_rng = rng.fork(7);
  report.samples = std::min<int>(200, static_cast<int>(parameter_count(params)));
  report.max_rel_error = max_rel_grad_error<double>(
      params, [&]() { return lm_loss(lm, batch, false).loss_sum; }, 200, 1e-4, sample_rng);
  return report;
}

GradCheckReport tagger_grad_check(uint64_t seed) {
  std::vector<Str> corpus{U"abcab", U"cb", U"bacca"};
  CharVocab cvocab = CharVocab::build(corpus);
  CharLm<double> lm;
  Rng rng(seed);
  lm.init(cvocab, 4, 6, rng);

  // Vocabulary with every coarse class populated.
  std::vector<TagSequence> seqs;
  seqs.push_back(extract_tags(U"abcab", U"abcb"));   // delete
  seqs.push_back(extract_tags(U"cb", U"cab"));       // append/replace mix
  seqs.push_back(extract_tags(U"bacca", U"baca"));   // delete
  seqs.push_back(extract_tags(U"ab", U"ba"));        // replaces
  TagVocabulary vocab = build_vocab(seqs, 1);

  Tagger<double> tagger;
  tagger.init(lm.output_width(), 5, vocab.size(), rng);

  std::vector<EncodedExample> examples;
  examples.push_back(encode_example({U"abcab", U"abcb"}, cvocab, vocab));
  examples.push_back(encode_example({U"cb", U"cab"}, cvocab, vocab));
  examples.push_back(encode_example({U"ab", U"ba"}, cvocab, vocab));
  // One gold position forced out of vocabulary: coarse-only supervision.
  examples[2].gold[1] = oov_marker(Coarse::R);

  std::vector<const EncodedExample*> batch;
  for (const auto& e : examples) batch.push_back(&e);

  TrainGraph<double> graph(&tagger, &lm, nullptr, vocab, true, true);
  ParamList<double> params = graph.trainable_params();
  zero_grads(params);
  graph.forward(batch, true);
  graph.backward();

  GradCheckReport report;
  Rng sample_rng = rng.fork(7);
  report.samples = std::min<int>(200, static_cast<int>(parameter_count(params)));
  report.max_rel_error = max_rel_grad_error<double>(
      params, [&]() { return graph.forward(batch, false).loss; }, 200, 1e-4, sample_rng);
  return report;
}

}  // namespace hct
