#include "hctagger/char_lm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

namespace hct {

namespace {

// Inputs for one direction of one batch: step t holds one id per element.
// Elements shorter than the step count are padded with EOS; padded steps are
// masked out of every loss and gradient.
template <typename T>
void gather_inputs(const CharLm<T>& lm, const std::vector<std::vector<int>>& step_ids,
                   std::vector<Mat<T>>& xs) {
  const int steps = static_cast<int>(step_ids.size());
  const int batch = steps > 0 ? static_cast<int>(step_ids[0].size()) : 0;
  xs.assign(steps, Mat<T>());
  for (int t = 0; t < steps; ++t) {
    xs[t].resize(lm.embed_dim, batch);
    for (int b = 0; b < batch; ++b) xs[t].col(b) = lm.embedding.v.col(step_ids[t][b]);
  }
}

// Builds per-step id grids for the forward ([BOS, c_1..c_n]) and backward
// ([EOS, c_n..c_1]) passes, each n_max+1 steps.
void build_direction_ids(const std::vector<std::vector<int>>& char_ids, int steps,
                         std::vector<std::vector<int>>& fwd, std::vector<std::vector<int>>& bwd) {
  const int batch = static_cast<int>(char_ids.size());
  fwd.assign(steps, std::vector<int>(batch, CharVocab::kEos));
  bwd.assign(steps, std::vector<int>(batch, CharVocab::kEos));
  for (int b = 0; b < batch; ++b) {
    const auto& ids = char_ids[b];
    const int n = static_cast<int>(ids.size());
    fwd[0][b] = CharVocab::kBos;
    bwd[0][b] = CharVocab::kEos;
    for (int t = 1; t <= n; ++t) {
      fwd[t][b] = ids[t - 1];
      bwd[t][b] = ids[n - t];
    }
  }
}

template <typename T>
void scatter_embedding_grad(CharLm<T>& lm, const std::vector<std::vector<int>>& step_ids,
                            const std::vector<int>& lens, const std::vector<Mat<T>>& dx) {
  for (size_t t = 0; t < dx.size(); ++t) {
    for (int b = 0; b < static_cast<int>(step_ids[t].size()); ++b) {
      if (static_cast<int>(t) > lens[b]) continue;  // padded step
      lm.embedding.g.col(step_ids[t][b]) += dx[t].col(b);
    }
  }
}

}  // namespace

template <typename T>
std::vector<Mat<T>> lm_embed_batch_forward(const CharLm<T>& lm,
                                           const std::vector<std::vector<int>>& char_ids,
                                           LmEmbedCache<T>& cache) {
  const int batch = static_cast<int>(char_ids.size());
  int n_max = 0;
  cache.lens.resize(batch);
  for (int b = 0; b < batch; ++b) {
    cache.lens[b] = static_cast<int>(char_ids[b].size());
    n_max = std::max(n_max, cache.lens[b]);
  }
  const int steps = n_max + 1;

  build_direction_ids(char_ids, steps, cache.fwd_ids, cache.bwd_ids);
  gather_inputs(lm, cache.fwd_ids, cache.fwd_x);
  gather_inputs(lm, cache.bwd_ids, cache.bwd_x);
  lstm_forward(lm.fwd, cache.fwd_x, cache.fwd_cache);
  lstm_forward(lm.bwd, cache.bwd_x, cache.bwd_cache);

  const int h = lm.hidden;
  std::vector<Mat<T>> emb(steps, Mat<T>::Zero(2 * h, batch));
  for (int p = 0; p < steps; ++p) {
    for (int b = 0; b < batch; ++b) {
      const int n = cache.lens[b];
      if (p > n) continue;  // padded position
      emb[p].col(b).head(h) = cache.fwd_cache.h[p].col(b);
      const int bwd_step = (p == 0) ? n : n + 1 - p;
      emb[p].col(b).tail(h) = cache.bwd_cache.h[bwd_step].col(b);
    }
  }
  return emb;
}

template <typename T>
void lm_embed_batch_backward(CharLm<T>& lm, const LmEmbedCache<T>& cache,
                             const std::vector<Mat<T>>& d_emb) {
  const int steps = static_cast<int>(d_emb.size());
  const int batch = steps > 0 ? static_cast<int>(d_emb[0].cols()) : 0;
  const int h = lm.hidden;

  std::vector<Mat<T>> dh_fwd(steps, Mat<T>::Zero(h, batch));
  std::vector<Mat<T>> dh_bwd(steps, Mat<T>::Zero(h, batch));
  for (int p = 0; p < steps; ++p) {
    for (int b = 0; b < batch; ++b) {
      const int n = cache.lens[b];
      if (p > n) continue;
      dh_fwd[p].col(b) += d_emb[p].col(b).head(h);
      const int bwd_step = (p == 0) ? n : n + 1 - p;
      dh_bwd[bwd_step].col(b) += d_emb[p].col(b).tail(h);
    }
  }

  std::vector<Mat<T>> dx;
  lstm_backward(lm.fwd, cache.fwd_cache, dh_fwd, &dx);
  scatter_embedding_grad(lm, cache.fwd_ids, cache.lens, dx);
  lstm_backward(lm.bwd, cache.bwd_cache, dh_bwd, &dx);
  scatter_embedding_grad(lm, cache.bwd_ids, cache.lens, dx);
}

template <typename T>
Mat<T> embed_sequence(const CharLm<T>& lm, StrView chars) {
  std::vector<std::vector<int>> ids{lm.vocab.encode(chars)};
  LmEmbedCache<T> cache;
  std::vector<Mat<T>> emb = lm_embed_batch_forward(lm, ids, cache);
  Mat<T> out(2 * lm.hidden, static_cast<int>(emb.size()));
  for (size_t p = 0; p < emb.size(); ++p) out.col(p) = emb[p].col(0);
  return out;
}

template <typename T>
LmLossStats lm_loss(CharLm<T>& lm, const std::vector<std::vector<int>>& char_ids,
                    bool do_backward) {
  LmLossStats stats;
  const int batch = static_cast<int>(char_ids.size());
  if (batch == 0) return stats;

  int n_max = 0;
  std::vector<int> lens(batch);
  for (int b = 0; b < batch; ++b) {
    lens[b] = static_cast<int>(char_ids[b].size());
    n_max = std::max(n_max, lens[b]);
  }
  const int steps = n_max + 1;

  std::vector<std::vector<int>> fwd_ids, bwd_ids;
  build_direction_ids(char_ids, steps, fwd_ids, bwd_ids);

  // Prediction targets: the next input symbol of the same direction, with the
  // sequence terminator (EOS forward, BOS backward) at the last real step.
  auto targets_for = [&](const std::vector<std::vector<int>>& inputs, int terminator) {
    std::vector<std::vector<int>> tgt(steps, std::vector<int>(batch, -1));
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t <= lens[b]; ++t)
        tgt[t][b] = (t == lens[b]) ? terminator : inputs[t + 1][b];
    }
    return tgt;
  };

  struct DirPass {
    LstmDir<T>* dir;
    Tensor<T>* proj_w;
    Tensor<T>* proj_b;
    std::vector<std::vector<int>>* ids;
    std::vector<std::vector<int>> targets;
  };
  std::vector<DirPass> passes;
  passes.push_back({&lm.fwd, &lm.proj_fwd_w, &lm.proj_fwd_b, &fwd_ids,
                    targets_for(fwd_ids, CharVocab::kEos)});
  passes.push_back({&lm.bwd, &lm.proj_bwd_w, &lm.proj_bwd_b, &bwd_ids,
                    targets_for(bwd_ids, CharVocab::kBos)});

  for (auto& pass : passes) {
    std::vector<Mat<T>> xs;
    gather_inputs(lm, *pass.ids, xs);
    LstmCache<T> cache;
    lstm_forward(*pass.dir, xs, cache);

    std::vector<Mat<T>> dh(steps, Mat<T>::Zero(lm.hidden, batch));
    for (int t = 0; t < steps; ++t) {
      Mat<T> logits = (pass.proj_w->v * cache.h[t]).colwise() + pass.proj_b->v.col(0);
      Mat<T> d_logits = Mat<T>::Zero(logits.rows(), batch);
      for (int b = 0; b < batch; ++b) {
        const int target = pass.targets[t][b];
        if (target < 0) continue;  // padded step
        Vec<T> p = logits.col(b);
        softmax_inplace(p);
        const double nll = -std::log(std::max(static_cast<double>(p[target]), 1e-300));
        stats.loss_sum += nll;
        ++stats.predictions;
        if (target >= CharVocab::kReserved) {
          stats.char_nll_sum += nll;
          ++stats.char_predictions;
        }
        if (do_backward) {
          d_logits.col(b) = p;
          d_logits(target, b) -= static_cast<T>(1);
        }
      }
      if (do_backward) {
        pass.proj_w->g.noalias() += d_logits * cache.h[t].transpose();
        pass.proj_b->g.col(0) += d_logits.rowwise().sum();
        dh[t] = pass.proj_w->v.transpose() * d_logits;
      }
    }
    if (do_backward) {
      std::vector<Mat<T>> dx;
      lstm_backward(*pass.dir, cache, dh, &dx);
      scatter_embedding_grad(lm, *pass.ids, lens, dx);
    }
  }
  return stats;
}

template <typename T>
LmPretrainResult pretrain_lm(CharLm<T>& lm, const std::vector<Str>& corpus,
                             const LmPretrainConfig& config,
                             const std::function<void(const LmEpochStats&)>& on_epoch) {
  if (corpus.empty()) throw LmError("pretraining corpus is empty");

  CharVocab vocab = CharVocab::build(corpus);
  if (vocab.distinct_chars() < 2)
    throw LmError("pretraining corpus has fewer than two distinct characters");

  Rng rng(config.seed);
  Rng init_rng = rng.fork(1);
  Rng shuffle_rng = rng.fork(2);
  lm.init(vocab, config.embed_dim, config.hidden, init_rng);

  // Held-out slice for perplexity: a seeded shuffle, then the tail fraction.
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.shuffle(order);
  size_t heldout_n = std::max<size_t>(
      1, static_cast<size_t>(std::llround(static_cast<double>(corpus.size()) * config.heldout_fraction)));
  if (heldout_n >= corpus.size()) heldout_n = corpus.size() > 1 ? 1 : 0;
  std::vector<std::vector<int>> train_ids, heldout_ids;
  for (size_t i = 0; i < order.size(); ++i) {
    auto ids = vocab.encode(corpus[order[i]]);
    if (i + heldout_n >= order.size()) heldout_ids.push_back(std::move(ids));
    else train_ids.push_back(std::move(ids));
  }
  if (train_ids.empty()) throw LmError("pretraining corpus too small for a held-out slice");

  auto heldout_ppl = [&]() {
    LmLossStats stats;
    for (size_t i = 0; i < heldout_ids.size(); i += config.batch) {
      std::vector<std::vector<int>> batch(heldout_ids.begin() + i,
                                          heldout_ids.begin() +
                                              std::min(heldout_ids.size(), i + config.batch));
      LmLossStats s = lm_loss(lm, batch, false);
      stats.loss_sum += s.loss_sum;
      stats.predictions += s.predictions;
      stats.char_nll_sum += s.char_nll_sum;
      stats.char_predictions += s.char_predictions;
    }
    return stats.perplexity();
  };

  ParamList<T> params = lm.params(true);
  Adam<T> opt(config.lr);
  LmPretrainResult result;

  std::vector<int> train_order(train_ids.size());
  std::iota(train_order.begin(), train_order.end(), 0);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(train_order);
    double loss_sum = 0.0;
    int64_t predictions = 0;
    for (size_t i = 0; i < train_order.size(); i += config.batch) {
      std::vector<std::vector<int>> batch;
      for (size_t k = i; k < std::min(train_order.size(), i + config.batch); ++k)
        batch.push_back(train_ids[train_order[k]]);
      zero_grads(params);
      LmLossStats s = lm_loss(lm, batch, true);
      // Mean over batch elements, summed over characters within each.
      const T scale = static_cast<T>(1.0 / static_cast<double>(batch.size()));
      for (auto& p : params) p.tensor->g *= scale;
      clip_gradients(params, config.clip_norm);
      opt.step(params);
      loss_sum += s.loss_sum;
      predictions += s.predictions;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    LmEpochStats es{epoch, predictions > 0 ? loss_sum / predictions : 0.0, heldout_ppl(), seconds};
    result.epochs.push_back(es);
    if (on_epoch) on_epoch(es);
  }
  result.heldout_perplexity = result.epochs.empty() ? heldout_ppl() : result.epochs.back().heldout_perplexity;
  return result;
}

double unigram_baseline_perplexity(const std::vector<Str>& train, const std::vector<Str>& heldout) {
  std::unordered_map<char32_t, int64_t> counts;
  int64_t total = 0;
  std::set<char32_t> alphabet;
  for (const Str& line : train)
    for (char32_t c : line) {
      ++counts[c];
      ++total;
      alphabet.insert(c);
    }
  for (const Str& line : heldout)
    for (char32_t c : line) alphabet.insert(c);

  const double v = static_cast<double>(alphabet.size());
  double nll = 0.0;
  int64_t n = 0;
  for (const Str& line : heldout)
    for (char32_t c : line) {
      auto it = counts.find(c);
      const double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
      nll -= std::log((count + 1.0) / (static_cast<double>(total) + v));
      ++n;
    }
  return n == 0 ? 1.0 : std::exp(nll / static_cast<double>(n));
}

template std::vector<Mat<float>> lm_embed_batch_forward(const CharLm<float>&,
                                                        const std::vector<std::vector<int>>&,
                                                        LmEmbedCache<float>&);
template std::vector<Mat<double>> lm_embed_batch_forward(const CharLm<double>&,
                                                         const std::vector<std::vector<int>>&,
                                                         LmEmbedCache<double>&);
template void lm_embed_batch_backward(CharLm<float>&, const LmEmbedCache<float>&,
                                      const std::vector<Mat<float>>&);
template void lm_embed_batch_backward(CharLm<double>&, const LmEmbedCache<double>&,
                                      const std::vector<Mat<double>>&);
template Mat<float> embed_sequence(const CharLm<float>&, StrView);
template Mat<double> embed_sequence(const CharLm<double>&, StrView);
template LmLossStats lm_loss(CharLm<float>&, const std::vector<std::vector<int>>&, bool);
template LmLossStats lm_loss(CharLm<double>&, const std::vector<std::vector<int>>&, bool);
template LmPretrainResult pretrain_lm(CharLm<float>&, const std::vector<Str>&,
                                      const LmPretrainConfig&,
                                      const std::function<void(const LmEpochStats&)>&);
template LmPretrainResult pretrain_lm(CharLm<double>&, const std::vector<Str>&,
                                      const LmPretrainConfig&,
                                      const std::function<void(const LmEpochStats&)>&);

}  // namespace hct
