#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hctagger/char_vocab.hpp"
#include "hctagger/lstm.hpp"
#include "hctagger/tensor.hpp"

namespace hct {

struct LmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Character-level language model: an embedding layer feeding one forward and
// one backward LSTM, each with its own next-character projection. The
// projections are used only for pretraining; the tagger consumes the hidden
// states.
template <typename T>
struct CharLm {
  CharVocab vocab;
  int embed_dim = 0;
  int hidden = 0;

  Tensor<T> embedding;  // (e x V), one column per character id
  LstmDir<T> fwd, bwd;
  Tensor<T> proj_fwd_w, proj_fwd_b;  // (V x h), (V x 1)
  Tensor<T> proj_bwd_w, proj_bwd_b;

  void init(const CharVocab& cv, int e, int h, Rng& rng) {
    vocab = cv;
    embed_dim = e;
    hidden = h;
    const int v = cv.size();
    embedding.resize(e, v);
    embedding.init_uniform(rng, static_cast<T>(0.1));
    fwd.resize(e, h);
    fwd.init(rng);
    bwd.resize(e, h);
    bwd.init(rng);
    proj_fwd_w.resize(v, h);
    proj_fwd_w.init_uniform(rng, static_cast<T>(0.1));
    proj_fwd_b.resize(v, 1);
    proj_bwd_w.resize(v, h);
    proj_bwd_w.init_uniform(rng, static_cast<T>(0.1));
    proj_bwd_b.resize(v, 1);
  }

  // Width of the per-position representation handed to the tagger.
  int output_width() const { return 2 * hidden; }

  // include_projections: the next-character heads train during pretraining
  // but receive no gradient from the tagger loss.
  ParamList<T> params(bool include_projections) {
    ParamList<T> out;
    out.push_back({"lm.embedding", &embedding});
    fwd.collect_params("lm.fwd", out);
    bwd.collect_params("lm.bwd", out);
    if (include_projections) {
      out.push_back({"lm.proj_fwd_w", &proj_fwd_w});
      out.push_back({"lm.proj_fwd_b", &proj_fwd_b});
      out.push_back({"lm.proj_bwd_w", &proj_bwd_w});
      out.push_back({"lm.proj_bwd_b", &proj_bwd_b});
    }
    return out;
  }
};

// Cached state of one batched embedding pass, kept for backpropagation when
// the LM is fine-tuned with the tagger.
template <typename T>
struct LmEmbedCache {
  std::vector<int> lens;                  // true source lengths per element
  std::vector<std::vector<int>> fwd_ids;  // per step, per element input ids
  std::vector<std::vector<int>> bwd_ids;
  std::vector<Mat<T>> fwd_x, bwd_x;  // (e x B) inputs per step
  LstmCache<T> fwd_cache, bwd_cache;
};

// Positions per element are n+1 (virtual BOS slot at index 0). Row layout of
// each output matrix: the first h rows are the forward state after consuming
// the position's symbol, the last h rows the backward state after consuming
// it in the reverse pass; the BOS slot carries the backward state after the
// whole sequence.
template <typename T>
std::vector<Mat<T>> lm_embed_batch_forward(const CharLm<T>& lm,
                                           const std::vector<std::vector<int>>& char_ids,
                                           LmEmbedCache<T>& cache);

template <typename T>
void lm_embed_batch_backward(CharLm<T>& lm, const LmEmbedCache<T>& cache,
                             const std::vector<Mat<T>>& d_emb);

// Per-sequence embedding: matrix (2h x n+1), column per position.
template <typename T>
Mat<T> embed_sequence(const CharLm<T>& lm, StrView chars);

struct LmLossStats {
  double loss_sum = 0.0;        // total NLL, both directions, all predictions
  int64_t predictions = 0;      // masked prediction count (includes EOS/BOS targets)
  double char_nll_sum = 0.0;    // NLL restricted to real-character targets
  int64_t char_predictions = 0;

  double perplexity() const {
    return char_predictions == 0 ? 1.0 : std::exp(char_nll_sum / char_predictions);
  }
};

// Next-character training objective over one batch. The forward model
// predicts each character from its prefix (and EOS at the end); the backward
// model predicts the reversed sequence. Gradients accumulate when
// do_backward is set.
template <typename T>
LmLossStats lm_loss(CharLm<T>& lm, const std::vector<std::vector<int>>& char_ids,
                    bool do_backward);

struct LmPretrainConfig {
  int embed_dim = 48;
  int hidden = 128;
  int epochs = 5;
  double lr = 1e-3;
  int batch = 32;
  uint64_t seed = 0;
  double heldout_fraction = 0.05;
  double clip_norm = 5.0;
};

struct LmEpochStats {
  int epoch;
  double train_loss;  // mean NLL per prediction
  double heldout_perplexity;
  double seconds;
};

struct LmPretrainResult {
  double heldout_perplexity = 0.0;
  std::vector<LmEpochStats> epochs;
};

// Builds the character vocabulary from the corpus, trains both directions
// with Adam, and reports held-out per-character perplexity. Refuses corpora
// with fewer than two distinct characters.
template <typename T>
LmPretrainResult pretrain_lm(CharLm<T>& lm, const std::vector<Str>& corpus,
                             const LmPretrainConfig& config,
                             const std::function<void(const LmEpochStats&)>& on_epoch = {});

// Unigram cross-entropy baseline: perplexity of the held-out slice under an
// add-one-smoothed unigram distribution fit on the training slice (real
// characters only, matching the LM perplexity definition).
double unigram_baseline_perplexity(const std::vector<Str>& train, const std::vector<Str>& heldout);

}  // namespace hct
