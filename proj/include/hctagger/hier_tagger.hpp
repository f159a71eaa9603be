#pragma once

#include <array>
#include <span>
#include <vector>

#include "hctagger/lstm.hpp"
#include "hctagger/tag_vocab.hpp"
#include "hctagger/tensor.hpp"

namespace hct {

// Tagging head: a bidirectional LSTM over the per-position embeddings and a
// feedforward projection whose output dimension is the fine-tag vocabulary
// size. Coarse-grained logits are derived analytically from the fine logits,
// never independently parameterized.
template <typename T>
struct Tagger {
  int input_dim = 0;
  int hidden = 0;
  int n_fine = 0;

  LstmDir<T> fwd, bwd;
  Tensor<T> out_w;  // (n_fine x 2h)
  Tensor<T> out_b;  // (n_fine x 1)

  void init(int in, int h, int fine, Rng& rng) {
    input_dim = in;
    hidden = h;
    n_fine = fine;
    fwd.resize(in, h);
    fwd.init(rng);
    bwd.resize(in, h);
    bwd.init(rng);
    out_w.resize(fine, 2 * h);
    out_w.init_uniform(rng, static_cast<T>(0.1));
    out_b.resize(fine, 1);
  }

  ParamList<T> params() {
    ParamList<T> out;
    fwd.collect_params("tagger.fwd", out);
    bwd.collect_params("tagger.bwd", out);
    out.push_back({"tagger.out_w", &out_w});
    out.push_back({"tagger.out_b", &out_b});
    return out;
  }
};

using SubsetIds = std::array<std::vector<int>, 4>;

template <typename T>
struct TaggerCache {
  std::vector<int> lens;       // source length per element (positions = len+1)
  std::vector<Mat<T>> bwd_x;   // per-element reversed inputs
  LstmCache<T> fwd_cache, bwd_cache;
};

// Batched encoder over positions 0..len_b per element; emb[p] is
// (input_dim x B). Returns the concatenated bidirectional states, one
// (2h x B) matrix per position, zero columns at padded slots.
template <typename T>
std::vector<Mat<T>> tagger_encode_batch(const Tagger<T>& tagger, const std::vector<Mat<T>>& emb,
                                        const std::vector<int>& lens, TaggerCache<T>& cache);

// Backward pass of the encoder; d_emb receives input gradients when non-null.
template <typename T>
void tagger_encode_backward(Tagger<T>& tagger, const std::vector<Mat<T>>& emb,
                            const TaggerCache<T>& cache, const std::vector<Mat<T>>& d_hidden,
                            std::vector<Mat<T>>* d_emb);

// Unnormalized fine-tag scores for one position block.
template <typename T>
Mat<T> fine_logits(const Tagger<T>& tagger, const Mat<T>& hidden);

// Coarse-grained logits from one fine-logit vector:
// l_K = f_Keep, l_D = f_Delete, l_A = log-sum-exp over Append tags,
// l_R = log-sum-exp over Replace tags (max-shifted). An empty Append or
// Replace subset yields -infinity, i.e. coarse probability zero.
template <typename T>
Eigen::Vector4d coarse_logits(const Vec<T>& fine, const SubsetIds& subsets);

struct HierLossStats {
  double loss = 0.0;
  int64_t positions = 0;          // masked-in positions contributing any term
  int64_t oov_positions = 0;      // gold fine tag out of vocabulary
  int64_t skipped_positions = 0;  // OOV gold whose coarse subset is empty
};

// Multi-task loss for one position block: cross-entropy of the gold fine tag
// plus cross-entropy of its coarse category, summed over unmasked columns.
// Out-of-vocabulary gold positions contribute only the coarse term (and are
// skipped entirely if their coarse subset is empty, which is unlearnable).
// Writes exact analytic gradients w.r.t. the fine logits into d_logits
// (zeroed columns where masked) when non-null.
template <typename T>
HierLossStats hier_loss(const Mat<T>& logits, std::span<const EncodedTag> gold,
                        std::span<const uint8_t> valid, const std::vector<Coarse>& coarse_of,
                        const SubsetIds& subsets, bool use_coarse, Mat<T>* d_logits);

enum class DecodeMode { FineArgmax, Hierarchical };

// Greedy decode for one sequence. emb holds one column per position
// (n+1 columns). Fine-argmax takes the best fine tag per position;
// hierarchical mode first picks the best coarse category, then the best fine
// tag within it. Ties break toward the lowest id. Begin-of-sequence slots
// that decode to Delete or Replace are coerced to Keep.
template <typename T>
TagSequence predict_tags(const Tagger<T>& tagger, const TagVocabulary& vocab, const Mat<T>& emb,
                         DecodeMode mode);

// Shared argmax-with-lowest-id-tie-break used by both decode paths.
template <typename T>
int argmax_lowest(const Vec<T>& scores, const std::vector<int>& candidate_ids);

}  // namespace hct
