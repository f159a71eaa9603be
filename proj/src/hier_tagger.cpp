#include "hctagger/hier_tagger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hct {

template <typename T>
std::vector<Mat<T>> tagger_encode_batch(const Tagger<T>& tagger, const std::vector<Mat<T>>& emb,
                                        const std::vector<int>& lens, TaggerCache<T>& cache) {
  const int steps = static_cast<int>(emb.size());
  const int batch = steps > 0 ? static_cast<int>(emb[0].cols()) : 0;
  const int h = tagger.hidden;
  cache.lens = lens;

  // Per-element reversal so the backward direction consumes real positions
  // before padding.
  cache.bwd_x.assign(steps, Mat<T>::Zero(tagger.input_dim, batch));
  for (int b = 0; b < batch; ++b) {
    const int n = lens[b];
    for (int t = 0; t <= n; ++t) cache.bwd_x[t].col(b) = emb[n - t].col(b);
  }

  lstm_forward(tagger.fwd, emb, cache.fwd_cache);
  lstm_forward(tagger.bwd, cache.bwd_x, cache.bwd_cache);

  std::vector<Mat<T>> hidden(steps, Mat<T>::Zero(2 * h, batch));
  for (int p = 0; p < steps; ++p) {
    for (int b = 0; b < batch; ++b) {
      if (p > lens[b]) continue;
      hidden[p].col(b).head(h) = cache.fwd_cache.h[p].col(b);
      hidden[p].col(b).tail(h) = cache.bwd_cache.h[lens[b] - p].col(b);
    }
  }
  return hidden;
}

template <typename T>
void tagger_encode_backward(Tagger<T>& tagger, const std::vector<Mat<T>>& emb,
                            const TaggerCache<T>& cache, const std::vector<Mat<T>>& d_hidden,
                            std::vector<Mat<T>>* d_emb) {
  const int steps = static_cast<int>(emb.size());
  const int batch = steps > 0 ? static_cast<int>(emb[0].cols()) : 0;
  const int h = tagger.hidden;

  std::vector<Mat<T>> dh_fwd(steps, Mat<T>::Zero(h, batch));
  std::vector<Mat<T>> dh_bwd(steps, Mat<T>::Zero(h, batch));
  for (int p = 0; p < steps; ++p) {
    for (int b = 0; b < batch; ++b) {
      if (p > cache.lens[b]) continue;
      dh_fwd[p].col(b) = d_hidden[p].col(b).head(h);
      dh_bwd[cache.lens[b] - p].col(b) += d_hidden[p].col(b).tail(h);
    }
  }

  std::vector<Mat<T>> dx_fwd, dx_bwd;
  lstm_backward(tagger.fwd, cache.fwd_cache, dh_fwd, d_emb ? &dx_fwd : nullptr);
  lstm_backward(tagger.bwd, cache.bwd_cache, dh_bwd, d_emb ? &dx_bwd : nullptr);
  if (d_emb) {
    d_emb->assign(steps, Mat<T>::Zero(tagger.input_dim, batch));
    for (int p = 0; p < steps; ++p) (*d_emb)[p] = dx_fwd[p];
    for (int b = 0; b < batch; ++b) {
      const int n = cache.lens[b];
      for (int t = 0; t <= n; ++t) (*d_emb)[n - t].col(b) += dx_bwd[t].col(b);
    }
  }
}

template <typename T>
Mat<T> fine_logits(const Tagger<T>& tagger, const Mat<T>& hidden) {
  return (tagger.out_w.v * hidden).colwise() + tagger.out_b.v.col(0);
}

template <typename T>
Eigen::Vector4d coarse_logits(const Vec<T>& fine, const SubsetIds& subsets) {
  Eigen::Vector4d out;
  out[static_cast<int>(Coarse::K)] = static_cast<double>(fine[TagVocabulary::kKeepId]);
  out[static_cast<int>(Coarse::D)] = static_cast<double>(fine[TagVocabulary::kDeleteId]);
  out[static_cast<int>(Coarse::A)] = log_sum_exp(fine, subsets[static_cast<int>(Coarse::A)]);
  out[static_cast<int>(Coarse::R)] = log_sum_exp(fine, subsets[static_cast<int>(Coarse::R)]);
  return out;
}

template <typename T>
HierLossStats hier_loss(const Mat<T>& logits, std::span<const EncodedTag> gold,
                        std::span<const uint8_t> valid, const std::vector<Coarse>& coarse_of,
                        const SubsetIds& subsets, bool use_coarse, Mat<T>* d_logits) {
  const int n_fine = static_cast<int>(logits.rows());
  const int batch = static_cast<int>(logits.cols());
  HierLossStats stats;
  if (d_logits) d_logits->setZero(n_fine, batch);

  Vec<T> p(n_fine);
  for (int b = 0; b < batch; ++b) {
    if (!valid[b]) continue;
    const EncodedTag g = gold[b];

    const T mx = logits.col(b).maxCoeff();
    p = (logits.col(b).array() - mx).exp().matrix();
    const double z = static_cast<double>(p.sum());
    p /= static_cast<T>(z);

    const bool gold_oov = is_oov(g);
    const Coarse gold_coarse = gold_oov ? oov_coarse(g) : coarse_of[g];
    const auto& subset = subsets[static_cast<int>(gold_coarse)];

    if (gold_oov && subset.empty()) {
      // No fine logit exists for this category; nothing to learn here.
      ++stats.skipped_positions;
      continue;
    }
    ++stats.positions;
    if (gold_oov) ++stats.oov_positions;

    if (!gold_oov) {
      // -log softmax(f)_g in max-shifted form.
      stats.loss += -(static_cast<double>(logits(g, b)) - static_cast<double>(mx) - std::log(z));
      if (d_logits) {
        d_logits->col(b) = p;
        (*d_logits)(g, b) -= static_cast<T>(1);
      }
    }

    if (use_coarse) {
      // Coarse probability of the gold category is the exact sum of its fine
      // probabilities (the sum rule); its log is computed from the shifted
      // exponentials for stability.
      double subset_exp_sum = 0.0;
      for (int id : subset) subset_exp_sum += static_cast<double>(p[id]);
      const double q = std::max(subset_exp_sum, 1e-300);
      stats.loss += -std::log(q);
      if (d_logits) {
        d_logits->col(b) += p;
        const T inv_q = static_cast<T>(1.0 / q);
        for (int id : subset) (*d_logits)(id, b) -= p[id] * inv_q;
      }
    }
  }
  return stats;
}

template <typename T>
int argmax_lowest(const Vec<T>& scores, const std::vector<int>& candidate_ids) {
  int best = -1;
  T best_score = -std::numeric_limits<T>::infinity();
  for (int id : candidate_ids) {
    if (scores[id] > best_score) {
      best_score = scores[id];
      best = id;
    }
  }
  return best;
}

template <typename T>
TagSequence predict_tags(const Tagger<T>& tagger, const TagVocabulary& vocab, const Mat<T>& emb,
                         DecodeMode mode) {
  const int positions = static_cast<int>(emb.cols());
  const int n = positions - 1;

  std::vector<Mat<T>> xs(positions);
  for (int p = 0; p < positions; ++p) xs[p] = emb.col(p);
  std::vector<int> lens{n};
  TaggerCache<T> cache;
  std::vector<Mat<T>> hidden = tagger_encode_batch(tagger, xs, lens, cache);

  const SubsetIds subsets = vocab.subset_ids();
  std::vector<int> all_ids(vocab.size());
  for (int i = 0; i < vocab.size(); ++i) all_ids[i] = i;

  TagSequence tags(positions);
  for (int p = 0; p < positions; ++p) {
    Vec<T> f = fine_logits(tagger, hidden[p]).col(0);
    int chosen;
    if (mode == DecodeMode::FineArgmax) {
      chosen = argmax_lowest(f, all_ids);
    } else {
      const Eigen::Vector4d l = coarse_logits(f, subsets);
      int best_coarse = 0;
      for (int v = 1; v < 4; ++v)
        if (l[v] > l[best_coarse]) best_coarse = v;
      chosen = argmax_lowest(f, subsets[best_coarse]);
    }
    EditTag tag = vocab.tag(chosen);
    if (p == 0 && (tag.kind == TagKind::Delete || tag.kind == TagKind::Replace))
      tag = EditTag::keep();
    tags[p] = std::move(tag);
  }
  return tags;
}

#define HCT_INSTANTIATE(T)                                                                        \
  template std::vector<Mat<T>> tagger_encode_batch(const Tagger<T>&, const std::vector<Mat<T>>&, \
                                                   const std::vector<int>&, TaggerCache<T>&);    \
  template void tagger_encode_backward(Tagger<T>&, const std::vector<Mat<T>>&,                   \
                                       const TaggerCache<T>&, const std::vector<Mat<T>>&,        \
                                       std::vector<Mat<T>>*);                                    \
  template Mat<T> fine_logits(const Tagger<T>&, const Mat<T>&);                                  \
  template Eigen::Vector4d coarse_logits(const Vec<T>&, const SubsetIds&);                       \
  template HierLossStats hier_loss(const Mat<T>&, std::span<const EncodedTag>,                   \
                                   std::span<const uint8_t>, const std::vector<Coarse>&,         \
                                   const SubsetIds&, bool, Mat<T>*);                             \
  template int argmax_lowest(const Vec<T>&, const std::vector<int>&);                            \
  template TagSequence predict_tags(const Tagger<T>&, const TagVocabulary&, const Mat<T>&,       \
                                    DecodeMode);

HCT_INSTANTIATE(float)
HCT_INSTANTIATE(double)
#undef HCT_INSTANTIATE

}  // namespace hct
