#include "hctagger/training.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace hct {

std::vector<Batch> pad_and_batch(const std::vector<EncodedExample>& examples,
                                 const std::vector<int>& order, int batch_size) {
  if (batch_size < 1) throw TrainError("batch size must be >= 1");
  std::vector<Batch> batches;
  for (size_t i = 0; i < order.size(); i += batch_size) {
    Batch b;
    for (size_t k = i; k < std::min(order.size(), i + batch_size); ++k) {
      b.indices.push_back(order[k]);
      b.max_len = std::max(b.max_len, static_cast<int>(examples[order[k]].char_ids.size()));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

EncodedExample encode_example(const ParallelExample& ex, const CharVocab& cv,
                              const TagVocabulary& vocab) {
  EncodedExample enc;
  enc.char_ids = cv.encode(ex.source);
  enc.gold = vocab.encode(extract_tags(ex.source, ex.target));
  return enc;
}

template <typename T>
TrainGraph<T>::TrainGraph(Tagger<T>* tagger, CharLm<T>* lm, Tensor<T>* embed_table,
                          const TagVocabulary& vocab, bool use_coarse, bool finetune_lm)
    : tagger_(tagger),
      lm_(lm),
      embed_table_(embed_table),
      vocab_(&vocab),
      use_coarse_(use_coarse),
      finetune_lm_(finetune_lm) {
  coarse_of_.resize(vocab.size());
  for (int id = 0; id < vocab.size(); ++id) coarse_of_[id] = vocab.coarse_of(id);
  subsets_ = vocab.subset_ids();
}

template <typename T>
std::vector<Mat<T>> TrainGraph<T>::embed_forward(const std::vector<const EncodedExample*>& batch) {
  const int bsize = static_cast<int>(batch.size());
  char_ids_.resize(bsize);
  lens_.resize(bsize);
  int n_max = 0;
  for (int b = 0; b < bsize; ++b) {
    char_ids_[b] = batch[b]->char_ids;
    lens_[b] = static_cast<int>(char_ids_[b].size());
    n_max = std::max(n_max, lens_[b]);
  }

  if (lm_) return lm_embed_batch_forward(*lm_, char_ids_, lm_cache_);

  // Ablation path: per-character trainable embeddings, BOS vector at slot 0.
  const int width = static_cast<int>(embed_table_->v.rows());
  std::vector<Mat<T>> emb(n_max + 1, Mat<T>::Zero(width, bsize));
  for (int b = 0; b < bsize; ++b) {
    emb[0].col(b) = embed_table_->v.col(CharVocab::kBos);
    for (int t = 1; t <= lens_[b]; ++t)
      emb[t].col(b) = embed_table_->v.col(char_ids_[b][t - 1]);
  }
  return emb;
}

template <typename T>
void TrainGraph<T>::embed_backward(const std::vector<Mat<T>>& d_emb) {
  if (lm_) {
    if (finetune_lm_) lm_embed_batch_backward(*lm_, lm_cache_, d_emb);
    return;
  }
  for (int b = 0; b < static_cast<int>(char_ids_.size()); ++b) {
    embed_table_->g.col(CharVocab::kBos) += d_emb[0].col(b);
    for (int t = 1; t <= lens_[b]; ++t)
      embed_table_->g.col(char_ids_[b][t - 1]) += d_emb[t].col(b);
  }
}

template <typename T>
HierLossStats TrainGraph<T>::forward(const std::vector<const EncodedExample*>& batch,
                                     bool keep_for_backward) {
  emb_ = embed_forward(batch);
  hidden_ = tagger_encode_batch(*tagger_, emb_, lens_, tagger_cache_);

  const int steps = static_cast<int>(hidden_.size());
  const int bsize = static_cast<int>(batch.size());
  HierLossStats total;
  d_logits_.assign(keep_for_backward ? steps : 0, Mat<T>());

  std::vector<EncodedTag> gold(bsize);
  std::vector<uint8_t> valid(bsize);
  for (int p = 0; p < steps; ++p) {
    for (int b = 0; b < bsize; ++b) {
      const bool ok = p <= lens_[b];
      valid[b] = ok ? 1 : 0;
      gold[b] = ok ? batch[b]->gold[p] : 0;
    }
    Mat<T> logits = fine_logits(*tagger_, hidden_[p]);
    Mat<T>* dl = keep_for_backward ? &d_logits_[p] : nullptr;
    HierLossStats s = hier_loss<T>(logits, gold, valid, coarse_of_, subsets_, use_coarse_, dl);
    total.loss += s.loss;
    total.positions += s.positions;
    total.oov_positions += s.oov_positions;
    total.skipped_positions += s.skipped_positions;
  }
  return total;
}

template <typename T>
void TrainGraph<T>::backward() {
  const int steps = static_cast<int>(hidden_.size());
  std::vector<Mat<T>> d_hidden(steps);
  for (int p = 0; p < steps; ++p) {
    tagger_->out_w.g.noalias() += d_logits_[p] * hidden_[p].transpose();
    tagger_->out_b.g.col(0) += d_logits_[p].rowwise().sum();
    d_hidden[p] = tagger_->out_w.v.transpose() * d_logits_[p];
  }
  std::vector<Mat<T>> d_emb;
  const bool need_input_grads = lm_ ? finetune_lm_ : true;
  tagger_encode_backward(*tagger_, emb_, tagger_cache_, d_hidden,
                         need_input_grads ? &d_emb : nullptr);
  if (need_input_grads) embed_backward(d_emb);
}

template <typename T>
ParamList<T> TrainGraph<T>::trainable_params() {
  ParamList<T> params = tagger_->params();
  if (lm_) {
    if (finetune_lm_) {
      ParamList<T> lm_params = lm_->params(false);
      params.insert(params.end(), lm_params.begin(), lm_params.end());
    }
  } else {
    params.push_back({"embed_table", embed_table_});
  }
  return params;
}

template <typename T>
std::vector<TagSequence> TrainGraph<T>::predict(const std::vector<const EncodedExample*>& batch,
                                                DecodeMode mode) {
  emb_ = embed_forward(batch);
  hidden_ = tagger_encode_batch(*tagger_, emb_, lens_, tagger_cache_);

  std::vector<int> all_ids(vocab_->size());
  std::iota(all_ids.begin(), all_ids.end(), 0);

  std::vector<TagSequence> out(batch.size());
  for (int b = 0; b < static_cast<int>(batch.size()); ++b) out[b].resize(lens_[b] + 1);
  for (int p = 0; p < static_cast<int>(hidden_.size()); ++p) {
    Mat<T> logits = fine_logits(*tagger_, hidden_[p]);
    for (int b = 0; b < static_cast<int>(batch.size()); ++b) {
      if (p > lens_[b]) continue;
      Vec<T> f = logits.col(b);
      int chosen;
      if (mode == DecodeMode::FineArgmax) {
        chosen = argmax_lowest(f, all_ids);
      } else {
        const Eigen::Vector4d l = coarse_logits(f, subsets_);
        int best_coarse = 0;
        for (int v = 1; v < 4; ++v)
          if (l[v] > l[best_coarse]) best_coarse = v;
        chosen = argmax_lowest(f, subsets_[best_coarse]);
      }
      EditTag tag = vocab_->tag(chosen);
      if (p == 0 && (tag.kind == TagKind::Delete || tag.kind == TagKind::Replace))
        tag = EditTag::keep();
      out[b][p] = std::move(tag);
    }
  }
  return out;
}

template class TrainGraph<float>;
template class TrainGraph<double>;

namespace {

// Snapshot of parameter values for best-checkpoint retention.
template <typename T>
std::vector<Mat<T>> snapshot(const ParamList<T>& params) {
  std::vector<Mat<T>> vals;
  vals.reserve(params.size());
  for (const auto& p : params) vals.push_back(p.tensor->v);
  return vals;
}

template <typename T>
void restore(const ParamList<T>& params, const std::vector<Mat<T>>& vals) {
  for (size_t i = 0; i < params.size(); ++i) params[i].tensor->v = vals[i];
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<ParallelExample>& train_set,
                  const std::vector<ParallelExample>& dev_set, const TagVocabulary& vocab,
                  std::optional<CharLm<float>> pretrained_lm,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_set.empty()) throw TrainError("training set is empty");
  if (config.h_tag < 1 || config.batch < 1 || config.patience < 1 || config.max_epochs < 1)
    throw TrainError("invalid training configuration");
  if (config.use_pretrained_lm && !pretrained_lm)
    throw TrainError("use_pretrained_lm requires a pretrained LM");

  TrainResult result;
  ModelBundle& bundle = result.bundle;
  bundle.config.h_tag = config.h_tag;
  bundle.config.use_pretrained_lm = config.use_pretrained_lm;
  bundle.config.use_coarse_loss = config.use_coarse_loss;
  bundle.config.finetune_lm = config.finetune_lm;
  bundle.config.seed = config.seed;
  bundle.config.decode_mode = config.decode_mode;
  bundle.tag_vocab = vocab;
  bundle.config.norm = vocab.normalization();

  Rng rng(config.seed);
  Rng init_rng = rng.fork(1);
  Rng shuffle_rng = rng.fork(2);

  if (config.use_pretrained_lm) {
    bundle.lm = std::move(*pretrained_lm);
    bundle.char_vocab = bundle.lm->vocab;
    bundle.config.input_dim = bundle.lm->output_width();
  } else {
    // Character vocabulary over both sides of the training data.
    std::vector<Str> lines;
    lines.reserve(2 * train_set.size());
    for (const auto& ex : train_set) {
      lines.push_back(ex.source);
      lines.push_back(ex.target);
    }
    bundle.char_vocab = CharVocab::build(lines);
    bundle.config.input_dim = config.embed_width;
    Tensor<float> table;
    table.resize(config.embed_width, bundle.char_vocab.size());
    table.init_uniform(init_rng, 0.1f);
    bundle.embed_table = std::move(table);
  }
  bundle.tagger.init(bundle.config.input_dim, config.h_tag, vocab.size(), init_rng);

  std::vector<EncodedExample> train_enc, dev_enc;
  train_enc.reserve(train_set.size());
  for (const auto& ex : train_set)
    train_enc.push_back(encode_example(ex, bundle.char_vocab, vocab));
  dev_enc.reserve(dev_set.size());
  for (const auto& ex : dev_set) dev_enc.push_back(encode_example(ex, bundle.char_vocab, vocab));

  TrainGraph<float> graph(&bundle.tagger, bundle.lm ? &*bundle.lm : nullptr,
                          bundle.embed_table ? &*bundle.embed_table : nullptr, vocab,
                          config.use_coarse_loss, config.finetune_lm);
  ParamList<float> params = graph.trainable_params();
  Adam<float> opt(config.lr, TrainConfig::kAdamBeta1, TrainConfig::kAdamBeta2,
                  TrainConfig::kAdamEps);

  auto dev_exact_match = [&]() {
    if (dev_enc.empty()) return 0.0;
    int64_t hits = 0;
    const int eval_batch = std::max(config.batch, 16);
    for (size_t i = 0; i < dev_enc.size(); i += eval_batch) {
      std::vector<const EncodedExample*> batch;
      for (size_t k = i; k < std::min(dev_enc.size(), i + eval_batch); ++k)
        batch.push_back(&dev_enc[k]);
      const DecodeMode mode =
          config.decode_mode == "hier" ? DecodeMode::Hierarchical : DecodeMode::FineArgmax;
      std::vector<TagSequence> tags = graph.predict(batch, mode);
      for (size_t k = 0; k < batch.size(); ++k) {
        const ParallelExample& ex = dev_set[i + k];
        if (apply_tags(ex.source, tags[k]) == ex.target) ++hits;
      }
    }
    return static_cast<double>(hits) / static_cast<double>(dev_enc.size());
  };

  std::vector<int> order(train_enc.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<Mat<float>> best_params = snapshot(params);
  result.best_dev_accuracy = -1.0;
  result.best_epoch = 0;
  int epochs_since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    const std::vector<Batch> batches = pad_and_batch(train_enc, order, config.batch);

    double loss_sum = 0.0;
    for (const Batch& b : batches) {
      std::vector<const EncodedExample*> batch;
      batch.reserve(b.indices.size());
      for (int idx : b.indices) batch.push_back(&train_enc[idx]);
      zero_grads(params);
      HierLossStats s = graph.forward(batch, true);
      graph.backward();
      const float scale = 1.0f / static_cast<float>(batch.size());
      for (auto& p : params) p.tensor->g *= scale;
      clip_gradients(params, TrainConfig::kClipNorm);
      opt.step(params);
      loss_sum += s.loss;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_enc.size());
    log.dev_accuracy = dev_exact_match();
    log.seconds = deterministic_mode()
                      ? 0.0
                      : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.dev_accuracy > result.best_dev_accuracy) {
      result.best_dev_accuracy = log.dev_accuracy;
      result.best_epoch = epoch;
      best_params = snapshot(params);
      epochs_since_best = 0;
    } else if (++epochs_since_best >= config.patience) {
      break;
    }
  }

  restore(params, best_params);
  return result;
}

int64_t trainable_parameter_count(const TrainConfig& config, int n_fine, int char_vocab_size,
                                  int lm_embed_dim, int lm_hidden) {
  Rng rng(0);
  const int input_dim = config.use_pretrained_lm ? 2 * lm_hidden : config.embed_width;
  Tagger<float> tagger;
  tagger.init(input_dim, config.h_tag, n_fine, rng);
  CharLm<float> lm;
  Tensor<float> table;
  TagVocabulary vocab;  // only reserved tags; subsets irrelevant for counting
  CharLm<float>* lm_ptr = nullptr;
  Tensor<float>* table_ptr = nullptr;
  if (config.use_pretrained_lm) {
    std::vector<Str> dummy;
    dummy.push_back(U"ab");
    lm.init(CharVocab::build(dummy), lm_embed_dim, lm_hidden, rng);
    // Pad the vocabulary to the requested size for an honest embedding count.
    lm.embedding.resize(lm_embed_dim, char_vocab_size);
    lm.proj_fwd_w.resize(char_vocab_size, lm_hidden);
    lm.proj_fwd_b.resize(char_vocab_size, 1);
    lm.proj_bwd_w.resize(char_vocab_size, lm_hidden);
    lm.proj_bwd_b.resize(char_vocab_size, 1);
    lm_ptr = &lm;
  } else {
    table.resize(config.embed_width, char_vocab_size);
    table_ptr = &table;
  }
  TrainGraph<float> graph(&tagger, lm_ptr, table_ptr, vocab, config.use_coarse_loss,
                          config.finetune_lm);
  return parameter_count(graph.trainable_params());
}

}  // namespace hct
