#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hctagger/corpus_io.hpp"
#include "hctagger/model_bundle.hpp"

namespace hct {

struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Hyperparameters. The tuning grids are h_tag in {512,1024}, batch in
// {8,16,32}, lr in {1e-2,1e-3}; the CLI enforces them, the library accepts
// any positive values so small models stay testable.
struct TrainConfig {
  int h_tag = 512;
  int batch = 32;
  double lr = 1e-3;
  int max_epochs = 30;
  int patience = 5;
  uint64_t seed = 0;
  bool use_pretrained_lm = true;
  bool finetune_lm = true;
  bool use_coarse_loss = true;
  int embed_width = 256;  // ablation embedding-table width when no LM is used
  std::string decode_mode = "fine";

  static constexpr double kClipNorm = 5.0;
  static constexpr double kAdamBeta1 = 0.9;
  static constexpr double kAdamBeta2 = 0.999;
  static constexpr double kAdamEps = 1e-8;
};

// One example after vocabulary lookup.
struct EncodedExample {
  std::vector<int> char_ids;      // source characters, length n
  std::vector<EncodedTag> gold;   // gold tags, length n+1 (index 0 = BOS slot)
};

// A batch is a deterministic slice of example indices; padding width is the
// longest member. Positions beyond len+1 are masked from loss and accuracy.
struct Batch {
  std::vector<int> indices;
  int max_len = 0;
};

std::vector<Batch> pad_and_batch(const std::vector<EncodedExample>& examples,
                                 const std::vector<int>& order, int batch_size);

// Differentiable pipeline shared by training and the gradient checks:
// embeddings (LM or table) -> bidirectional tagger -> fine logits ->
// hierarchical loss. Loss is summed over characters and examples; the
// trainer divides by the batch size.
template <typename T>
class TrainGraph {
 public:
  TrainGraph(Tagger<T>* tagger, CharLm<T>* lm, Tensor<T>* embed_table, const TagVocabulary& vocab,
             bool use_coarse, bool finetune_lm);

  HierLossStats forward(const std::vector<const EncodedExample*>& batch, bool keep_for_backward);
  void backward();

  // Trainable tensors under the current flags (LM projections excluded; LM
  // excluded entirely when frozen).
  ParamList<T> trainable_params();

  // Greedy predictions for a batch (shares the batched forward pass).
  std::vector<TagSequence> predict(const std::vector<const EncodedExample*>& batch,
                                   DecodeMode mode);

 private:
  std::vector<Mat<T>> embed_forward(const std::vector<const EncodedExample*>& batch);
  void embed_backward(const std::vector<Mat<T>>& d_emb);

  Tagger<T>* tagger_;
  CharLm<T>* lm_;
  Tensor<T>* embed_table_;
  const TagVocabulary* vocab_;
  std::vector<Coarse> coarse_of_;
  SubsetIds subsets_;
  bool use_coarse_;
  bool finetune_lm_;

  // caches of the last forward pass
  std::vector<int> lens_;
  std::vector<std::vector<int>> char_ids_;  // batch char ids (for table scatter)
  LmEmbedCache<T> lm_cache_;
  std::vector<Mat<T>> emb_;
  TaggerCache<T> tagger_cache_;
  std::vector<Mat<T>> hidden_;
  std::vector<Mat<T>> d_logits_;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;    // mean per-example loss
  double dev_accuracy = 0.0;  // whole-string exact match
  double seconds = 0.0;       // 0 in deterministic mode
};

struct TrainResult {
  ModelBundle bundle;  // best-dev parameters
  double best_dev_accuracy = 0.0;
  int best_epoch = 0;
  std::vector<EpochLog> log;
};

// End-to-end training. The vocabulary must have been built from the training
// set only; dev is used for early stopping (patience epochs without
// improvement) and checkpoint selection (running maximum). With
// use_pretrained_lm=false the LM is replaced by a trainable embedding table
// of width embed_width; with use_coarse_loss=false only the fine term
// trains. Examples are assumed already normalized.
TrainResult train(const TrainConfig& config, const std::vector<ParallelExample>& train_set,
                  const std::vector<ParallelExample>& dev_set, const TagVocabulary& vocab,
                  std::optional<CharLm<float>> pretrained_lm,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Encoding used by the trainer and evaluator: characters through the char
// vocabulary, gold tags through the tag vocabulary (OOV markers preserved).
EncodedExample encode_example(const ParallelExample& ex, const CharVocab& cv,
                              const TagVocabulary& vocab);

// Trainable-parameter count for a would-be run with this config; used to
// demonstrate that the coarse loss adds no parameters.
int64_t trainable_parameter_count(const TrainConfig& config, int n_fine, int char_vocab_size,
                                  int lm_embed_dim, int lm_hidden);

}  // namespace hct
