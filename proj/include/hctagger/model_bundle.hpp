#pragma once

#include <optional>
#include <string>

#include "hctagger/char_lm.hpp"
#include "hctagger/checkpoint.hpp"
#include "hctagger/hier_tagger.hpp"
#include "hctagger/tag_vocab.hpp"

namespace hct {

// Everything needed to run correction from a single file: the tag vocabulary,
// the character vocabulary, the trained tagger, and either the fine-tuned
// character LM or the ablation embedding table.
struct ModelBundle {
  // Hyperparameters and provenance, stored in checkpoint metadata.
  struct Config {
    int h_tag = 512;
    int input_dim = 0;
    bool use_pretrained_lm = true;
    bool use_coarse_loss = true;
    bool finetune_lm = true;
    uint64_t seed = 0;
    NormalizeConfig norm;
    std::string vocab_sha256;  // digest of the vocabulary file used at training
    std::string decode_mode = "fine";
  };

  Config config;
  TagVocabulary tag_vocab;
  CharVocab char_vocab;
  std::optional<CharLm<float>> lm;
  std::optional<Tensor<float>> embed_table;  // (input_dim x |char vocab|)
  Tagger<float> tagger;

  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);

  // Per-position input representation for one sequence (used at inference).
  Mat<float> embed(StrView chars) const;
};

// Standalone pretrained-LM checkpoint.
void save_lm_checkpoint(const CharLm<float>& lm, const std::string& path,
                        const std::string& extra_metadata_json);
CharLm<float> load_lm_checkpoint(const std::string& path, std::string* metadata_json = nullptr);

// True when HCT_DETERMINISTIC=1: byte-identical outputs are required, so
// wall-clock fields in logs are zeroed.
bool deterministic_mode();

std::string hct_version();

}  // namespace hct
