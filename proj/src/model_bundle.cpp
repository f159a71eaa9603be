#include "hctagger/model_bundle.hpp"

#include <cstdlib>

#include "vendor_json.hpp"

namespace hct {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "hctagger 0.1.0";

json norm_to_json(const NormalizeConfig& n) {
  return json{{"lowercase", n.lowercase}, {"nfc", n.nfc}};
}

NormalizeConfig norm_from_json(const json& j) {
  NormalizeConfig n;
  n.lowercase = j.value("lowercase", false);
  n.nfc = j.value("nfc", false);
  return n;
}

template <typename T>
void add_lm_tensors(Checkpoint& ckpt, const CharLm<T>& lm) {
  checkpoint_add(ckpt, "lm.embedding", lm.embedding.v);
  checkpoint_add(ckpt, "lm.fwd.w", lm.fwd.w.v);
  checkpoint_add(ckpt, "lm.fwd.b", lm.fwd.b.v);
  checkpoint_add(ckpt, "lm.bwd.w", lm.bwd.w.v);
  checkpoint_add(ckpt, "lm.bwd.b", lm.bwd.b.v);
  checkpoint_add(ckpt, "lm.proj_fwd_w", lm.proj_fwd_w.v);
  checkpoint_add(ckpt, "lm.proj_fwd_b", lm.proj_fwd_b.v);
  checkpoint_add(ckpt, "lm.proj_bwd_w", lm.proj_bwd_w.v);
  checkpoint_add(ckpt, "lm.proj_bwd_b", lm.proj_bwd_b.v);
}

json lm_meta(const CharLm<float>& lm) {
  return json{{"embed_dim", lm.embed_dim},
              {"hidden", lm.hidden},
              {"char_vocab", lm.vocab.to_utf8()}};
}

CharLm<float> lm_from_checkpoint(const Checkpoint& ckpt, const json& meta) {
  CharLm<float> lm;
  lm.vocab = CharVocab::from_utf8(meta.at("char_vocab").get<std::string>());
  lm.embed_dim = meta.at("embed_dim").get<int>();
  lm.hidden = meta.at("hidden").get<int>();
  auto load_tensor = [&](Tensor<float>& t, const std::string& name) {
    t.v = checkpoint_matrix<float>(ckpt, name);
    t.g.setZero(t.v.rows(), t.v.cols());
  };
  load_tensor(lm.embedding, "lm.embedding");
  lm.fwd.in = lm.embed_dim;
  lm.fwd.hidden = lm.hidden;
  load_tensor(lm.fwd.w, "lm.fwd.w");
  load_tensor(lm.fwd.b, "lm.fwd.b");
  lm.bwd.in = lm.embed_dim;
  lm.bwd.hidden = lm.hidden;
  load_tensor(lm.bwd.w, "lm.bwd.w");
  load_tensor(lm.bwd.b, "lm.bwd.b");
  load_tensor(lm.proj_fwd_w, "lm.proj_fwd_w");
  load_tensor(lm.proj_fwd_b, "lm.proj_fwd_b");
  load_tensor(lm.proj_bwd_w, "lm.proj_bwd_w");
  load_tensor(lm.proj_bwd_b, "lm.proj_bwd_b");
  return lm;
}

}  // namespace

void ModelBundle::save(const std::string& path) const {
  Checkpoint ckpt;
  json meta;
  meta["kind"] = "hct-model";
  meta["version"] = kVersion;
  meta["config"] = json{{"h_tag", config.h_tag},
                        {"input_dim", config.input_dim},
                        {"use_pretrained_lm", config.use_pretrained_lm},
                        {"use_coarse_loss", config.use_coarse_loss},
                        {"finetune_lm", config.finetune_lm},
                        {"seed", config.seed},
                        {"decode_mode", config.decode_mode},
                        {"norm", norm_to_json(config.norm)},
                        {"vocab_sha256", config.vocab_sha256}};
  meta["tag_vocab"] = tag_vocab.serialize();
  meta["char_vocab"] = char_vocab.to_utf8();
  if (lm) meta["lm"] = lm_meta(*lm);
  ckpt.metadata = meta.dump();

  checkpoint_add(ckpt, "tagger.fwd.w", tagger.fwd.w.v);
  checkpoint_add(ckpt, "tagger.fwd.b", tagger.fwd.b.v);
  checkpoint_add(ckpt, "tagger.bwd.w", tagger.bwd.w.v);
  checkpoint_add(ckpt, "tagger.bwd.b", tagger.bwd.b.v);
  checkpoint_add(ckpt, "tagger.out_w", tagger.out_w.v);
  checkpoint_add(ckpt, "tagger.out_b", tagger.out_b.v);
  if (lm) add_lm_tensors(ckpt, *lm);
  if (embed_table) checkpoint_add(ckpt, "embed_table", embed_table->v);
  ckpt.save(path);
}

ModelBundle ModelBundle::load(const std::string& path) {
  Checkpoint ckpt = Checkpoint::load_file(path);
  json meta = json::parse(ckpt.metadata);
  if (meta.value("kind", "") != "hct-model")
    throw CheckpointError("not a model bundle: " + path);

  ModelBundle bundle;
  const json& cfg = meta.at("config");
  bundle.config.h_tag = cfg.at("h_tag").get<int>();
  bundle.config.input_dim = cfg.at("input_dim").get<int>();
  bundle.config.use_pretrained_lm = cfg.at("use_pretrained_lm").get<bool>();
  bundle.config.use_coarse_loss = cfg.at("use_coarse_loss").get<bool>();
  bundle.config.finetune_lm = cfg.value("finetune_lm", true);
  bundle.config.seed = cfg.value("seed", 0ULL);
  bundle.config.decode_mode = cfg.value("decode_mode", "fine");
  bundle.config.norm = norm_from_json(cfg.at("norm"));
  bundle.config.vocab_sha256 = cfg.value("vocab_sha256", "");
  bundle.tag_vocab = TagVocabulary::deserialize(meta.at("tag_vocab").get<std::string>());
  bundle.char_vocab = CharVocab::from_utf8(meta.at("char_vocab").get<std::string>());

  auto load_tensor = [&](Tensor<float>& t, const std::string& name) {
    t.v = checkpoint_matrix<float>(ckpt, name);
    t.g.setZero(t.v.rows(), t.v.cols());
  };
  bundle.tagger.input_dim = bundle.config.input_dim;
  bundle.tagger.hidden = bundle.config.h_tag;
  bundle.tagger.n_fine = bundle.tag_vocab.size();
  bundle.tagger.fwd.in = bundle.config.input_dim;
  bundle.tagger.fwd.hidden = bundle.config.h_tag;
  bundle.tagger.bwd.in = bundle.config.input_dim;
  bundle.tagger.bwd.hidden = bundle.config.h_tag;
  load_tensor(bundle.tagger.fwd.w, "tagger.fwd.w");
  load_tensor(bundle.tagger.fwd.b, "tagger.fwd.b");
  load_tensor(bundle.tagger.bwd.w, "tagger.bwd.w");
  load_tensor(bundle.tagger.bwd.b, "tagger.bwd.b");
  load_tensor(bundle.tagger.out_w, "tagger.out_w");
  load_tensor(bundle.tagger.out_b, "tagger.out_b");

  if (meta.contains("lm")) bundle.lm = lm_from_checkpoint(ckpt, meta.at("lm"));
  if (ckpt.has("embed_table")) {
    Tensor<float> table;
    load_tensor(table, "embed_table");
    bundle.embed_table = std::move(table);
  }
  return bundle;
}

Mat<float> ModelBundle::embed(StrView chars) const {
  if (lm) return embed_sequence(*lm, chars);
  if (!embed_table) throw CheckpointError("model bundle has neither LM nor embedding table");
  const int width = static_cast<int>(embed_table->v.rows());
  Mat<float> out(width, static_cast<int>(chars.size()) + 1);
  out.col(0) = embed_table->v.col(CharVocab::kBos);
  for (size_t i = 0; i < chars.size(); ++i)
    out.col(static_cast<int>(i) + 1) = embed_table->v.col(char_vocab.id_of(chars[i]));
  return out;
}

void save_lm_checkpoint(const CharLm<float>& lm, const std::string& path,
                        const std::string& extra_metadata_json) {
  Checkpoint ckpt;
  json meta;
  meta["kind"] = "hct-lm";
  meta["version"] = kVersion;
  meta["lm"] = lm_meta(lm);
  if (!extra_metadata_json.empty()) meta["pretrain"] = json::parse(extra_metadata_json);
  ckpt.metadata = meta.dump();
  add_lm_tensors(ckpt, lm);
  ckpt.save(path);
}

CharLm<float> load_lm_checkpoint(const std::string& path, std::string* metadata_json) {
  Checkpoint ckpt = Checkpoint::load_file(path);
  json meta = json::parse(ckpt.metadata);
  if (meta.value("kind", "") != "hct-lm")
    throw CheckpointError("not an LM checkpoint: " + path);
  if (metadata_json) *metadata_json = ckpt.metadata;
  return lm_from_checkpoint(ckpt, meta.at("lm"));
}

bool deterministic_mode() {
  static const bool value = [] {
    const char* env = std::getenv("HCT_DETERMINISTIC");
    return env != nullptr && std::string_view(env) == "1";
  }();
  return value;
}

std::string hct_version() { return kVersion; }

}  // namespace hct
