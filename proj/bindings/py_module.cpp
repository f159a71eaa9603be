// Python bindings for the core operations: alignment, vocabulary building,
// LM pretraining, tagger training, and correction.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "hctagger/char_lm.hpp"
#include "hctagger/corpus_io.hpp"
#include "hctagger/corrector.hpp"
#include "hctagger/grad_check.hpp"
#include "hctagger/model_bundle.hpp"
#include "hctagger/synth.hpp"
#include "hctagger/tag_vocab.hpp"
#include "hctagger/training.hpp"

namespace py = pybind11;
using namespace hct;

namespace {

Str to_u32(const std::string& utf8) { return decode_utf8(utf8); }

py::tuple tag_to_tuple(const EditTag& tag) {
  return py::make_tuple(to_string(tag.kind), encode_utf8(tag.payload));
}

EditTag tag_from_tuple(const py::tuple& t) {
  const std::string kind = t[0].cast<std::string>();
  const Str payload = to_u32(t[1].cast<std::string>());
  if (kind == "K") return EditTag::keep();
  if (kind == "D") return EditTag::del();
  if (kind == "A") return EditTag::append(payload);
  if (kind == "R") return EditTag::replace(payload);
  throw std::invalid_argument("tag kind must be one of K, D, A, R");
}

py::list tags_to_list(const TagSequence& tags) {
  py::list out;
  for (const EditTag& t : tags) out.append(tag_to_tuple(t));
  return out;
}

TagSequence tags_from_list(const py::sequence& seq) {
  TagSequence tags;
  for (auto item : seq) tags.push_back(tag_from_tuple(item.cast<py::tuple>()));
  return tags;
}

std::vector<ParallelExample> load_pairs(const std::string& path) {
  return load_tsv(path).examples;
}

}  // namespace

PYBIND11_MODULE(_hctagger, m) {
  m.doc() = "Hierarchical character tagger for short-text spelling correction";
  m.attr("__version__") = hct_version();

  m.def(
      "find_longest_match",
      [](const std::string& a, const std::string& b) {
        const Match match = find_longest_match(to_u32(a), to_u32(b));
        return py::make_tuple(match.a, match.b, match.size);
      },
      py::arg("a"), py::arg("b"),
      "Longest contiguous matching block (start_a, start_b, size); ties break "
      "toward the earliest positions.");

  m.def(
      "compute_opcodes",
      [](const std::string& source, const std::string& target) {
        py::list out;
        static const char* names[] = {"equal", "delete", "insert", "replace"};
        for (const Opcode& op : compute_opcodes(to_u32(source), to_u32(target)))
          out.append(py::make_tuple(names[static_cast<int>(op.kind)], op.src_lo, op.src_hi,
                                    op.tgt_lo, op.tgt_hi));
        return out;
      },
      py::arg("source"), py::arg("target"));

  m.def(
      "extract_tags",
      [](const std::string& source, const std::string& target) {
        return tags_to_list(extract_tags(to_u32(source), to_u32(target)));
      },
      py::arg("source"), py::arg("target"),
      "Per-character edit tags [(kind, payload), ...]; index 0 is the BOS slot.");

  m.def(
      "apply_tags",
      [](const std::string& source, const py::sequence& tags) {
        return encode_utf8(apply_tags(to_u32(source), tags_from_list(tags)));
      },
      py::arg("source"), py::arg("tags"));

  py::class_<TagVocabulary>(m, "Vocabulary")
      .def_static(
          "build_from_tsv",
          [](const std::string& path, int min_freq, bool lowercase, bool nfc) {
            NormalizeConfig norm{lowercase, nfc};
            std::vector<ParallelExample> examples = load_pairs(path);
            normalize_examples(examples, norm);
            size_t next = 0;
            return build_vocab(
                [&](TagSequence& out) {
                  if (next == examples.size()) return false;
                  out = extract_tags(examples[next].source, examples[next].target);
                  ++next;
                  return true;
                },
                min_freq, norm);
          },
          py::arg("path"), py::arg("min_freq") = 1, py::arg("lowercase") = false,
          py::arg("nfc") = false)
      .def_static("load", &TagVocabulary::load, py::arg("path"))
      .def("save", &TagVocabulary::save, py::arg("path"))
      .def("__len__", &TagVocabulary::size)
      .def("tag", [](const TagVocabulary& v, int id) { return tag_to_tuple(v.tag(id)); },
           py::arg("id"))
      .def("count", &TagVocabulary::count, py::arg("id"))
      .def(
          "encode",
          [](const TagVocabulary& v, const std::string& source, const std::string& target) {
            return v.encode(extract_tags(to_u32(source), to_u32(target)));
          },
          py::arg("source"), py::arg("target"),
          "Fine-tag ids for the aligned pair; negative values are OOV markers.")
      .def("labels", [](const TagVocabulary& v) {
        py::list out;
        for (int id = 0; id < v.size(); ++id) out.append(tag_repr(v.tag(id)));
        return out;
      });

  py::class_<ModelBundle>(m, "Corrector")
      .def_static("load", &ModelBundle::load, py::arg("path"))
      .def(
          "correct",
          [](const ModelBundle& bundle, const std::string& text, int iterations) {
            return correct_utf8(bundle, text, iterations);
          },
          py::arg("text"), py::arg("iterations") = 1)
      .def(
          "correct_detailed",
          [](const ModelBundle& bundle, const std::string& text, int iterations) {
            const Str normalized = normalize(to_u32(text), bundle.config.norm);
            CorrectionResult r = correct(bundle, normalized, iterations);
            py::dict out;
            out["output"] = encode_utf8(r.output);
            out["tags"] = tags_to_list(r.tags);
            out["iterations"] = r.iterations;
            out["changed"] = r.changed;
            return out;
          },
          py::arg("text"), py::arg("iterations") = 1)
      .def(
          "evaluate",
          [](const ModelBundle& bundle, const std::string& test_tsv, int iterations) {
            EvalResult r = evaluate(bundle, load_pairs(test_tsv), iterations);
            py::dict out;
            out["exact_match_accuracy"] = r.exact_match_accuracy;
            out["tag_accuracy"] = r.tag_accuracy;
            out["examples"] = r.examples;
            out["positions"] = r.positions;
            py::list confusion;
            for (int g = 0; g < 4; ++g) {
              py::list row;
              for (int p = 0; p < 4; ++p) row.append(r.coarse_confusion[g][p]);
              confusion.append(row);
            }
            out["coarse_confusion"] = confusion;
            return out;
          },
          py::arg("test_tsv"), py::arg("iterations") = 1);

  m.def(
      "pretrain_lm",
      [](const std::string& corpus_tsv_targets, const std::string& out_path, int embed_dim,
         int hidden, int epochs, double lr, int batch, uint64_t seed) {
        LmPretrainConfig config;
        config.embed_dim = embed_dim;
        config.hidden = hidden;
        config.epochs = epochs;
        config.lr = lr;
        config.batch = batch;
        config.seed = seed;
        std::vector<Str> lines;
        for (const ParallelExample& ex : load_pairs(corpus_tsv_targets))
          lines.push_back(ex.target);
        CharLm<float> lm;
        LmPretrainResult result = pretrain_lm(lm, lines, config);
        save_lm_checkpoint(lm, out_path, "{}");
        py::dict out;
        out["heldout_perplexity"] = result.heldout_perplexity;
        out["lm"] = out_path;
        return out;
      },
      py::arg("corpus_tsv"), py::arg("out_path"), py::arg("embed_dim") = 48,
      py::arg("hidden") = 128, py::arg("epochs") = 5, py::arg("lr") = 1e-3, py::arg("batch") = 32,
      py::arg("seed") = 0,
      "Pretrain the char LM on the target column of a TSV corpus.");

  m.def(
      "train",
      [](const std::string& train_tsv, const std::string& dev_tsv, const std::string& vocab_path,
         const std::optional<std::string>& lm_path, const std::string& model_out, int h_tag,
         int batch, double lr, int epochs, int patience, uint64_t seed, bool use_coarse_loss,
         bool finetune_lm, int embed_width) {
        TagVocabulary vocab = TagVocabulary::load(vocab_path);
        std::vector<ParallelExample> train_set = load_pairs(train_tsv);
        std::vector<ParallelExample> dev_set = load_pairs(dev_tsv);
        normalize_examples(train_set, vocab.normalization());
        normalize_examples(dev_set, vocab.normalization());

        TrainConfig config;
        config.h_tag = h_tag;
        config.batch = batch;
        config.lr = lr;
        config.max_epochs = epochs;
        config.patience = patience;
        config.seed = seed;
        config.use_pretrained_lm = lm_path.has_value();
        config.use_coarse_loss = use_coarse_loss;
        config.finetune_lm = finetune_lm;
        config.embed_width = embed_width;

        std::optional<CharLm<float>> lm;
        if (lm_path) lm = load_lm_checkpoint(*lm_path);

        TrainResult result = train(config, train_set, dev_set, vocab, std::move(lm));
        result.bundle.config.vocab_sha256 = sha256_file(vocab_path);
        result.bundle.save(model_out);

        py::dict out;
        out["best_dev_accuracy"] = result.best_dev_accuracy;
        out["best_epoch"] = result.best_epoch;
        out["epochs_run"] = result.log.size();
        out["model"] = model_out;
        return out;
      },
      py::arg("train_tsv"), py::arg("dev_tsv"), py::arg("vocab"), py::arg("lm"),
      py::arg("model_out"), py::arg("h_tag") = 512, py::arg("batch") = 32, py::arg("lr") = 1e-3,
      py::arg("epochs") = 30, py::arg("patience") = 5, py::arg("seed") = 0,
      py::arg("use_coarse_loss") = true, py::arg("finetune_lm") = true,
      py::arg("embed_width") = 256,
      "Train a tagger; pass lm=None to use the trainable-embedding ablation.");

  m.def(
      "grad_check",
      [](uint64_t seed) {
        GradCheckReport lm = lm_grad_check(seed);
        GradCheckReport tagger = tagger_grad_check(seed);
        py::dict out;
        out["lm_max_rel_error"] = lm.max_rel_error;
        out["tagger_max_rel_error"] = tagger.max_rel_error;
        out["tolerance"] = lm.tolerance;
        out["passed"] = lm.passed() && tagger.passed();
        return out;
      },
      py::arg("seed") = 0);

  m.def(
      "generate_synthetic_corpus",
      [](const std::string& out_tsv, int64_t n, double error_rate, uint64_t seed) {
        SynthConfig config;
        config.n_examples = n;
        config.error_rate = error_rate;
        config.seed = seed;
        save_tsv(out_tsv, generate_synthetic_corpus(config));
        return out_tsv;
      },
      py::arg("out_tsv"), py::arg("n") = 1000, py::arg("error_rate") = 1.0, py::arg("seed") = 0);
}
