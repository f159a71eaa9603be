// hct: command-line front end for the hierarchical character tagger.
// Machine-readable output goes to stdout (JSON/TSV); human summaries and
// progress go to stderr. Exit codes: 0 success, 1 usage error, 2 data error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hctagger/char_lm.hpp"
#include "hctagger/corpus_io.hpp"
#include "hctagger/corrector.hpp"
#include "hctagger/grad_check.hpp"
#include "hctagger/model_bundle.hpp"
#include "hctagger/synth.hpp"
#include "hctagger/tag_vocab.hpp"
#include "hctagger/training.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace hct;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json norm_json(const NormalizeConfig& n) {
  return json{{"lowercase", n.lowercase}, {"nfc", n.nfc}};
}

json file_digest(const std::string& path) {
  ManifestEntry e = manifest_entry_for(path);
  return json{{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}};
}

void write_run_manifest(const std::string& beside, const json& config,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs, uint64_t seed) {
  json j;
  j["version"] = hct_version();
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = json::array();
  for (const auto& p : inputs) j["inputs"].push_back(file_digest(p));
  j["outputs"] = json::array();
  for (const auto& p : outputs) j["outputs"].push_back(file_digest(p));
  std::ofstream out(beside, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + beside);
  out << j.dump(2) << "\n";
}

std::vector<ParallelExample> load_normalized(const std::string& path, const NormalizeConfig& norm,
                                             int64_t* skipped = nullptr) {
  TsvLoadResult r = load_tsv(path);
  if (skipped) *skipped = r.skipped_lines;
  if (r.skipped_lines > 0)
    std::cerr << "note: skipped " << r.skipped_lines << " malformed line(s) in " << path << "\n";
  normalize_examples(r.examples, norm);
  return r.examples;
}

DecodeMode parse_decode_mode(const std::string& mode) {
  if (mode == "fine") return DecodeMode::FineArgmax;
  if (mode == "hier") return DecodeMode::Hierarchical;
  throw UsageError("--decode-mode must be fine or hier");
}

void check_grid(int hidden, int batch, double lr) {
  if (hidden != 512 && hidden != 1024)
    throw UsageError("--hidden must be one of {512, 1024}");
  if (batch != 8 && batch != 16 && batch != 32)
    throw UsageError("--batch must be one of {8, 16, 32}");
  if (lr != 1e-2 && lr != 1e-3)
    throw UsageError("--lr must be one of {1e-2, 1e-3}");
}

int run_build_vocab(const std::string& train_path, const std::string& vocab_path, int min_freq,
                    bool lowercase, bool nfc, bool stats) {
  NormalizeConfig norm{lowercase, nfc};
  std::vector<ParallelExample> examples = load_normalized(train_path, norm);

  size_t next = 0;
  TagVocabulary vocab = build_vocab(
      [&](TagSequence& out) {
        if (next == examples.size()) return false;
        out = extract_tags(examples[next].source, examples[next].target);
        ++next;
        return true;
      },
      min_freq, norm);
  vocab.save(vocab_path);
  write_run_manifest(vocab_path + ".manifest.json",
                     json{{"command", "build-vocab"},
                          {"min_freq", min_freq},
                          {"norm", norm_json(norm)}},
                     {train_path}, {vocab_path}, 0);

  std::cerr << "vocabulary: " << vocab.size() << " fine tags from " << examples.size()
            << " pairs -> " << vocab_path << "\n";
  if (stats) write_histogram_tsv(std::cout, label_histogram(vocab));
  return 0;
}

int run_pretrain_lm(const std::string& train_path, const std::string& lm_path, bool tsv_targets,
                    int embed_dim, int hidden, int epochs, double lr, int batch, uint64_t seed,
                    bool lowercase, bool nfc) {
  NormalizeConfig norm{lowercase, nfc};
  std::vector<Str> lines;
  if (tsv_targets) {
    for (const ParallelExample& ex : load_normalized(train_path, norm))
      lines.push_back(ex.target);
  } else {
    std::ifstream in(train_path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus: " + train_path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!is_valid_utf8(line)) throw DataError(train_path + ": invalid UTF-8");
      lines.push_back(normalize(decode_utf8(line), norm));
    }
  }

  LmPretrainConfig config;
  config.embed_dim = embed_dim;
  config.hidden = hidden;
  config.epochs = epochs;
  config.lr = lr;
  config.batch = batch;
  config.seed = seed;

  CharLm<float> lm;
  LmPretrainResult result = pretrain_lm(lm, lines, config, [](const LmEpochStats& s) {
    std::cerr << "epoch " << s.epoch << ": train_nll " << s.train_loss << ", heldout_ppl "
              << s.heldout_perplexity << "\n";
  });

  json pretrain_meta{{"heldout_perplexity", result.heldout_perplexity},
                     {"epochs", epochs},
                     {"lr", lr},
                     {"batch", batch},
                     {"seed", seed},
                     {"norm", norm_json(norm)},
                     {"corpus_lines", lines.size()}};
  save_lm_checkpoint(lm, lm_path, pretrain_meta.dump());
  write_run_manifest(lm_path + ".manifest.json",
                     json{{"command", "pretrain-lm"},
                          {"embed_dim", embed_dim},
                          {"hidden", hidden},
                          {"epochs", epochs},
                          {"lr", lr},
                          {"batch", batch},
                          {"norm", norm_json(norm)}},
                     {train_path}, {lm_path}, seed);
  json out{{"heldout_perplexity", result.heldout_perplexity}, {"lm", lm_path}};
  std::cout << out.dump() << "\n";
  return 0;
}

int run_train(const std::string& train_path, const std::string& dev_path,
              const std::string& vocab_path, const std::string& lm_path,
              const std::string& model_path, int hidden, int batch, double lr, int epochs,
              int patience, uint64_t seed, bool no_pretrained_lm, bool no_coarse_loss,
              bool freeze_lm, int embed_width, const std::string& decode_mode,
              std::string metrics_path) {
  check_grid(hidden, batch, lr);
  parse_decode_mode(decode_mode);
  TagVocabulary vocab = TagVocabulary::load(vocab_path);
  const NormalizeConfig norm = vocab.normalization();

  std::vector<ParallelExample> train_set = load_normalized(train_path, norm);
  std::vector<ParallelExample> dev_set = load_normalized(dev_path, norm);

  std::optional<CharLm<float>> lm;
  if (!no_pretrained_lm) {
    if (lm_path.empty()) throw UsageError("--lm is required unless --no-pretrained-lm is set");
    std::string lm_meta_json;
    lm = load_lm_checkpoint(lm_path, &lm_meta_json);
    const json lm_meta = json::parse(lm_meta_json);
    if (lm_meta.contains("pretrain") && lm_meta["pretrain"].contains("norm")) {
      const json& n = lm_meta["pretrain"]["norm"];
      if (n.value("lowercase", false) != norm.lowercase || n.value("nfc", false) != norm.nfc)
        throw DataError("LM and vocabulary were built with different normalization settings");
    }
  }

  TrainConfig config;
  config.h_tag = hidden;
  config.batch = batch;
  config.lr = lr;
  config.max_epochs = epochs;
  config.patience = patience;
  config.seed = seed;
  config.use_pretrained_lm = !no_pretrained_lm;
  config.finetune_lm = !freeze_lm;
  config.use_coarse_loss = !no_coarse_loss;
  config.embed_width = embed_width;
  config.decode_mode = decode_mode;

  if (metrics_path.empty()) metrics_path = model_path + ".metrics.jsonl";
  std::ofstream metrics(metrics_path, std::ios::binary);
  if (!metrics) throw DataError("cannot write metrics log: " + metrics_path);

  TrainResult result =
      train(config, train_set, dev_set, vocab, std::move(lm), [&](const EpochLog& log) {
        json j{{"epoch", log.epoch},
               {"train_loss", log.train_loss},
               {"dev_accuracy", log.dev_accuracy},
               {"seconds", log.seconds}};
        metrics << j.dump() << "\n";
        metrics.flush();
        std::cerr << "epoch " << log.epoch << ": loss " << log.train_loss << ", dev_em "
                  << log.dev_accuracy << "\n";
      });

  result.bundle.config.vocab_sha256 = sha256_file(vocab_path);
  result.bundle.save(model_path);
  write_run_manifest(model_path + ".manifest.json",
                     json{{"command", "train"},
                          {"hidden", hidden},
                          {"batch", batch},
                          {"lr", lr},
                          {"epochs", epochs},
                          {"patience", patience},
                          {"use_pretrained_lm", !no_pretrained_lm},
                          {"use_coarse_loss", !no_coarse_loss},
                          {"finetune_lm", !freeze_lm},
                          {"decode_mode", decode_mode},
                          {"norm", norm_json(norm)}},
                     lm_path.empty() ? std::vector<std::string>{train_path, dev_path, vocab_path}
                                     : std::vector<std::string>{train_path, dev_path, vocab_path,
                                                                lm_path},
                     {model_path, metrics_path}, seed);

  json out{{"best_dev_accuracy", result.best_dev_accuracy},
           {"best_epoch", result.best_epoch},
           {"epochs_run", result.log.size()},
           {"model", model_path},
           {"metrics", metrics_path}};
  std::cout << out.dump() << "\n";
  return 0;
}

ModelBundle load_bundle_checked(const std::string& model_path, const std::string& vocab_path,
                                const std::string& decode_mode) {
  ModelBundle bundle = ModelBundle::load(model_path);
  if (!vocab_path.empty()) {
    const std::string digest = sha256_file(vocab_path);
    if (!bundle.config.vocab_sha256.empty() && digest != bundle.config.vocab_sha256)
      throw DataError("vocabulary file does not match the one used at training time");
  }
  if (!decode_mode.empty()) {
    parse_decode_mode(decode_mode);
    bundle.config.decode_mode = decode_mode;
  }
  return bundle;
}

int run_correct(const std::string& model_path, const std::string& vocab_path, int iterations,
                const std::string& decode_mode) {
  ModelBundle bundle = load_bundle_checked(model_path, vocab_path, decode_mode);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!is_valid_utf8(line)) throw DataError("stdin: invalid UTF-8");
    std::cout << correct_utf8(bundle, line, iterations) << "\n";
  }
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& test_path,
                 const std::string& vocab_path, int iterations, const std::string& decode_mode) {
  ModelBundle bundle = load_bundle_checked(model_path, vocab_path, decode_mode);
  TsvLoadResult test = load_tsv(test_path);
  EvalResult result = evaluate(bundle, test.examples, iterations);

  json confusion = json::array();
  for (int g = 0; g < 4; ++g) {
    json row = json::array();
    for (int p = 0; p < 4; ++p) row.push_back(result.coarse_confusion[g][p]);
    confusion.push_back(row);
  }
  json out{{"exact_match_accuracy", result.exact_match_accuracy},
           {"tag_accuracy", result.tag_accuracy},
           {"examples", result.examples},
           {"positions", result.positions},
           {"coarse_confusion", confusion},
           {"iterations", iterations},
           {"inputs", json{{"model", file_digest(model_path)}, {"test", file_digest(test_path)}}}};
  std::cout << out.dump() << "\n";
  return 0;
}

int run_bench(const std::string& model_path, const std::string& test_path, const std::string& unit,
              int iterations) {
  if (unit != "words" && unit != "queries") throw UsageError("--unit must be words or queries");
  ModelBundle bundle = ModelBundle::load(model_path);
  TsvLoadResult test = load_tsv(test_path);
  BenchResult result = bench(bundle, test.examples,
                             unit == "words" ? BenchUnit::Words : BenchUnit::Queries, iterations);
  json out{{"unit", unit},
           {"rate_per_second", result.rate},
           {"runs_per_second", {result.runs[0], result.runs[1], result.runs[2]}},
           {"units_per_pass", result.units},
           {"seconds_median", result.seconds_median},
           {"inputs", json{{"model", file_digest(model_path)}, {"test", file_digest(test_path)}}}};
  std::cout << out.dump() << "\n";
  return 0;
}

int run_grad_check(uint64_t seed) {
  GradCheckReport lm = lm_grad_check(seed);
  GradCheckReport tagger = tagger_grad_check(seed);
  json out{{"lm", json{{"max_rel_error", lm.max_rel_error}, {"samples", lm.samples}}},
           {"tagger",
            json{{"max_rel_error", tagger.max_rel_error}, {"samples", tagger.samples}}},
           {"tolerance", lm.tolerance},
           {"passed", lm.passed() && tagger.passed()}};
  std::cout << out.dump() << "\n";
  std::cerr << "lm max rel err " << lm.max_rel_error << ", tagger max rel err "
            << tagger.max_rel_error << " (tolerance " << lm.tolerance << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hct: hierarchical character tagger for short-text spelling correction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for all subcommands");
  app.footer("HCT_DETERMINISTIC=1 forces deterministic mode (single-threaded math, zeroed "
             "wall-clock fields); outputs are then byte-identical for identical inputs and seeds.");

  // build-vocab
  auto* sc_vocab = app.add_subcommand("build-vocab", "Build the fine-tag vocabulary from a TSV");
  std::string bv_train, bv_vocab;
  int bv_min_freq = 1;
  bool bv_lower = false, bv_nfc = false, bv_stats = false;
  sc_vocab->add_option("--train", bv_train, "Training TSV (source<TAB>target)")->required();
  sc_vocab->add_option("--vocab", bv_vocab, "Output vocabulary file")->required();
  sc_vocab->add_option("--min-freq", bv_min_freq, "Minimum payload-tag frequency")
      ->check(CLI::PositiveNumber);
  sc_vocab->add_flag("--lowercase", bv_lower, "Lowercase both sides before alignment");
  sc_vocab->add_flag("--nfc", bv_nfc, "Apply Unicode NFC to both sides");
  sc_vocab->add_flag("--stats", bv_stats, "Emit the label histogram as TSV on stdout");

  // pretrain-lm
  auto* sc_lm = app.add_subcommand("pretrain-lm", "Pretrain the character language model");
  std::string lm_train, lm_out;
  bool lm_tsv_targets = false, lm_lower = false, lm_nfc = false;
  int lm_embed = 48, lm_hidden = 128, lm_epochs = 5, lm_batch = 32;
  double lm_lr = 1e-3;
  uint64_t lm_seed = 0;
  sc_lm->add_option("--train", lm_train, "Plain-text corpus (one text per line)")->required();
  sc_lm->add_option("--lm", lm_out, "Output LM checkpoint")->required();
  sc_lm->add_flag("--tsv-targets", lm_tsv_targets,
                  "Treat --train as a TSV and pretrain on the target column");
  sc_lm->add_option("--embed-dim", lm_embed, "Character embedding width");
  sc_lm->add_option("--hidden", lm_hidden, "LSTM hidden size per direction");
  sc_lm->add_option("--epochs", lm_epochs, "Training epochs");
  sc_lm->add_option("--lr", lm_lr, "Adam learning rate");
  sc_lm->add_option("--batch", lm_batch, "Batch size");
  sc_lm->add_option("--seed", lm_seed, "RNG seed");
  sc_lm->add_flag("--lowercase", lm_lower, "Lowercase the corpus");
  sc_lm->add_flag("--nfc", lm_nfc, "Apply Unicode NFC to the corpus");

  // train
  auto* sc_train = app.add_subcommand("train", "Train the tagger");
  std::string tr_train, tr_dev, tr_vocab, tr_lm, tr_model, tr_metrics;
  std::string tr_decode = "fine";
  int tr_hidden = 512, tr_batch = 32, tr_epochs = 30, tr_patience = 5, tr_embed_width = 256;
  double tr_lr = 1e-3;
  uint64_t tr_seed = 0;
  bool tr_no_lm = false, tr_no_coarse = false, tr_freeze = false;
  sc_train->add_option("--train", tr_train, "Training TSV")->required();
  sc_train->add_option("--dev", tr_dev, "Development TSV (early stopping)")->required();
  sc_train->add_option("--vocab", tr_vocab, "Vocabulary file from build-vocab")->required();
  sc_train->add_option("--lm", tr_lm, "Pretrained LM checkpoint");
  sc_train->add_option("--model", tr_model, "Output model checkpoint")->required();
  sc_train->add_option("--hidden", tr_hidden, "Tagger LSTM hidden size {512,1024}");
  sc_train->add_option("--batch", tr_batch, "Batch size {8,16,32}");
  sc_train->add_option("--lr", tr_lr, "Adam learning rate {1e-2,1e-3}");
  sc_train->add_option("--epochs", tr_epochs, "Maximum epochs");
  sc_train->add_option("--patience", tr_patience, "Early-stopping patience")
      ->check(CLI::PositiveNumber);
  sc_train->add_option("--seed", tr_seed, "RNG seed");
  sc_train->add_flag("--no-pretrained-lm", tr_no_lm,
                     "Replace the LM with a trainable embedding table");
  sc_train->add_flag("--no-coarse-loss", tr_no_coarse, "Train with the fine-grained loss only");
  sc_train->add_flag("--freeze-lm", tr_freeze, "Do not fine-tune the LM");
  sc_train->add_option("--embed-width", tr_embed_width,
                       "Embedding-table width for --no-pretrained-lm");
  sc_train->add_option("--decode-mode", tr_decode, "Decode mode: fine or hier");
  sc_train->add_option("--metrics", tr_metrics, "Metrics JSONL path (default <model>.metrics.jsonl)");

  // correct
  auto* sc_correct = app.add_subcommand("correct", "Correct stdin lines to stdout");
  std::string co_model, co_vocab, co_decode;
  int co_iter = 1;
  sc_correct->add_option("--model", co_model, "Model checkpoint")->required();
  sc_correct->add_option("--vocab", co_vocab, "Vocabulary file (hash-checked against the model)");
  sc_correct->add_option("--iterations", co_iter, "Maximum correction passes")
      ->check(CLI::PositiveNumber);
  sc_correct->add_option("--decode-mode", co_decode, "Override decode mode: fine or hier");

  // evaluate
  auto* sc_eval = app.add_subcommand("evaluate", "Evaluate on a test TSV");
  std::string ev_model, ev_test, ev_vocab, ev_decode;
  int ev_iter = 1;
  sc_eval->add_option("--model", ev_model, "Model checkpoint")->required();
  sc_eval->add_option("--test", ev_test, "Test TSV")->required();
  sc_eval->add_option("--vocab", ev_vocab, "Vocabulary file (hash-checked against the model)");
  sc_eval->add_option("--iterations", ev_iter, "Maximum correction passes")
      ->check(CLI::PositiveNumber);
  sc_eval->add_option("--decode-mode", ev_decode, "Override decode mode: fine or hier");

  // bench
  auto* sc_bench = app.add_subcommand("bench", "Measure single-stream correction throughput");
  std::string be_model, be_test, be_unit = "words";
  int be_iter = 1;
  sc_bench->add_option("--model", be_model, "Model checkpoint")->required();
  sc_bench->add_option("--test", be_test, "Test TSV")->required();
  sc_bench->add_option("--unit", be_unit, "Rate unit: words or queries");
  sc_bench->add_option("--iterations", be_iter, "Maximum correction passes")
      ->check(CLI::PositiveNumber);

  // grad-check
  auto* sc_grad = app.add_subcommand("grad-check", "Finite-difference gradient verification");
  uint64_t gc_seed = 0;
  sc_grad->add_option("--seed", gc_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    // Full flag listing for every subcommand.
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sc_vocab->parsed())
      return run_build_vocab(bv_train, bv_vocab, bv_min_freq, bv_lower, bv_nfc, bv_stats);
    if (sc_lm->parsed())
      return run_pretrain_lm(lm_train, lm_out, lm_tsv_targets, lm_embed, lm_hidden, lm_epochs,
                             lm_lr, lm_batch, lm_seed, lm_lower, lm_nfc);
    if (sc_train->parsed())
      return run_train(tr_train, tr_dev, tr_vocab, tr_lm, tr_model, tr_hidden, tr_batch, tr_lr,
                       tr_epochs, tr_patience, tr_seed, tr_no_lm, tr_no_coarse, tr_freeze,
                       tr_embed_width, tr_decode, tr_metrics);
    if (sc_correct->parsed()) return run_correct(co_model, co_vocab, co_iter, co_decode);
    if (sc_eval->parsed()) return run_evaluate(ev_model, ev_test, ev_vocab, ev_iter, ev_decode);
    if (sc_bench->parsed()) return run_bench(be_model, be_test, be_unit, be_iter);
    if (sc_grad->parsed()) return run_grad_check(gc_seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
