#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "hctagger/edit_alignment.hpp"

namespace hct {

// Coarse label categories. Indices are fixed: K=0, D=1, A=2, R=3.
enum class Coarse : uint8_t { K = 0, D = 1, A = 2, R = 3 };

inline Coarse coarse_of_tag(const EditTag& tag) {
  switch (tag.kind) {
    case TagKind::Keep: return Coarse::K;
    case TagKind::Delete: return Coarse::D;
    case TagKind::Append: return Coarse::A;
    case TagKind::Replace: return Coarse::R;
  }
  return Coarse::K;
}

char coarse_letter(Coarse c);

struct VocabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Encoded gold labels: non-negative values are fine-tag ids; out-of-vocabulary
// tags are folded to a negative marker that still carries their coarse class.
using EncodedTag = int32_t;
constexpr EncodedTag oov_marker(Coarse c) { return -1 - static_cast<EncodedTag>(c); }
constexpr bool is_oov(EncodedTag e) { return e < 0; }
constexpr Coarse oov_coarse(EncodedTag e) { return static_cast<Coarse>(-e - 1); }

// Fine-grained tag vocabulary. Keep and Delete always occupy ids 0 and 1;
// payload tags follow ordered by descending training count, ties broken by
// their serialized representation.
class TagVocabulary {
 public:
  static constexpr int kKeepId = 0;
  static constexpr int kDeleteId = 1;

  TagVocabulary();

  int size() const { return static_cast<int>(fine_tags_.size()); }
  const EditTag& tag(int id) const { return fine_tags_.at(id); }
  Coarse coarse_of(int id) const { return coarse_of_.at(id); }
  int64_t count(int id) const { return counts_.at(id); }
  int64_t min_freq() const { return min_freq_; }
  const NormalizeConfig& normalization() const { return norm_; }

  // -1 when absent.
  int find(const EditTag& tag) const;

  EncodedTag encode_tag(const EditTag& tag) const;
  std::vector<EncodedTag> encode(const TagSequence& tags) const;

  // Boolean masks over fine ids, one per coarse class; always a partition.
  std::array<std::vector<uint8_t>, 4> subset_masks() const;

  // Per-class fine-id lists (same partition, more convenient for the model).
  std::array<std::vector<int>, 4> subset_ids() const;

  std::string serialize() const;
  static TagVocabulary deserialize(const std::string& text);
  void save(const std::string& path) const;
  static TagVocabulary load(const std::string& path);

  bool operator==(const TagVocabulary& other) const;

  friend TagVocabulary build_vocab(const std::function<bool(TagSequence&)>& next, int64_t min_freq,
                                   const NormalizeConfig& norm);

 private:
  std::vector<EditTag> fine_tags_;
  std::vector<Coarse> coarse_of_;
  std::vector<int64_t> counts_;
  int64_t min_freq_ = 1;
  NormalizeConfig norm_;
  std::unordered_map<std::string, int> index_;  // serialized tag -> id

  void rebuild_index();
};

// Single pass over a stream of tag sequences. `next` fills its argument and
// returns false when the stream is exhausted. Payload tags below min_freq are
// dropped; Keep and Delete are always retained (possibly with zero count).
TagVocabulary build_vocab(const std::function<bool(TagSequence&)>& next, int64_t min_freq,
                          const NormalizeConfig& norm = {});
TagVocabulary build_vocab(const std::vector<TagSequence>& sequences, int64_t min_freq,
                          const NormalizeConfig& norm = {});

// Serialized single-tag representation used in vocabulary files and histogram
// output, e.g. "K", "D", "A: " (escaped), "R:o".
std::string tag_repr(const EditTag& tag);
EditTag parse_tag_repr(const std::string& repr);

struct HistogramRow {
  EditTag tag;
  Coarse coarse;
  int64_t count;
};

struct LabelHistogram {
  std::vector<HistogramRow> fine;        // sorted by count desc, then repr
  std::array<int64_t, 4> coarse_totals;  // exact sums of the fine rows
};

LabelHistogram label_histogram(const TagVocabulary& vocab);

// TSV rendering of the histogram (fine rows then the 4 aggregated rows).
void write_histogram_tsv(std::ostream& out, const LabelHistogram& hist);

}  // namespace hct
