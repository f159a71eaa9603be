#include "hctagger/tag_vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace hct {

char coarse_letter(Coarse c) {
  static constexpr char letters[] = {'K', 'D', 'A', 'R'};
  return letters[static_cast<int>(c)];
}

std::string tag_repr(const EditTag& tag) {
  switch (tag.kind) {
    case TagKind::Keep: return "K";
    case TagKind::Delete: return "D";
    case TagKind::Append:
    case TagKind::Replace: {
      std::string out(1, tag.kind == TagKind::Append ? 'A' : 'R');
      out += ':';
      for (char32_t c : tag.payload) {
        switch (c) {
          case U'\\': out += "\\\\"; break;
          case U'\t': out += "\\t"; break;
          case U'\n': out += "\\n"; break;
          case U'\r': out += "\\r"; break;
          default:
            if (c < 0x20 || c == 0x7F) {
              char buf[16];
              std::snprintf(buf, sizeof buf, "\\u{%X}", static_cast<unsigned>(c));
              out += buf;
            } else {
              out += encode_utf8(c);
            }
        }
      }
      return out;
    }
  }
  return "?";
}

EditTag parse_tag_repr(const std::string& repr) {
  if (repr == "K") return EditTag::keep();
  if (repr == "D") return EditTag::del();
  if (repr.size() < 3 || (repr[0] != 'A' && repr[0] != 'R') || repr[1] != ':')
    throw VocabError("malformed tag representation: " + repr);
  Str decoded = decode_utf8(std::string_view(repr).substr(2));
  Str payload;
  for (size_t i = 0; i < decoded.size(); ++i) {
    if (decoded[i] != U'\\') {
      payload.push_back(decoded[i]);
      continue;
    }
    if (i + 1 >= decoded.size()) throw VocabError("dangling escape in tag: " + repr);
    char32_t e = decoded[++i];
    switch (e) {
      case U'\\': payload.push_back(U'\\'); break;
      case U't': payload.push_back(U'\t'); break;
      case U'n': payload.push_back(U'\n'); break;
      case U'r': payload.push_back(U'\r'); break;
      case U'u': {
        if (i + 1 >= decoded.size() || decoded[i + 1] != U'{')
          throw VocabError("malformed \\u escape in tag: " + repr);
        size_t close = decoded.find(U'}', i + 1);
        if (close == Str::npos) throw VocabError("unterminated \\u escape in tag: " + repr);
        uint32_t value = 0;
        for (size_t k = i + 2; k < close; ++k) {
          char32_t h = decoded[k];
          value <<= 4;
          if (h >= U'0' && h <= U'9') value |= h - U'0';
          else if (h >= U'a' && h <= U'f') value |= h - U'a' + 10;
          else if (h >= U'A' && h <= U'F') value |= h - U'A' + 10;
          else throw VocabError("bad hex digit in tag escape: " + repr);
        }
        payload.push_back(static_cast<char32_t>(value));
        i = close;
        break;
      }
      default: throw VocabError("unknown escape in tag: " + repr);
    }
  }
  if (payload.empty()) throw VocabError("empty payload in tag: " + repr);
  return repr[0] == 'A' ? EditTag::append(std::move(payload)) : EditTag::replace(std::move(payload));
}

TagVocabulary::TagVocabulary() {
  fine_tags_ = {EditTag::keep(), EditTag::del()};
  coarse_of_ = {Coarse::K, Coarse::D};
  counts_ = {0, 0};
  rebuild_index();
}

void TagVocabulary::rebuild_index() {
  index_.clear();
  for (int id = 0; id < size(); ++id) index_[tag_repr(fine_tags_[id])] = id;
}

int TagVocabulary::find(const EditTag& tag) const {
  auto it = index_.find(tag_repr(tag));
  return it == index_.end() ? -1 : it->second;
}

EncodedTag TagVocabulary::encode_tag(const EditTag& tag) const {
  int id = find(tag);
  return id >= 0 ? id : oov_marker(coarse_of_tag(tag));
}

std::vector<EncodedTag> TagVocabulary::encode(const TagSequence& tags) const {
  std::vector<EncodedTag> out;
  out.reserve(tags.size());
  for (const EditTag& t : tags) out.push_back(encode_tag(t));
  return out;
}

std::array<std::vector<uint8_t>, 4> TagVocabulary::subset_masks() const {
  std::array<std::vector<uint8_t>, 4> masks;
  for (auto& m : masks) m.assign(size(), 0);
  for (int id = 0; id < size(); ++id) masks[static_cast<int>(coarse_of_[id])][id] = 1;
  return masks;
}

std::array<std::vector<int>, 4> TagVocabulary::subset_ids() const {
  std::array<std::vector<int>, 4> ids;
  for (int id = 0; id < size(); ++id) ids[static_cast<int>(coarse_of_[id])].push_back(id);
  return ids;
}

TagVocabulary build_vocab(const std::function<bool(TagSequence&)>& next, int64_t min_freq,
                          const NormalizeConfig& norm) {
  if (min_freq < 1) throw VocabError("min_freq must be >= 1");

  // std::map keys are the serialized reprs, so iteration is already
  // deterministic; counts are accumulated in one pass.
  std::map<std::string, std::pair<EditTag, int64_t>> payload_counts;
  int64_t keep_count = 0, delete_count = 0;

  TagSequence seq;
  while (next(seq)) {
    for (const EditTag& tag : seq) {
      switch (tag.kind) {
        case TagKind::Keep: ++keep_count; break;
        case TagKind::Delete: ++delete_count; break;
        default: {
          auto [it, inserted] = payload_counts.try_emplace(tag_repr(tag), tag, 0);
          ++it->second.second;
        }
      }
    }
  }

  struct Entry {
    EditTag tag;
    int64_t count;
    std::string repr;
  };
  std::vector<Entry> retained;
  for (auto& [repr, tc] : payload_counts) {
    if (tc.second >= min_freq) retained.push_back({tc.first, tc.second, repr});
  }
  std::stable_sort(retained.begin(), retained.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.repr < b.repr;
  });

  TagVocabulary vocab;
  vocab.counts_[TagVocabulary::kKeepId] = keep_count;
  vocab.counts_[TagVocabulary::kDeleteId] = delete_count;
  vocab.min_freq_ = min_freq;
  vocab.norm_ = norm;
  for (Entry& e : retained) {
    vocab.coarse_of_.push_back(coarse_of_tag(e.tag));
    vocab.counts_.push_back(e.count);
    vocab.fine_tags_.push_back(std::move(e.tag));
  }
  vocab.rebuild_index();
  return vocab;
}

TagVocabulary build_vocab(const std::vector<TagSequence>& sequences, int64_t min_freq,
                          const NormalizeConfig& norm) {
  size_t i = 0;
  return build_vocab(
      [&](TagSequence& out) {
        if (i == sequences.size()) return false;
        out = sequences[i++];
        return true;
      },
      min_freq, norm);
}

std::string TagVocabulary::serialize() const {
  std::ostringstream out;
  out << "hct-vocab\t1\tmin_freq=" << min_freq_ << "\tlowercase=" << (norm_.lowercase ? 1 : 0)
      << "\tnfc=" << (norm_.nfc ? 1 : 0) << "\n";
  for (int id = 0; id < size(); ++id) {
    out << tag_repr(fine_tags_[id]) << '\t' << coarse_letter(coarse_of_[id]) << '\t' << counts_[id]
        << '\n';
  }
  return out.str();
}

TagVocabulary TagVocabulary::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw VocabError("empty vocabulary file");
  std::istringstream hs(header);
  std::string magic, version, field;
  std::getline(hs, magic, '\t');
  std::getline(hs, version, '\t');
  if (magic != "hct-vocab" || version != "1")
    throw VocabError("unrecognized vocabulary header: " + header);

  TagVocabulary vocab;
  while (std::getline(hs, field, '\t')) {
    auto eq = field.find('=');
    if (eq == std::string::npos) throw VocabError("malformed header field: " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "min_freq") vocab.min_freq_ = std::stoll(value);
    else if (key == "lowercase") vocab.norm_.lowercase = value == "1";
    else if (key == "nfc") vocab.norm_.nfc = value == "1";
    else throw VocabError("unknown header field: " + key);
  }

  vocab.fine_tags_.clear();
  vocab.coarse_of_.clear();
  vocab.counts_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string repr, coarse, count;
    if (!std::getline(ls, repr, '\t') || !std::getline(ls, coarse, '\t') ||
        !std::getline(ls, count, '\t'))
      throw VocabError("malformed vocabulary line: " + line);
    EditTag tag = parse_tag_repr(repr);
    if (coarse.size() != 1 || coarse[0] != coarse_letter(coarse_of_tag(tag)))
      throw VocabError("coarse letter does not match tag kind: " + line);
    vocab.fine_tags_.push_back(std::move(tag));
    vocab.coarse_of_.push_back(coarse_of_tag(vocab.fine_tags_.back()));
    vocab.counts_.push_back(std::stoll(count));
  }
  if (vocab.size() < 2 || vocab.fine_tags_[0] != EditTag::keep() ||
      vocab.fine_tags_[1] != EditTag::del())
    throw VocabError("vocabulary must start with the reserved Keep and Delete tags");
  vocab.rebuild_index();
  return vocab;
}

void TagVocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw VocabError("cannot open vocabulary file for writing: " + path);
  out << serialize();
  if (!out) throw VocabError("failed writing vocabulary file: " + path);
}

TagVocabulary TagVocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabError("cannot open vocabulary file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

bool TagVocabulary::operator==(const TagVocabulary& other) const {
  return fine_tags_ == other.fine_tags_ && counts_ == other.counts_ &&
         min_freq_ == other.min_freq_ && norm_.lowercase == other.norm_.lowercase &&
         norm_.nfc == other.norm_.nfc;
}

LabelHistogram label_histogram(const TagVocabulary& vocab) {
  LabelHistogram hist;
  hist.coarse_totals = {0, 0, 0, 0};
  for (int id = 0; id < vocab.size(); ++id) {
    hist.fine.push_back({vocab.tag(id), vocab.coarse_of(id), vocab.count(id)});
    hist.coarse_totals[static_cast<int>(vocab.coarse_of(id))] += vocab.count(id);
  }
  std::stable_sort(hist.fine.begin(), hist.fine.end(), [](const HistogramRow& a, const HistogramRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return tag_repr(a.tag) < tag_repr(b.tag);
  });
  return hist;
}

void write_histogram_tsv(std::ostream& out, const LabelHistogram& hist) {
  out << "tag\tcoarse\tcount\n";
  for (const HistogramRow& row : hist.fine)
    out << tag_repr(row.tag) << '\t' << coarse_letter(row.coarse) << '\t' << row.count << '\n';
  for (int c = 0; c < 4; ++c)
    out << "TOTAL_" << coarse_letter(static_cast<Coarse>(c)) << "\t"
        << coarse_letter(static_cast<Coarse>(c)) << '\t' << hist.coarse_totals[c] << '\n';
}

}  // namespace hct
