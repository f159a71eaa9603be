#include "hctagger/char_vocab.hpp"

#include <algorithm>
#include <set>

namespace hct {

CharVocab CharVocab::build(const std::vector<Str>& corpus) {
  std::set<char32_t> seen;
  for (const Str& line : corpus) seen.insert(line.begin(), line.end());
  CharVocab vocab;
  vocab.chars_.assign(seen.begin(), seen.end());
  vocab.rebuild_index();
  return vocab;
}

void CharVocab::rebuild_index() {
  index_.clear();
  for (size_t i = 0; i < chars_.size(); ++i)
    index_[chars_[i]] = kReserved + static_cast<int>(i);
}

std::string CharVocab::to_utf8() const { return encode_utf8(Str(chars_.begin(), chars_.end())); }

CharVocab CharVocab::from_utf8(const std::string& utf8) {
  Str decoded = decode_utf8(utf8);
  CharVocab vocab;
  vocab.chars_.assign(decoded.begin(), decoded.end());
  if (!std::is_sorted(vocab.chars_.begin(), vocab.chars_.end()))
    throw Utf8Error("character vocabulary is not sorted");
  vocab.rebuild_index();
  return vocab;
}

}  // namespace hct
