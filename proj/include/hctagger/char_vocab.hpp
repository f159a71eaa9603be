#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hctagger/unicode.hpp"

namespace hct {

// Closed character vocabulary with reserved symbols. Characters unseen at
// build time map to UNK at lookup, so inference never fails on novel input.
class CharVocab {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr int kReserved = 3;

  CharVocab() = default;

  static CharVocab build(const std::vector<Str>& corpus);

  int size() const { return kReserved + static_cast<int>(chars_.size()); }

  int id_of(char32_t c) const {
    auto it = index_.find(c);
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<int> encode(StrView text) const {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (char32_t c : text) ids.push_back(id_of(c));
    return ids;
  }

  // Distinct real characters (excludes the reserved symbols).
  int distinct_chars() const { return static_cast<int>(chars_.size()); }

  // Serialization as the sorted scalar-value string.
  std::string to_utf8() const;
  static CharVocab from_utf8(const std::string& utf8);

  bool operator==(const CharVocab& other) const { return chars_ == other.chars_; }

 private:
  std::vector<char32_t> chars_;  // sorted ascending, ids kReserved + index
  std::unordered_map<char32_t, int> index_;

  void rebuild_index();
};

}  // namespace hct
