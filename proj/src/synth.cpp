#include "hctagger/synth.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>

#include "hctagger/rng.hpp"

namespace hct {

namespace {

// Query vocabulary: common English nouns, verbs and modifiers in the style of
// short search queries.
const char* const kLexicon[] = {
    "weather", "today", "news", "music", "video", "movie", "free", "online", "best", "cheap",
    "store", "near", "open", "hours", "phone", "number", "review", "price", "sale", "shoes",
    "dress", "casual", "fashion", "industry", "jacket", "shirt", "jeans", "leather", "cotton",
    "black", "white", "blue", "green", "small", "large", "size", "women", "men", "kids", "baby",
    "doll", "power", "point", "house", "home", "garden", "kitchen", "table", "chair", "light",
    "water", "coffee", "recipe", "chicken", "pasta", "salad", "pizza", "restaurant", "food",
    "hotel", "flight", "ticket", "travel", "beach", "island", "mountain", "river", "park",
    "school", "college", "student", "teacher", "lesson", "book", "story", "paper", "letter",
    "word", "game", "play", "score", "team", "league", "soccer", "tennis", "runner", "track",
    "health", "doctor", "dental", "clinic", "insurance", "credit", "card", "bank", "money",
    "market", "stock", "trade", "company", "service", "repair", "engine", "wheel", "tire",
    "battery", "charger", "laptop", "screen", "camera", "printer", "wireless", "network",
    "internet", "search", "email", "account", "password", "login", "update", "download",
    "install", "driver", "windows", "android", "mobile", "tablet", "watch", "silver", "golden",
    "diamond", "wedding", "birthday", "party", "gift", "flower", "summer", "winter", "spring",
    "autumn", "season", "holiday", "monday", "friday", "sunday", "morning", "evening", "night",
    "early", "late", "quick", "simple", "basic", "guide", "manual", "every", "little", "great",
    "happy", "lucky", "funny", "movie", "series", "actor", "singer", "artist", "paint", "brush",
    "color", "design", "style", "model", "photo", "image", "print", "frame", "glass", "metal",
    "plastic", "wooden", "stone", "brick", "floor", "window", "door", "roof", "wall", "paintings",
    "history", "science", "nature", "animal", "horse", "tiger", "eagle", "salmon", "garden",
    "plant", "grass", "forest", "field", "farm", "fruit", "apple", "orange", "banana", "grape",
    "lemon", "sugar", "honey", "bread", "butter", "cheese", "cream", "juice", "drink", "bottle",
};
constexpr int kLexiconSize = static_cast<int>(std::size(kLexicon));

// Fat-finger substitutions applied during corruption. The correction tag ends
// up carrying the original character, so the set of corruptible characters
// bounds the Replace label space.
struct KeyNeighbor {
  char c;
  const char* neighbors;
};
const KeyNeighbor kNeighbors[] = {
    {'b', "vn"}, {'c', "xv"}, {'d', "sf"}, {'f', "dg"}, {'g', "fh"},
    {'h', "gj"}, {'k', "jl"}, {'l', "k"},  {'m', "n"},  {'n', "bm"},
    {'p', "o"},  {'r', "et"}, {'s', "ad"}, {'t', "ry"}, {'w', "qe"},
};

constexpr const char* kVowels = "aeiou";

// Characters the typo model may drop; bounds the Append label space.
constexpr const char* kDroppable = "aeiourstnl";

bool is_vowel(char32_t c) {
  for (const char* v = kVowels; *v; ++v)
    if (static_cast<char32_t>(*v) == c) return true;
  return false;
}

struct TypoModel {
  Rng* rng;

  bool vowel_swap(Str& s) {
    std::vector<int> spots;
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
      if (is_vowel(s[i])) spots.push_back(i);
    if (spots.empty()) return false;
    const int pos = spots[rng->index(spots.size())];
    char32_t repl;
    do {
      repl = static_cast<char32_t>(kVowels[rng->index(5)]);
    } while (repl == s[pos]);
    s[pos] = repl;
    return true;
  }

  bool key_substitution(Str& s) {
    std::vector<std::pair<int, const KeyNeighbor*>> spots;
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
      for (const KeyNeighbor& kn : kNeighbors)
        if (static_cast<char32_t>(kn.c) == s[i]) spots.push_back({i, &kn});
    if (spots.empty()) return false;
    const auto [pos, kn] = spots[rng->index(spots.size())];
    const int n = static_cast<int>(std::char_traits<char>::length(kn->neighbors));
    s[pos] = static_cast<char32_t>(kn->neighbors[rng->index(n)]);
    return true;
  }

  bool drop_char(Str& s) {
    std::vector<int> spots;
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
      for (const char* d = kDroppable; *d; ++d)
        if (static_cast<char32_t>(*d) == s[i]) {
          spots.push_back(i);
          break;
        }
    }
    if (spots.empty() || s.size() < 3) return false;
    s.erase(s.begin() + spots[rng->index(spots.size())]);
    return true;
  }

  bool double_char(Str& s) {
    std::vector<int> spots;
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
      if (s[i] != U' ') spots.push_back(i);
    if (spots.empty()) return false;
    const int pos = spots[rng->index(spots.size())];
    s.insert(s.begin() + pos, s[pos]);
    return true;
  }

  bool drop_space(Str& s) {
    std::vector<int> spots;
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
      if (s[i] == U' ') spots.push_back(i);
    if (spots.empty()) return false;
    s.erase(s.begin() + spots[rng->index(spots.size())]);
    return true;
  }

  bool transpose(Str& s) {
    std::vector<int> spots;
    for (int i = 0; i + 1 < static_cast<int>(s.size()); ++i)
      if (s[i] != s[i + 1] && s[i] != U' ' && s[i + 1] != U' ') spots.push_back(i);
    if (spots.empty()) return false;
    const int pos = spots[rng->index(spots.size())];
    std::swap(s[pos], s[pos + 1]);
    return true;
  }

  bool y_to_ie(Str& s) {
    std::vector<int> spots;
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
      const bool word_end = i + 1 == static_cast<int>(s.size()) || s[i + 1] == U' ';
      if (s[i] == U'y' && word_end) spots.push_back(i);
    }
    if (spots.empty()) return false;
    const int pos = spots[rng->index(spots.size())];
    s.replace(pos, 1, U"ie");
    return true;
  }

  // One corruption, drawn from a fixed categorical distribution; falls back
  // across op kinds when the drawn one has no applicable site.
  bool apply_one(Str& s) {
    static constexpr double kWeights[] = {0.26, 0.22, 0.16, 0.14, 0.10, 0.06, 0.06};
    double u = rng->uniform();
    int op = 0;
    for (double w : kWeights) {
      if (u < w) break;
      u -= w;
      ++op;
    }
    for (int attempt = 0; attempt < 7; ++attempt) {
      switch ((op + attempt) % 7) {
        case 0:
          if (vowel_swap(s)) return true;
          break;
        case 1:
          if (key_substitution(s)) return true;
          break;
        case 2:
          if (drop_char(s)) return true;
          break;
        case 3:
          if (double_char(s)) return true;
          break;
        case 4:
          if (drop_space(s)) return true;
          break;
        case 5:
          if (transpose(s)) return true;
          break;
        case 6:
          if (y_to_ie(s)) return true;
          break;
      }
    }
    return false;
  }
};

}  // namespace

std::vector<ParallelExample> generate_synthetic_corpus(const SynthConfig& config) {
  Rng rng(config.seed);
  Rng word_rng = rng.fork(1);
  Rng noise_rng = rng.fork(2);
  Rng assign_rng = rng.fork(3);

  // Zipf-flavored word weights over a seed-shuffled lexicon ordering.
  std::vector<int> lex_order(kLexiconSize);
  std::iota(lex_order.begin(), lex_order.end(), 0);
  word_rng.shuffle(lex_order);
  std::vector<double> cumulative(kLexiconSize);
  double total = 0.0;
  for (int i = 0; i < kLexiconSize; ++i) {
    total += 1.0 / static_cast<double>(i + 3);
    cumulative[i] = total;
  }

  auto draw_word = [&]() -> Str {
    const double u = word_rng.uniform() * total;
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const int rank = static_cast<int>(it - cumulative.begin());
    return decode_utf8(kLexicon[lex_order[std::min(rank, kLexiconSize - 1)]]);
  };

  // Which examples carry errors: exact count, seeded placement.
  const auto n = static_cast<size_t>(config.n_examples);
  std::vector<uint8_t> noisy(n, 0);
  auto n_noisy = static_cast<size_t>(
      std::llround(config.error_rate * static_cast<double>(config.n_examples)));
  n_noisy = std::min(n_noisy, n);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  assign_rng.shuffle(order);
  for (size_t i = 0; i < n_noisy; ++i) noisy[order[i]] = 1;

  TypoModel typos{&noise_rng};
  std::vector<ParallelExample> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const int words =
        config.min_words + static_cast<int>(word_rng.below(
                               static_cast<uint64_t>(config.max_words - config.min_words + 1)));
    Str clean;
    for (int w = 0; w < words; ++w) {
      if (w > 0) clean.push_back(U' ');
      clean += draw_word();
    }

    Str source = clean;
    if (noisy[i]) {
      int edits = 1;
      const double u = noise_rng.uniform();
      if (u < 0.05) edits = 3;
      else if (u < 0.30) edits = 2;
      for (int e = 0; e < edits; ++e) typos.apply_one(source);
      if (source == clean) {
        // Guaranteed change: doubling a character always applies.
        typos.double_char(source);
      }
    }
    out.push_back({std::move(source), std::move(clean)});
  }
  return out;
}

}  // namespace hct
