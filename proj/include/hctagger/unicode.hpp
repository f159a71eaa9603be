#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hct {

// Text is processed as sequences of Unicode scalar values. All file and
// terminal I/O is UTF-8; these helpers convert between the two.
using Str = std::u32string;
using StrView = std::u32string_view;

struct Utf8Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Strict decoder: rejects overlong forms, surrogates and values > U+10FFFF.
Str decode_utf8(std::string_view bytes);

std::string encode_utf8(StrView text);
std::string encode_utf8(char32_t c);

bool is_valid_utf8(std::string_view bytes);

struct NormalizeConfig {
  bool lowercase = false;
  bool nfc = false;

  bool is_identity() const { return !lowercase && !nfc; }
};

// Default config is the identity transform. Lowercasing uses the Unicode
// simple case mapping; NFC is full canonical composition (via ICU).
Str normalize(StrView text, const NormalizeConfig& config);

}  // namespace hct
