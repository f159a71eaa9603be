#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hctagger/unicode.hpp"

namespace hct {

// Per-character edit operations. A tag sequence for a source of n characters
// has n+1 entries: index 0 is a virtual begin-of-sequence slot (it can only
// Keep or Append, and carries insertions before the first character), and
// index i >= 1 governs source character number i.
enum class TagKind : uint8_t { Keep = 0, Delete = 1, Append = 2, Replace = 3 };

struct EditTag {
  TagKind kind = TagKind::Keep;
  Str payload;  // non-empty exactly when kind is Append or Replace

  static EditTag keep() { return {TagKind::Keep, {}}; }
  static EditTag del() { return {TagKind::Delete, {}}; }
  static EditTag append(Str p) { return {TagKind::Append, std::move(p)}; }
  static EditTag replace(Str p) { return {TagKind::Replace, std::move(p)}; }

  bool operator==(const EditTag&) const = default;
};

using TagSequence = std::vector<EditTag>;

// Span-level diff instruction. Ranges are half-open; consecutive opcodes tile
// [0,|S|) and [0,|T|) exactly, in order.
enum class OpKind : uint8_t { Equal, Delete, Insert, Replace };

struct Opcode {
  OpKind kind;
  int src_lo, src_hi;
  int tgt_lo, tgt_hi;

  bool operator==(const Opcode&) const = default;
};

struct AlignmentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Match {
  int a = 0;
  int b = 0;
  int size = 0;
};

// Longest contiguous matching block between a[a_lo,a_hi) and b[b_lo,b_hi).
// Ties are broken by smallest start in a, then smallest start in b. No junk
// or popularity heuristics are applied; inputs here are short strings.
Match find_longest_match(StrView a, StrView b, int a_lo, int a_hi, int b_lo, int b_hi);
Match find_longest_match(StrView a, StrView b);

// Recursive longest-match decomposition of the two strings into a tiling of
// Equal / Delete / Insert / Replace spans. Deterministic.
std::vector<Opcode> compute_opcodes(StrView source, StrView target);

// Lower opcodes to per-character tags. Insert spans attach an Append to the
// slot before them (slot 0 for prefix insertions). A Replace span over s
// source and t target characters pairs positions left to right: with t >= s
// the last source character absorbs the remaining t-s+1 target characters, and
// with t < s the unpaired source characters become Delete. A single-character
// Replace whose payload equals its source character is emitted as Keep.
TagSequence opcodes_to_tags(StrView source, StrView target, const std::vector<Opcode>& opcodes);

// Applies a tag sequence of length |source|+1. Throws AlignmentError on a
// length mismatch or a Delete/Replace in the begin-of-sequence slot.
Str apply_tags(StrView source, const TagSequence& tags);

// extract_tags = opcodes_to_tags over compute_opcodes; the result always
// reconstructs target when applied to source.
TagSequence extract_tags(StrView source, StrView target);

// Debug/text helpers.
std::string to_string(TagKind kind);
std::string to_string(const EditTag& tag);
std::string to_string(const Opcode& op);

}  // namespace hct
