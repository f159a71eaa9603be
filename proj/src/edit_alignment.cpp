#include "hctagger/edit_alignment.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <unordered_map>

namespace hct {

Match find_longest_match(StrView a, StrView b, int a_lo, int a_hi, int b_lo, int b_hi) {
  if (a_lo < 0 || b_lo < 0 || a_hi > static_cast<int>(a.size()) ||
      b_hi > static_cast<int>(b.size()) || a_lo > a_hi || b_lo > b_hi) {
    throw AlignmentError("find_longest_match: range out of bounds");
  }

  // Positions of each character within the b range, ascending.
  std::unordered_map<char32_t, std::vector<int>> b2j;
  for (int j = b_lo; j < b_hi; ++j) b2j[b[j]].push_back(j);

  int besti = a_lo, bestj = b_lo, bestsize = 0;
  // j2len[j] = length of the longest match ending at a[i], b[j].
  std::unordered_map<int, int> j2len, newj2len;
  for (int i = a_lo; i < a_hi; ++i) {
    newj2len.clear();
    auto it = b2j.find(a[i]);
    if (it != b2j.end()) {
      for (int j : it->second) {
        auto prev = j2len.find(j - 1);
        int k = (prev == j2len.end() ? 0 : prev->second) + 1;
        newj2len[j] = k;
        if (k > bestsize) {
          besti = i - k + 1;
          bestj = j - k + 1;
          bestsize = k;
        }
      }
    }
    std::swap(j2len, newj2len);
  }
  return {besti, bestj, bestsize};
}

Match find_longest_match(StrView a, StrView b) {
  return find_longest_match(a, b, 0, static_cast<int>(a.size()), 0, static_cast<int>(b.size()));
}

std::vector<Opcode> compute_opcodes(StrView source, StrView target) {
  const int la = static_cast<int>(source.size());
  const int lb = static_cast<int>(target.size());

  struct Block {
    int a, b, size;
  };
  std::vector<Block> blocks;
  std::vector<std::array<int, 4>> queue{{0, la, 0, lb}};
  while (!queue.empty()) {
    auto [alo, ahi, blo, bhi] = queue.back();
    queue.pop_back();
    Match m = find_longest_match(source, target, alo, ahi, blo, bhi);
    if (m.size > 0) {
      blocks.push_back({m.a, m.b, m.size});
      if (alo < m.a && blo < m.b) queue.push_back({alo, m.a, blo, m.b});
      if (m.a + m.size < ahi && m.b + m.size < bhi)
        queue.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
    }
  }
  std::sort(blocks.begin(), blocks.end(),
            [](const Block& x, const Block& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });

  // Merge blocks that are adjacent in both strings, then add the terminator.
  std::vector<Block> merged;
  for (const Block& blk : blocks) {
    if (!merged.empty() && merged.back().a + merged.back().size == blk.a &&
        merged.back().b + merged.back().size == blk.b) {
      merged.back().size += blk.size;
    } else {
      merged.push_back(blk);
    }
  }
  merged.push_back({la, lb, 0});

  std::vector<Opcode> ops;
  int i = 0, j = 0;
  for (const Block& blk : merged) {
    if (i < blk.a && j < blk.b) {
      ops.push_back({OpKind::Replace, i, blk.a, j, blk.b});
    } else if (i < blk.a) {
      ops.push_back({OpKind::Delete, i, blk.a, j, j});
    } else if (j < blk.b) {
      ops.push_back({OpKind::Insert, i, i, j, blk.b});
    }
    if (blk.size > 0) {
      ops.push_back({OpKind::Equal, blk.a, blk.a + blk.size, blk.b, blk.b + blk.size});
    }
    i = blk.a + blk.size;
    j = blk.b + blk.size;
  }
  return ops;
}

namespace {

void check_tiling(StrView source, StrView target, const std::vector<Opcode>& opcodes) {
  int i = 0, j = 0;
  for (const Opcode& op : opcodes) {
    if (op.src_lo != i || op.tgt_lo != j)
      throw AlignmentError("opcodes do not tile the inputs contiguously");
    if (op.src_hi < op.src_lo || op.tgt_hi < op.tgt_lo)
      throw AlignmentError("opcode with negative span");
    const int slen = op.src_hi - op.src_lo;
    const int tlen = op.tgt_hi - op.tgt_lo;
    switch (op.kind) {
      case OpKind::Equal:
        if (slen != tlen || slen == 0) throw AlignmentError("Equal opcode with mismatched span");
        break;
      case OpKind::Delete:
        if (slen == 0 || tlen != 0) throw AlignmentError("Delete opcode with bad span");
        break;
      case OpKind::Insert:
        if (slen != 0 || tlen == 0) throw AlignmentError("Insert opcode with bad span");
        break;
      case OpKind::Replace:
        if (slen == 0 || tlen == 0) throw AlignmentError("Replace opcode with empty span");
        break;
    }
    i = op.src_hi;
    j = op.tgt_hi;
  }
  if (i != static_cast<int>(source.size()) || j != static_cast<int>(target.size()))
    throw AlignmentError("opcodes do not cover the full inputs");
}

// Folds an inserted payload into whatever tag the slot already carries, so
// that arbitrary valid tilings (not only matcher output) stay expressible.
void attach_insertion(EditTag& slot, StrView payload) {
  switch (slot.kind) {
    case TagKind::Keep:
      slot = EditTag::append(Str(payload));
      break;
    case TagKind::Delete:
      slot = EditTag::replace(Str(payload));
      break;
    case TagKind::Append:
    case TagKind::Replace:
      slot.payload += payload;
      break;
  }
}

}  // namespace

TagSequence opcodes_to_tags(StrView source, StrView target, const std::vector<Opcode>& opcodes) {
  check_tiling(source, target, opcodes);
  TagSequence tags(source.size() + 1, EditTag::keep());

  for (const Opcode& op : opcodes) {
    switch (op.kind) {
      case OpKind::Equal:
        break;  // slots already Keep
      case OpKind::Delete:
        for (int p = op.src_lo; p < op.src_hi; ++p) tags[p + 1] = EditTag::del();
        break;
      case OpKind::Insert:
        attach_insertion(tags[op.src_lo], target.substr(op.tgt_lo, op.tgt_hi - op.tgt_lo));
        break;
      case OpKind::Replace: {
        const int slen = op.src_hi - op.src_lo;
        const int tlen = op.tgt_hi - op.tgt_lo;
        const int paired = std::min(slen, tlen);
        for (int q = 0; q < paired; ++q) {
          const bool last_pair = (q == paired - 1);
          Str payload;
          if (last_pair && tlen >= slen) {
            payload = Str(target.substr(op.tgt_lo + q, tlen - q));
          } else {
            payload = Str(1, target[op.tgt_lo + q]);
          }
          EditTag& slot = tags[op.src_lo + q + 1];
          if (payload.size() == 1 && payload[0] == source[op.src_lo + q]) {
            slot = EditTag::keep();
          } else {
            slot = EditTag::replace(std::move(payload));
          }
        }
        for (int q = paired; q < slen; ++q) tags[op.src_lo + q + 1] = EditTag::del();
        break;
      }
    }
  }
  return tags;
}

Str apply_tags(StrView source, const TagSequence& tags) {
  if (tags.size() != source.size() + 1)
    throw AlignmentError("apply_tags: tag sequence length must be source length + 1");
  if (tags[0].kind == TagKind::Delete || tags[0].kind == TagKind::Replace)
    throw AlignmentError("apply_tags: begin-of-sequence slot admits only Keep or Append");

  Str out;
  out.reserve(source.size() + 4);
  if (tags[0].kind == TagKind::Append) out += tags[0].payload;
  for (size_t i = 0; i < source.size(); ++i) {
    const EditTag& tag = tags[i + 1];
    switch (tag.kind) {
      case TagKind::Keep:
        out.push_back(source[i]);
        break;
      case TagKind::Delete:
        break;
      case TagKind::Replace:
        out += tag.payload;
        break;
      case TagKind::Append:
        out.push_back(source[i]);
        out += tag.payload;
        break;
    }
  }
  return out;
}

TagSequence extract_tags(StrView source, StrView target) {
  return opcodes_to_tags(source, target, compute_opcodes(source, target));
}

std::string to_string(TagKind kind) {
  switch (kind) {
    case TagKind::Keep: return "K";
    case TagKind::Delete: return "D";
    case TagKind::Append: return "A";
    case TagKind::Replace: return "R";
  }
  return "?";
}

std::string to_string(const EditTag& tag) {
  std::string s = to_string(tag.kind);
  if (tag.kind == TagKind::Append || tag.kind == TagKind::Replace)
    s += ":" + encode_utf8(tag.payload);
  return s;
}

std::string to_string(const Opcode& op) {
  static const char* names[] = {"equal", "delete", "insert", "replace"};
  return std::string(names[static_cast<int>(op.kind)]) + " " + std::to_string(op.src_lo) + ".." +
         std::to_string(op.src_hi) + "/" + std::to_string(op.tgt_lo) + ".." +
         std::to_string(op.tgt_hi);
}

}  // namespace hct
