#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 and character-class support for European scripts. Covers
// Latin (Basic, Latin-1, Extended-A/B, Extended Additional), Greek and
// Cyrillic case mapping; other scripts are classified but not case-mapped.
namespace clcts::unicode {

using CodePoint = char32_t;

/// Decodes one code point starting at byte `pos`; sets `length` to the
/// number of bytes consumed. Invalid bytes decode to U+FFFD, one per byte.
CodePoint decode_at(std::string_view text, std::size_t pos, std::size_t& length);

/// Decodes UTF-8 with the same error handling as decode_at.
std::vector<CodePoint> decode(std::string_view text);

struct DecodedChar {
  CodePoint cp;
  std::size_t offset;  // byte offset of the first byte
  std::size_t length;  // bytes
};
std::vector<DecodedChar> decode_with_offsets(std::string_view text);
std::string encode(CodePoint cp);
std::string encode(const std::vector<CodePoint>& cps);

bool is_letter(CodePoint cp);
bool is_digit(CodePoint cp);
bool is_space(CodePoint cp);
bool is_combining_mark(CodePoint cp);
bool is_apostrophe(CodePoint cp);
bool is_upper(CodePoint cp);

/// Letters, digits and combining marks.
inline bool is_word_char(CodePoint cp) {
  return is_letter(cp) || is_digit(cp) || is_combining_mark(cp);
}

CodePoint to_lower(CodePoint cp);
CodePoint to_upper(CodePoint cp);

std::string to_lower(std::string_view text);

/// Replaces precomposed Latin letters with their base letters (ü -> u,
/// Å -> A, æ -> ae, ſ -> s) and drops combining marks. ß is kept.
std::string strip_diacritics(std::string_view text);

/// Upper-cases the first code point of `text`.
std::string capitalize_first(std::string_view text);

}  // namespace clcts::unicode
