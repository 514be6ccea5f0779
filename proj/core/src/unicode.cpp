#include "clcts/unicode.hpp"

#include <array>

namespace clcts::unicode {
namespace {

constexpr CodePoint kReplacement = 0xFFFD;

// Base letters for U+00C0..U+00FF; nullptr keeps the code point.
constexpr std::array<const char*, 64> kLatin1Base = {
    "A", "A", "A", "A", "A", "A", "AE", "C", "E", "E", "E", "E", "I", "I", "I", "I",
    "D", "N", "O", "O", "O", "O", "O", nullptr, "O", "U", "U", "U", "U", "Y", nullptr, nullptr,
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
    "d", "n", "o", "o", "o", "o", "o", nullptr, "o", "u", "u", "u", "u", "y", nullptr, "y"};

// Base letters for U+0100..U+017F.
constexpr std::array<const char*, 128> kExtendedABase = {
    "A", "a", "A", "a", "A", "a", "C", "c", "C", "c", "C", "c", "C", "c", "D", "d",
    "D", "d", "E", "e", "E", "e", "E", "e", "E", "e", "E", "e", "G", "g", "G", "g",
    "G", "g", "G", "g", "H", "h", "H", "h", "I", "i", "I", "i", "I", "i", "I", "i",
    "I", "i", "IJ", "ij", "J", "j", "K", "k", "k", "L", "l", "L", "l", "L", "l", "L",
    "l", "L", "l", "N", "n", "N", "n", "N", "n", "n", "N", "n", "O", "o", "O", "o",
    "O", "o", "OE", "oe", "R", "r", "R", "r", "R", "r", "S", "s", "S", "s", "S", "s",
    "S", "s", "T", "t", "T", "t", "T", "t", "U", "u", "U", "u", "U", "u", "U", "u",
    "U", "u", "U", "u", "W", "w", "Y", "y", "Y", "Z", "z", "Z", "z", "Z", "z", "s"};

bool in(CodePoint cp, CodePoint lo, CodePoint hi) { return cp >= lo && cp <= hi; }

}  // namespace

CodePoint decode_at(std::string_view text, std::size_t pos, std::size_t& length) {
  const std::size_t n = text.size();
  const auto b0 = static_cast<unsigned char>(text[pos]);
  length = 1;
  std::size_t len = 0;
  CodePoint cp = 0;
  if (b0 < 0x80) return b0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return kReplacement;
  }
  if (pos + len > n) return kReplacement;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[pos + k]);
    if ((b & 0xC0) != 0x80) return kReplacement;
    cp = (cp << 6) | (b & 0x3F);
  }
  const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                        (len == 4 && cp < 0x10000);
  if (overlong || cp > 0x10FFFF || in(cp, 0xD800, 0xDFFF)) return kReplacement;
  length = len;
  return cp;
}

std::vector<CodePoint> decode(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  for (std::size_t i = 0, len = 0; i < text.size(); i += len) out.push_back(decode_at(text, i, len));
  return out;
}

std::vector<DecodedChar> decode_with_offsets(std::string_view text) {
  std::vector<DecodedChar> out;
  out.reserve(text.size());
  for (std::size_t i = 0, len = 0; i < text.size(); i += len) {
    const CodePoint cp = decode_at(text, i, len);
    out.push_back({cp, i, len});
  }
  return out;
}

std::string encode(CodePoint cp) {
  std::string s;
  if (cp < 0x80) {
    s.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    s.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return s;
}

std::string encode(const std::vector<CodePoint>& cps) {
  std::string s;
  s.reserve(cps.size());
  for (CodePoint cp : cps) s += encode(cp);
  return s;
}

bool is_digit(CodePoint cp) { return in(cp, U'0', U'9'); }

bool is_space(CodePoint cp) {
  return cp == U' ' || in(cp, 0x09, 0x0D) || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         in(cp, 0x2000, 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000 || cp == 0xFEFF;
}

bool is_combining_mark(CodePoint cp) {
  return in(cp, 0x0300, 0x036F) || in(cp, 0x1AB0, 0x1AFF) || in(cp, 0x1DC0, 0x1DFF) ||
         in(cp, 0x20D0, 0x20FF) || in(cp, 0xFE20, 0xFE2F);
}

bool is_apostrophe(CodePoint cp) { return cp == U'\'' || cp == 0x2019; }

bool is_letter(CodePoint cp) {
  if (cp < 0x80) return in(cp, U'a', U'z') || in(cp, U'A', U'Z');
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp < 0x0300) return true;
  if (is_combining_mark(cp) || is_space(cp) || cp == kReplacement) return false;
  if (in(cp, 0x0370, 0x03FF)) return cp != 0x037E && cp != 0x0387;  // Greek punctuation
  if (in(cp, 0x0400, 0x052F)) return !in(cp, 0x0482, 0x0489);
  // General punctuation, symbols, arrows, math, box drawing, dingbats...
  if (in(cp, 0x2000, 0x2BFF)) return false;
  if (in(cp, 0x2E00, 0x2E7F) || in(cp, 0x3000, 0x303F)) return false;
  if (in(cp, 0xFE10, 0xFE1F) || in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFE50, 0xFE6F)) return false;
  if (in(cp, 0xFF00, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) ||
      in(cp, 0xFF5B, 0xFF65))
    return false;
  if (in(cp, 0xE000, 0xF8FF)) return false;  // private use
  if (in(cp, 0x1F000, 0x1FAFF)) return false;  // emoji and pictographs
  return true;
}

CodePoint to_lower(CodePoint cp) {
  if (in(cp, U'A', U'Z')) return cp + 0x20;
  if (cp < 0xC0) return cp;
  if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (in(cp, 0x0100, 0x0137) || in(cp, 0x014A, 0x0177)) return (cp % 2 == 0) ? cp + 1 : cp;
  if (in(cp, 0x0139, 0x0148) || in(cp, 0x0179, 0x017E)) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp == 0x0178) return 0xFF;
  if (in(cp, 0x0391, 0x03A9) && cp != 0x03A2) return cp + 0x20;
  if (in(cp, 0x0410, 0x042F)) return cp + 0x20;
  if (in(cp, 0x0400, 0x040F)) return cp + 0x50;
  if (cp == 0x1E9E) return 0xDF;
  if (in(cp, 0x1E00, 0x1E95) || in(cp, 0x1EA0, 0x1EFF)) return (cp % 2 == 0) ? cp + 1 : cp;
  return cp;
}

CodePoint to_upper(CodePoint cp) {
  if (in(cp, U'a', U'z')) return cp - 0x20;
  if (cp < 0xDF) return cp;
  if (in(cp, 0xE0, 0xFE) && cp != 0xF7) return cp - 0x20;
  if (cp == 0xFF) return 0x0178;
  if (in(cp, 0x0100, 0x0137) || in(cp, 0x014A, 0x0177)) return (cp % 2 == 1) ? cp - 1 : cp;
  if (in(cp, 0x0139, 0x0148) || in(cp, 0x0179, 0x017E)) return (cp % 2 == 0) ? cp - 1 : cp;
  if (in(cp, 0x03B1, 0x03C9) && cp != 0x03C2) return cp - 0x20;
  if (in(cp, 0x0430, 0x044F)) return cp - 0x20;
  if (in(cp, 0x0450, 0x045F)) return cp - 0x50;
  if (in(cp, 0x1E00, 0x1E95) || in(cp, 0x1EA0, 0x1EFF)) return (cp % 2 == 1) ? cp - 1 : cp;
  return cp;
}

bool is_upper(CodePoint cp) { return is_letter(cp) && to_lower(cp) != cp; }

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (CodePoint cp : decode(text)) out += encode(to_lower(cp));
  return out;
}

std::string strip_diacritics(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (CodePoint cp : decode(text)) {
    if (is_combining_mark(cp)) continue;
    const char* base = nullptr;
    if (in(cp, 0xC0, 0xFF)) base = kLatin1Base[cp - 0xC0];
    else if (in(cp, 0x0100, 0x017F)) base = kExtendedABase[cp - 0x0100];
    if (base != nullptr) out += base;
    else out += encode(cp);
  }
  return out;
}

std::string capitalize_first(std::string_view text) {
  auto cps = decode(text);
  if (cps.empty()) return std::string(text);
  cps.front() = to_upper(cps.front());
  return encode(cps);
}

}  // namespace clcts::unicode
