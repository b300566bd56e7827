#include "qurious/text.hpp"

#include <cstddef>

namespace qurious::text {
namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point at `pos` and advances it. Returns kInvalid on a
// malformed sequence (pos still advances by one byte).
char32_t decode(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return kInvalid;
  return cp;
}

bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
  }
  switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) ||
         (c >= 0xFF01 && c <= 0xFF0F);
}

struct Piece {
  std::size_t begin;
  std::size_t end;
};

// Byte ranges of whitespace-separated pieces.
std::vector<Piece> split_pieces(std::string_view s) {
  std::vector<Piece> out;
  std::size_t pos = 0;
  std::size_t start = 0;
  bool in_piece = false;
  while (pos < s.size()) {
    const std::size_t at = pos;
    const char32_t c = decode(s, pos);
    if (c != kInvalid && is_space(c)) {
      if (in_piece) out.push_back({start, at});
      in_piece = false;
    } else if (!in_piece) {
      start = at;
      in_piece = true;
    }
  }
  if (in_piece) out.push_back({start, s.size()});
  return out;
}

}  // namespace

bool valid_utf8(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (decode(s, pos) == kInvalid) return false;
  }
  return true;
}

std::string casefold(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const Piece& p : split_pieces(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(s.substr(p.begin, p.end - p.begin));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  for (const Piece& p : split_pieces(s)) {
    const std::string_view piece = s.substr(p.begin, p.end - p.begin);
    // Walk code points, remembering the byte span between the first and last
    // non-punctuation code point.
    std::size_t pos = 0;
    std::size_t first = std::string_view::npos;
    std::size_t last_end = 0;
    while (pos < piece.size()) {
      const std::size_t at = pos;
      const char32_t c = decode(piece, pos);
      if (c == kInvalid || !is_punct(c)) {
        if (first == std::string_view::npos) first = at;
        last_end = pos;
      }
    }
    if (first == std::string_view::npos) continue;
    tokens.push_back(casefold(piece.substr(first, last_end - first)));
  }
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qurious::text
