#include "sentigraph/text.hpp"

#include <algorithm>

namespace sentigraph::text {

bool is_whitespace(char32_t cp) {
  switch (cp) {
    case 0x0009: case 0x000A: case 0x000B: case 0x000C: case 0x000D:
    case 0x0020: case 0x0085: case 0x00A0: case 0x1680:
    case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
    case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
    case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
    case 0x3000:
      return true;
    default:
      return false;
  }
}

char32_t decode_at(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto tail = [&](std::size_t k) {
    return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F);
  };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | tail(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x0F) << 12) |
                  (tail(1) << 6) | tail(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x07) << 18) |
                  (tail(1) << 12) | (tail(2) << 6) | tail(3);
    i += 4;
    return cp;
  }
  // Stray byte: count it as a single code point so offsets stay monotone.
  ++i;
  return b0;
}

std::vector<std::size_t> codepoint_starts(std::string_view s) {
  std::vector<std::size_t> starts;
  starts.reserve(s.size() + 1);
  std::size_t i = 0;
  while (i < s.size()) {
    starts.push_back(i);
    decode_at(s, i);
  }
  starts.push_back(s.size());
  return starts;
}

std::size_t cp_length(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    decode_at(s, i);
    ++n;
  }
  return n;
}

std::string cp_slice(std::string_view s, std::size_t start, std::size_t end) {
  const auto starts = codepoint_starts(s);
  const std::size_t n = starts.size() - 1;
  start = std::min(start, n);
  end = std::min(std::max(end, start), n);
  return std::string(s.substr(starts[start], starts[end] - starts[start]));
}

std::string fold_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace sentigraph::text
