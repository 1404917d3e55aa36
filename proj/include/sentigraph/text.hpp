#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers. All character offsets in this project count Unicode scalar
// values, not bytes; these are the only functions that look at raw bytes.

namespace sentigraph::text {

// True for the 25 code points with the Unicode White_Space property.
bool is_whitespace(char32_t cp);

// Byte offset of each code point boundary; result has cp_length(s)+1 entries,
// the last one being s.size(). Invalid bytes are treated as one code point each.
std::vector<std::size_t> codepoint_starts(std::string_view s);

std::size_t cp_length(std::string_view s);

// Substring [start, end) in code point offsets. Out-of-range offsets clamp.
std::string cp_slice(std::string_view s, std::size_t start, std::size_t end);

// Decodes one code point starting at byte i; advances i past it.
char32_t decode_at(std::string_view s, std::size_t& i);

// ASCII-only lowercase, used by lexicon case folding.
std::string fold_ascii(std::string_view s);

}  // namespace sentigraph::text
