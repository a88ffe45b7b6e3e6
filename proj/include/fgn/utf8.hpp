#pragma once

#include <string>
#include <string_view>

namespace fgn {

// Decodes UTF-8 into codepoints; throws ArgumentError on invalid sequences.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);
std::string utf8_encode(char32_t ch);

}  // namespace fgn
