#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nmtk::utf8 {

/// Length of the code point starting at `s[pos]`. Malformed sequences are
/// consumed one byte at a time.
std::size_t char_len(std::string_view s, std::size_t pos);

/// Splits into code points (each as its UTF-8 byte string).
std::vector<std::string> split_chars(std::string_view s);

bool is_valid(std::string_view s);

}  // namespace nmtk::utf8
