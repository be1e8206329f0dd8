#include "nmtk/utf8.hpp"

namespace nmtk::utf8 {
namespace {

bool is_cont(unsigned char c) { return (c & 0xC0) == 0x80; }

std::size_t expected_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 0;
}

}  // namespace

std::size_t char_len(std::string_view s, std::size_t pos) {
  const std::size_t n = expected_len(static_cast<unsigned char>(s[pos]));
  if (n == 0 || pos + n > s.size()) return 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (!is_cont(static_cast<unsigned char>(s[pos + i]))) return 1;
  }
  return n;
}

std::vector<std::string> split_chars(std::string_view s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    const std::size_t n = char_len(s, pos);
    out.emplace_back(s.substr(pos, n));
    pos += n;
  }
  return out;
}

bool is_valid(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    const auto lead = static_cast<unsigned char>(s[pos]);
    const std::size_t n = expected_len(lead);
    if (n == 0 || pos + n > s.size()) return false;
    for (std::size_t i = 1; i < n; ++i) {
      if (!is_cont(static_cast<unsigned char>(s[pos + i]))) return false;
    }
    pos += n;
  }
  return true;
}

}  // namespace nmtk::utf8
