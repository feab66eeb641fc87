#include "citeforge/text.hpp"

namespace citeforge::text {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::size_t cp_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::size_t cp_to_byte(std::string_view s, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(s[i]))) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return s.size();
}

std::string cp_slice(std::string_view s, std::size_t begin, std::size_t end) {
  if (end <= begin) return {};
  const std::size_t b = cp_to_byte(s, begin);
  const std::size_t e = cp_to_byte(s, end);
  return std::string(s.substr(b, e - b));
}

std::string cp_head(std::string_view s, std::size_t n) {
  return std::string(s.substr(0, cp_to_byte(s, n)));
}

std::string normalize_whitespace(std::string_view s, bool keep_newlines) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    const bool newline = c == '\n';
    const bool blank = c == ' ' || c == '\t' || c == '\r' || c == '\f' ||
                       c == '\v' || (newline && !keep_newlines);
    if (blank) {
      pending_space = true;
      continue;
    }
    if (newline) {
      // Spaces adjacent to a newline are dropped.
      while (!out.empty() && out.back() == ' ') out.pop_back();
      if (!out.empty()) out.push_back('\n');
      pending_space = false;
      continue;
    }
    if (pending_space && !out.empty() && out.back() != '\n') out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == '\n')) out.pop_back();
  return out;
}

std::string_view trim(std::string_view s) {
  const auto blank = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!s.empty() && blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && blank(s.back())) s.remove_suffix(1);
  return s;
}

std::string join_nonempty(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += p;
  }
  return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

bool contains_meta_token(std::string_view s) {
  return s.find(kMask) != std::string_view::npos || s.find(kSep) != std::string_view::npos ||
         s.find(kFieldSep) != std::string_view::npos;
}

}  // namespace citeforge::text
