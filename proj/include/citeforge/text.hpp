#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace citeforge::text {

// Meta-tokens shared by the data builder and the generation harness.
inline constexpr std::string_view kMask = "[MASK]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kFieldSep = "</s>";

/// Number of Unicode code points in a UTF-8 string. Invalid lead bytes count
/// as one code point each so offsets stay total.
std::size_t cp_length(std::string_view s);

/// Byte offset of code point `cp` (clamped to the end of the string).
std::size_t cp_to_byte(std::string_view s, std::size_t cp);

/// Code-point slice [begin, end).
std::string cp_slice(std::string_view s, std::size_t begin, std::size_t end);

/// First `n` code points.
std::string cp_head(std::string_view s, std::size_t n);

/// Collapses runs of spaces and tabs (and CR) into one space and trims both
/// ends. Newlines are kept when `keep_newlines`, otherwise folded into spaces.
std::string normalize_whitespace(std::string_view s, bool keep_newlines = false);

std::string_view trim(std::string_view s);

/// Joins the non-empty parts with single spaces.
std::string join_nonempty(const std::vector<std::string>& parts);

/// Counts non-overlapping occurrences of `needle`.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// True if `s` contains any reserved meta-token.
bool contains_meta_token(std::string_view s);

}  // namespace citeforge::text
