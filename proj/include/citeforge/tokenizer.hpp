#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace citeforge {

/// Splits text into word-level pieces. A piece preceded by whitespace
/// carries a leading U+2581 marker, so decode(pieces(x)) restores x up to
/// whitespace normalization. Meta-tokens ([MASK], [SEP], </s>) are always a
/// single piece without the marker.
std::vector<std::string> pieces(std::string_view text);

/// Inverse of pieces(); meta-tokens are re-spaced as " [SEP] ".
std::string join_pieces(std::span<const std::string> ps);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;

  /// Specials and meta-tokens first, then pieces with frequency >= min_count
  /// in descending frequency (ties by byte order).
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_count = 1);

  std::vector<int> encode(std::string_view text) const;
  /// Stops at </eos>; skips pad and bos.
  std::string decode(std::span<const int> ids) const;

  int id(std::string_view piece) const;
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return pieces_.size(); }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
  void append(std::string p);
};

}  // namespace citeforge
