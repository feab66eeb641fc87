#include "citeforge/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "citeforge/errors.hpp"
#include "citeforge/text.hpp"

namespace citeforge {

namespace {

constexpr std::string_view kSpace = "\xE2\x96\x81";  // U+2581
constexpr std::array<std::string_view, 3> kMeta = {text::kMask, text::kSep, text::kFieldSep};
constexpr std::array<std::string_view, 4> kSpecials = {"<pad>", "<unk>", "<bos>", "<eos>"};

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool is_meta(std::string_view p) {
  return std::find(kMeta.begin(), kMeta.end(), p) != kMeta.end();
}

}  // namespace

std::vector<std::string> pieces(std::string_view s) {
  std::vector<std::string> out;
  bool space = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      space = true;
      ++i;
      continue;
    }
    std::string_view meta;
    for (auto m : kMeta) {
      if (s.substr(i, m.size()) == m) {
        meta = m;
        break;
      }
    }
    std::string piece;
    if (!meta.empty()) {
      out.emplace_back(meta);
      i += meta.size();
      space = false;
      continue;
    }
    if (space && !out.empty()) piece = kSpace;
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
      piece.append(s.substr(i, j - i));
      i = j;
    } else {
      piece.push_back(s[i++]);
    }
    out.push_back(std::move(piece));
    space = false;
  }
  return out;
}

std::string join_pieces(std::span<const std::string> ps) {
  std::string out;
  bool after_meta = false;
  for (const auto& p : ps) {
    const bool meta = is_meta(p);
    const bool marked = p.starts_with(kSpace);
    if (!out.empty() && (meta || marked || after_meta)) out.push_back(' ');
    if (marked) {
      out.append(p, kSpace.size());
    } else {
      out += p;
    }
    after_meta = meta;
  }
  return out;
}

void Vocabulary::append(std::string p) {
  index_.emplace(p, static_cast<int>(pieces_.size()));
  pieces_.push_back(std::move(p));
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_count) {
  std::map<std::string, std::size_t> freq;
  for (const auto& t : texts) {
    for (auto& p : pieces(t)) ++freq[std::move(p)];
  }
  Vocabulary v;
  for (auto s : kSpecials) v.append(std::string(s));
  for (auto m : kMeta) v.append(std::string(m));
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [p, n] : freq) {
    if (n >= min_count && !is_meta(p)) ranked.emplace_back(p, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [p, n] : ranked) v.append(std::move(p));
  return v;
}

int Vocabulary::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view t) const {
  std::vector<int> ids;
  for (const auto& p : pieces(t)) ids.push_back(id(p));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> ps;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kBos) continue;
    ps.push_back(piece(i));
  }
  return join_pieces(ps);
}

nlohmann::json Vocabulary::to_json() const { return {{"pieces", pieces_}}; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  const auto ps = j.at("pieces").get<std::vector<std::string>>();
  if (ps.size() < kSpecials.size() + kMeta.size()) throw IoError("vocabulary is missing reserved pieces");
  for (std::size_t i = 0; i < kSpecials.size(); ++i) {
    if (ps[i] != kSpecials[i]) throw IoError("vocabulary reserved pieces out of order");
  }
  for (const auto& p : ps) v.append(p);
  return v;
}

}  // namespace citeforge
