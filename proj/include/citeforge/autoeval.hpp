#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace citeforge::autoeval {

/// ROUGE tokenizer: ASCII-lowercased, split on anything that is not an ASCII
/// letter or digit. Bytes of multi-byte UTF-8 sequences count as word
/// characters, so non-Latin words survive as tokens. No stemming.
std::vector<std::string> tokenize(std::string_view text);

enum class RougeVariant { kR1 = 0, kR2 = 1, kRL = 2 };
inline constexpr std::array kAllVariants = {RougeVariant::kR1, RougeVariant::kR2, RougeVariant::kRL};

std::string_view to_string(RougeVariant v);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // The reference has no units of this variant (no tokens, or no bigrams for
  // R2), so recall is undefined; all three values are reported as 0.
  bool undefined = false;
};

RougeScore rouge(std::string_view candidate, std::string_view reference, RougeVariant variant);
RougeScore rouge_tokens(std::span<const std::string> candidate, std::span<const std::string> reference,
                        RougeVariant variant);

/// p = overlap / candidate_units, r = overlap / reference_units, f1 = harmonic mean.
RougeScore score_from_counts(std::size_t overlap, std::size_t candidate_units, std::size_t reference_units);

struct PairScores {
  std::string example_id;
  std::array<RougeScore, 3> scores;  // indexed by RougeVariant
};

struct CorpusRouge {
  std::array<double, 3> mean_f1{};
  std::array<double, 3> mean_precision{};
  std::array<double, 3> mean_recall{};
  std::vector<PairScores> pairs;
};

struct Candidate {
  std::string example_id;
  std::string text;
};

/// Mean per-pair scores. Throws ArgumentError on an empty set or when the ids
/// of `candidates` and `references` differ (message lists the offenders).
CorpusRouge rouge_corpus(const std::vector<Candidate>& candidates,
                         const std::map<std::string, std::string>& references);

inline const std::vector<std::string>& default_lexicon() {
  static const std::vector<std::string> lex{"extend", "improve", "propose", "introduce", "build", "follow"};
  return lex;
}

/// Token matches lemma exactly or as lemma+s / lemma+ed / lemma+ing, with a
/// final 'e' dropped before "ed"/"ing" (propose -> proposed, proposing).
bool matches_lemma(std::string_view token, std::string_view lemma);

struct SystemVerbCounts {
  std::size_t citations = 0;
  std::size_t with_any = 0;  // citations containing at least one lexicon verb
  double rate = 0.0;         // with_any / citations
  std::map<std::string, std::size_t> per_lemma;  // citations containing that lemma
  std::map<std::string, double> per_lemma_rate;
};

struct VerbReport {
  std::vector<std::string> lexicon;
  std::map<std::string, SystemVerbCounts> systems;
};

VerbReport verb_frequency(const std::map<std::string, std::vector<std::string>>& citations_by_system,
                          const std::vector<std::string>& lexicon = default_lexicon());

nlohmann::ordered_json to_json(const RougeScore& s);
nlohmann::ordered_json to_json(const CorpusRouge& r);
nlohmann::ordered_json to_json(const VerbReport& r);

}  // namespace citeforge::autoeval
