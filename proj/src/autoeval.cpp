#include "citeforge/autoeval.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "citeforge/errors.hpp"

namespace citeforge::autoeval {

namespace {

bool word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

struct VectorHash {
  std::size_t operator()(const std::vector<std::string_view>& v) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto s : v) h = (h ^ std::hash<std::string_view>{}(s)) * 1099511628211ull;
    return h;
  }
};

using NgramCounts = std::unordered_map<std::vector<std::string_view>, std::size_t, VectorHash>;

NgramCounts ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> key(tokens.begin() + i, tokens.begin() + i + n);
    ++out[std::move(key)];
  }
  return out;
}

// Two-row dynamic program.
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string_view to_string(RougeVariant v) {
  switch (v) {
    case RougeVariant::kR1: return "rouge1";
    case RougeVariant::kR2: return "rouge2";
    case RougeVariant::kRL: return "rougeL";
  }
  return "rouge1";
}

RougeScore score_from_counts(std::size_t overlap, std::size_t candidate_units, std::size_t reference_units) {
  RougeScore s;
  if (reference_units == 0) {
    s.undefined = true;
    return s;
  }
  s.recall = static_cast<double>(overlap) / static_cast<double>(reference_units);
  s.precision = candidate_units == 0 ? 0.0
                                     : static_cast<double>(overlap) / static_cast<double>(candidate_units);
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

RougeScore rouge_tokens(std::span<const std::string> candidate, std::span<const std::string> reference,
                        RougeVariant variant) {
  if (variant == RougeVariant::kRL) {
    return score_from_counts(lcs_length(candidate, reference), candidate.size(), reference.size());
  }
  const std::size_t n = variant == RougeVariant::kR1 ? 1 : 2;
  const auto cand = ngrams(candidate, n);
  const auto ref = ngrams(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  }
  const std::size_t cand_units = candidate.size() >= n ? candidate.size() - n + 1 : 0;
  const std::size_t ref_units = reference.size() >= n ? reference.size() - n + 1 : 0;
  return score_from_counts(overlap, cand_units, ref_units);
}

RougeScore rouge(std::string_view candidate, std::string_view reference, RougeVariant variant) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  return rouge_tokens(c, r, variant);
}

CorpusRouge rouge_corpus(const std::vector<Candidate>& candidates,
                         const std::map<std::string, std::string>& references) {
  if (candidates.empty() && references.empty()) {
    throw ArgumentError("ROUGE over an empty set is undefined");
  }
  std::set<std::string> seen;
  std::vector<std::string> problems;
  for (const auto& c : candidates) {
    if (!seen.insert(c.example_id).second) problems.push_back("duplicate output " + c.example_id);
    if (!references.contains(c.example_id)) problems.push_back("no reference for " + c.example_id);
  }
  for (const auto& [id, _] : references) {
    if (!seen.contains(id)) problems.push_back("no output for " + id);
  }
  if (!problems.empty()) {
    std::string msg = "output/reference ids are not aligned:";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw ArgumentError(msg);
  }

  CorpusRouge out;
  out.pairs.reserve(candidates.size());
  for (const auto& c : candidates) {
    PairScores ps;
    ps.example_id = c.example_id;
    const auto ct = tokenize(c.text);
    const auto rt = tokenize(references.at(c.example_id));
    for (auto v : kAllVariants) {
      const auto s = rouge_tokens(ct, rt, v);
      const auto i = static_cast<std::size_t>(v);
      ps.scores[i] = s;
      out.mean_f1[i] += s.f1;
      out.mean_precision[i] += s.precision;
      out.mean_recall[i] += s.recall;
    }
    out.pairs.push_back(std::move(ps));
  }
  const double n = static_cast<double>(candidates.size());
  for (std::size_t i = 0; i < 3; ++i) {
    out.mean_f1[i] /= n;
    out.mean_precision[i] /= n;
    out.mean_recall[i] /= n;
  }
  return out;
}

bool matches_lemma(std::string_view token, std::string_view lemma) {
  if (lemma.empty()) return false;
  if (token == lemma) return true;
  if (!token.starts_with(lemma.substr(0, lemma.size() - 1))) return false;
  const std::string l(lemma);
  if (token == l + "s") return true;
  if (lemma.back() == 'e') {
    const std::string stem = l.substr(0, l.size() - 1);
    return token == stem + "ed" || token == stem + "ing";
  }
  return token == l + "ed" || token == l + "ing";
}

VerbReport verb_frequency(const std::map<std::string, std::vector<std::string>>& citations_by_system,
                          const std::vector<std::string>& lexicon) {
  VerbReport report;
  report.lexicon = lexicon;
  for (const auto& [system, citations] : citations_by_system) {
    SystemVerbCounts counts;
    counts.citations = citations.size();
    for (const auto& lemma : lexicon) counts.per_lemma[lemma] = 0;
    for (const auto& c : citations) {
      const auto tokens = tokenize(c);
      bool any = false;
      for (const auto& lemma : lexicon) {
        const bool hit = std::any_of(tokens.begin(), tokens.end(),
                                     [&](const std::string& t) { return matches_lemma(t, lemma); });
        if (hit) ++counts.per_lemma[lemma];
        any = any || hit;
      }
      if (any) ++counts.with_any;
    }
    const double n = static_cast<double>(counts.citations);
    counts.rate = counts.citations == 0 ? 0.0 : static_cast<double>(counts.with_any) / n;
    for (const auto& [lemma, k] : counts.per_lemma) {
      counts.per_lemma_rate[lemma] = counts.citations == 0 ? 0.0 : static_cast<double>(k) / n;
    }
    report.systems.emplace(system, std::move(counts));
  }
  return report;
}

nlohmann::ordered_json to_json(const RougeScore& s) {
  nlohmann::ordered_json j{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  if (s.undefined) j["undefined"] = true;
  return j;
}

nlohmann::ordered_json to_json(const CorpusRouge& r) {
  nlohmann::ordered_json agg;
  for (auto v : kAllVariants) {
    const auto i = static_cast<std::size_t>(v);
    agg[std::string(to_string(v))] = {{"precision", r.mean_precision[i]},
                                      {"recall", r.mean_recall[i]},
                                      {"f1", r.mean_f1[i]}};
  }
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs) {
    nlohmann::ordered_json pj{{"example_id", p.example_id}};
    for (auto v : kAllVariants) pj[std::string(to_string(v))] = to_json(p.scores[static_cast<std::size_t>(v)]);
    pairs.push_back(std::move(pj));
  }
  return {{"aggregate", std::move(agg)}, {"per_example", std::move(pairs)}};
}

nlohmann::ordered_json to_json(const VerbReport& r) {
  nlohmann::ordered_json systems = nlohmann::ordered_json::object();
  for (const auto& [name, c] : r.systems) {
    systems[name] = {{"citations", c.citations},
                     {"with_lexicon_verb", c.with_any},
                     {"rate", c.rate},
                     {"per_lemma", c.per_lemma},
                     {"per_lemma_rate", c.per_lemma_rate}};
  }
  return {{"lexicon", r.lexicon}, {"systems", std::move(systems)}};
}

}  // namespace citeforge::autoeval
