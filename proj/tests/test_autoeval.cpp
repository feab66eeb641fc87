#include <cmath>
#include <random>

#include "citeforge/autoeval.hpp"
#include "citeforge/errors.hpp"
#include "doctest.h"
#include "support/citation_examples.hpp"
#include "support/oracles.hpp"

using namespace citeforge;
using autoeval::RougeVariant;

namespace {

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab) {
  std::vector<std::string> out(rng() % (max_len + 1));
  for (auto& t : out) t = "w" + std::to_string(rng() % vocab);
  return out;
}

std::string join(const std::vector<std::string>& toks) {
  std::string s;
  for (const auto& t : toks) s += (s.empty() ? "" : " ") + t;
  return s;
}

void check_against(const autoeval::RougeScore& got, const oracle::Prf& want) {
  CHECK(got.undefined == want.undefined);
  CHECK(std::abs(got.precision - want.p) <= 1e-12);
  CHECK(std::abs(got.recall - want.r) <= 1e-12);
  CHECK(std::abs(got.f1 - want.f) <= 1e-12);
}

}  // namespace

TEST_SUITE("autoeval") {
  TEST_CASE("tokenizer") {
    CHECK(autoeval::tokenize("Smith (2020) built-a PARSER.") ==
          std::vector<std::string>{"smith", "2020", "built", "a", "parser"});
    CHECK(autoeval::tokenize("  ").empty());
    CHECK(autoeval::tokenize("naïve café") == std::vector<std::string>{"naïve", "café"});
  }

  TEST_CASE("unigram overlap of two short sentences") {
    const auto s = autoeval::rouge("the cat sat", "the cat ran", RougeVariant::kR1);
    CHECK(s.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }

  TEST_CASE("identity scores one") {
    for (const auto& ex : fixtures::citation_examples()) {
      for (auto v : autoeval::kAllVariants) {
        const auto s = autoeval::rouge(ex.citation, ex.citation, v);
        CHECK(s.f1 == 1.0);
        CHECK(s.precision == 1.0);
        CHECK(s.recall == 1.0);
      }
    }
  }

  TEST_CASE("undefined recall is flagged and zero") {
    const auto s = autoeval::rouge("a b", "single", RougeVariant::kR2);
    CHECK(s.undefined);
    CHECK(s.f1 == 0.0);
    CHECK(autoeval::rouge("x", "", RougeVariant::kR1).undefined);
    const auto empty_cand = autoeval::rouge("", "x y", RougeVariant::kRL);
    CHECK_FALSE(empty_cand.undefined);
    CHECK(empty_cand.f1 == 0.0);
  }

  TEST_CASE("corpus mean") {
    const auto r = autoeval::rouge_corpus({{"a", "the cat sat"}, {"b", "dogs bark"}},
                                          {{"a", "the cat ran"}, {"b", "cats purr"}});
    CHECK(r.mean_f1[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    REQUIRE(r.pairs.size() == 2);
  }

  TEST_CASE("corpus errors") {
    CHECK_THROWS_AS(autoeval::rouge_corpus({}, {}), ArgumentError);
    try {
      autoeval::rouge_corpus({{"a", "x"}, {"stray", "y"}}, {{"a", "x"}, {"lost", "z"}});
      FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("stray") != std::string::npos);
      CHECK(msg.find("lost") != std::string::npos);
    }
  }

  TEST_CASE("matches the brute-force reference") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
      const auto c = random_tokens(rng, 15, 6);
      const auto r = random_tokens(rng, 15, 6);
      check_against(autoeval::rouge(join(c), join(r), RougeVariant::kR1), oracle::rouge_n(c, r, 1));
      check_against(autoeval::rouge(join(c), join(r), RougeVariant::kR2), oracle::rouge_n(c, r, 2));
      check_against(autoeval::rouge(join(c), join(r), RougeVariant::kRL), oracle::rouge_l(c, r));
    }
  }

  TEST_CASE("LCS table agrees with subsequence enumeration") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
      const auto a = random_tokens(rng, 11, 4);
      const auto b = random_tokens(rng, 11, 4);
      REQUIRE(oracle::lcs_table(a, b) == oracle::lcs_exhaustive(a, b));
      const auto s = autoeval::rouge_tokens(a, b, RougeVariant::kRL);
      if (!a.empty() && !b.empty()) {
        CHECK(s.recall * static_cast<double>(b.size()) ==
              doctest::Approx(static_cast<double>(oracle::lcs_exhaustive(a, b))));
      }
    }
  }

  TEST_CASE("F1 is symmetric and precision/recall swap") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 200; ++i) {
      const auto a = random_tokens(rng, 12, 5);
      const auto b = random_tokens(rng, 12, 5);
      if (a.size() < 2 || b.size() < 2) continue;
      for (auto v : autoeval::kAllVariants) {
        const auto ab = autoeval::rouge_tokens(a, b, v);
        const auto ba = autoeval::rouge_tokens(b, a, v);
        CHECK(ab.f1 == doctest::Approx(ba.f1).epsilon(1e-12));
        CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("appending reference tokens never lowers recall") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 200; ++i) {
      auto cand = random_tokens(rng, 10, 5);
      const auto ref = random_tokens(rng, 10, 5);
      if (ref.empty()) continue;
      for (auto v : autoeval::kAllVariants) {
        const auto before = autoeval::rouge_tokens(cand, ref, v);
        auto grown = cand;
        grown.push_back(ref[rng() % ref.size()]);
        const auto after = autoeval::rouge_tokens(grown, ref, v);
        CHECK(after.recall >= before.recall - 1e-15);
      }
    }
  }

  TEST_CASE("lemma matching") {
    CHECK(autoeval::matches_lemma("extended", "extend"));
    CHECK(autoeval::matches_lemma("proposed", "propose"));
    CHECK(autoeval::matches_lemma("proposing", "propose"));
    CHECK(autoeval::matches_lemma("builds", "build"));
    CHECK_FALSE(autoeval::matches_lemma("extension", "extend"));
    CHECK_FALSE(autoeval::matches_lemma("rebuild", "build"));
  }

  TEST_CASE("verb counts per system") {
    const auto& rei = fixtures::citation_examples()[4];
    const auto r = autoeval::verb_frequency({{"contextualized", {rei.contextualized}}, {"baseline", {rei.baseline}}});
    CHECK(r.systems.at("contextualized").per_lemma.at("extend") == 1);
    CHECK(r.systems.at("contextualized").rate == 1.0);
    CHECK(r.systems.at("baseline").per_lemma.at("propose") == 1);
    CHECK(r.systems.at("baseline").per_lemma.at("extend") == 0);
  }

  TEST_CASE("planted verb rate") {
    std::vector<std::string> cites;
    for (int i = 0; i < 10; ++i) {
      cites.push_back(i < 4 ? "Author (2019) improved the tagger " + std::to_string(i) + "."
                            : "Author (2019) studied the tagger " + std::to_string(i) + ".");
    }
    const auto r = autoeval::verb_frequency({{"sys", cites}, {"none", {}}});
    const auto& s = r.systems.at("sys");
    CHECK(s.citations == 10);
    CHECK(s.with_any == 4);
    CHECK(s.rate == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(s.per_lemma_rate.at("improve") == doctest::Approx(0.4).epsilon(1e-12));
    const auto& n = r.systems.at("none");
    CHECK(n.citations == 0);
    CHECK(n.rate == 0.0);
  }

  TEST_CASE("report json shape") {
    const auto r = autoeval::rouge_corpus({{"a", "x y"}}, {{"a", "x y"}});
    const auto j = autoeval::to_json(r);
    CHECK(j.contains("aggregate"));
    CHECK(j.contains("per_example"));
  }
}
