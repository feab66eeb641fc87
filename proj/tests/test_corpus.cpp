#include <fstream>
#include <random>
#include <sstream>

#include "citeforge/corpus.hpp"
#include "citeforge/synthetic.hpp"
#include "citeforge/text.hpp"
#include "doctest.h"
#include "support/citation_examples.hpp"
#include "support/tempdir.hpp"

using namespace citeforge;
using corpus::Partition;
using nlohmann::json;

namespace {

std::string dump(const corpus::Corpus& c) {
  std::ostringstream ss;
  corpus::write_corpus(c, ss);
  return ss.str();
}

corpus::Corpus parse(const std::string& s) {
  std::istringstream in(s);
  return corpus::read_corpus(in);
}

// Random documents with multi-byte text so code-point offsets matter.
json random_raw(std::mt19937_64& rng, std::size_t idx) {
  static const std::vector<std::string> words{"model",  "naïve",   "graph", "日本語", "encoder", "Ünïcode",
                                              "data",   "🙂",      "parse", "résumé", "token",   "corpus",
                                              "ελληνικά", "learning", "tree", "span"};
  auto pick = [&](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) s += ' ';
      s += words[rng() % words.size()];
    }
    return s;
  };
  const std::string partitions[] = {"train", "distant", "test"};
  json refs = json::object();
  json paras = json::array();
  const std::size_t np = 1 + rng() % 3;
  std::size_t ref_no = 0;
  for (std::size_t p = 0; p < np; ++p) {
    const std::size_t ns = 1 + rng() % 6;
    json sents = json::array();
    json cites = json::array();
    for (std::size_t s = 0; s < ns; ++s) {
      if (rng() % 2) {
        const std::string mark = "Author" + std::to_string(ref_no) + " (20" + std::to_string(10 + ref_no) + ")";
        const std::string cite = mark + " " + pick(3 + rng() % 4) + ".";
        const std::string lead = rng() % 3 == 0 ? pick(2) + ", " : "";
        sents.push_back(lead + cite);
        const std::string rid = "r" + std::to_string(ref_no++);
        cites.push_back({{"sentence_range", {s, s}}, {"text", cite}, {"citation_mark", mark}, {"ref_id", rid}});
        refs[rid] = {{"citation_mark", mark}, {"title", pick(4)}, {"abstract", pick(12)}};
      } else {
        sents.push_back(pick(4 + rng() % 6) + ".");
      }
    }
    paras.push_back({{"sentences", sents}, {"citations", cites}});
  }
  return {{"paper_id", "doc-" + std::to_string(idx)},
          {"partition", partitions[rng() % 3]},
          {"intro_text", pick(10) + "\n" + pick(5)},
          {"paragraphs", paras},
          {"references", refs}};
}

const char* kThreeDocsOneDangling = R"json({"paper_id":"a","partition":"train","intro_text":"Intro a.","paragraphs":[{"para_id":"p0","text":"Smith (2020) built a parser.","sentence_offsets":[[0,28]],"citations":[{"span_id":"s1","sentence_range":[0,0],"char_range":[0,28],"citation_mark":"Smith (2020)","ref_id":"r1"}]}],"references":{"r1":{"citation_mark":"Smith (2020)","title":"A parser","abstract":"We build a parser."}}}
{"paper_id":"b","partition":"distant","intro_text":"Intro b.","paragraphs":[{"para_id":"p0","text":"Lee (2019) studied tagging.","sentence_offsets":[[0,27]],"citations":[{"span_id":"dangling-span","sentence_range":[0,0],"char_range":[0,27],"citation_mark":"Lee (2019)","ref_id":"missing"}]}],"references":{}}
{"paper_id":"c","partition":"test","intro_text":"Intro c.","paragraphs":[{"para_id":"p0","text":"Nothing cited here.","sentence_offsets":[[0,19]],"citations":[]}],"references":{}}
)json";

}  // namespace

TEST_SUITE("text") {
  TEST_CASE("code point helpers") {
    const std::string s = "añ日🙂b";
    CHECK(text::cp_length(s) == 5);
    CHECK(text::cp_slice(s, 1, 4) == "ñ日🙂");
    CHECK(text::cp_head(s, 2) == "añ");
    CHECK(text::cp_head(s, 99) == s);
    CHECK(text::cp_to_byte(s, 2) == 3);
  }

  TEST_CASE("whitespace normalization") {
    CHECK(text::normalize_whitespace("  a \t b\r\n c  ") == "a b c");
    CHECK(text::normalize_whitespace("a  \n\n b", true) == "a\n\nb");
    CHECK(text::join_nonempty({"", "a", "", "b", ""}) == "a b");
  }

  TEST_CASE("meta tokens") {
    CHECK(text::contains_meta_token("x [MASK] y"));
    CHECK(text::contains_meta_token("a </s> b"));
    CHECK_FALSE(text::contains_meta_token("[MASKED] [SEPARATE]"));
    CHECK_FALSE(text::contains_meta_token("plain text"));
    CHECK(text::count_occurrences("[SEP] a [SEP][SEP]", "[SEP]") == 3);
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("empty file gives an empty corpus with zero counts") {
    const auto c = parse("");
    CHECK(c.empty());
    const auto counts = c.counts();
    REQUIRE(counts.size() == 3);
    for (const auto& [p, n] : counts) CHECK(n == corpus::PartitionCounts{0, 0});
  }

  TEST_CASE("dangling ref_id is reported with the offending span") {
    try {
      parse(kThreeDocsOneDangling);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      REQUIRE(e.issues().size() == 1);
      CHECK(e.issues()[0].record == "b");
      CHECK(e.issues()[0].path == "/paragraphs/0/citations/0/ref_id");
      CHECK(e.issues()[0].message.find("dangling-span") != std::string::npos);
    }
  }

  TEST_CASE("schema violations carry paper id and field path") {
    std::string bad = R"({"paper_id":"x","partition":"train","intro_text":"i","paragraphs":[],"references":{},"extra":1})";
    try {
      parse(bad + "\n" + R"({"paper_id":"y","partition":"nope","intro_text":"i","paragraphs":[{"para_id":"p","text":"t","sentence_offsets":[[0,1]],"citations":[]}],"references":{}})");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      bool extra = false, empty_paras = false, partition = false;
      for (const auto& is : e.issues()) {
        extra |= is.record == "x" && is.path == "/extra";
        empty_paras |= is.record == "x" && is.path == "/paragraphs";
        partition |= is.record == "y" && is.path == "/partition";
      }
      CHECK(extra);
      CHECK(empty_paras);
      CHECK(partition);
    }
  }

  TEST_CASE("offset violations are rejected") {
    auto j = json::parse(std::string(kThreeDocsOneDangling).substr(0, std::string(kThreeDocsOneDangling).find('\n')));
    SUBCASE("mark not inside span") { j["paragraphs"][0]["citations"][0]["char_range"] = {13, 28}; }
    SUBCASE("span outside sentence") { j["paragraphs"][0]["citations"][0]["char_range"] = {0, 40}; }
    SUBCASE("sentence out of bounds") { j["paragraphs"][0]["sentence_offsets"] = {{0, 50}}; }
    SUBCASE("meta-token in text") {
      j["paragraphs"][0]["text"] = "Smith (2020) built [SEP] parser.";
    }
    CHECK_THROWS_AS(parse(j.dump()), ValidationError);
  }

  TEST_CASE("duplicate paper ids are rejected") {
    const std::string line = std::string(kThreeDocsOneDangling).substr(0, std::string(kThreeDocsOneDangling).find('\n'));
    CHECK_THROWS_AS(parse(line + "\n" + line + "\n"), ValidationError);
  }

  TEST_CASE("partition filter") {
    const auto c = synthetic::generate({.seed = 3,
                                        .shape = {{Partition::kTrain, {2, 5}},
                                                  {Partition::kDistant, {3, 7}},
                                                  {Partition::kTest, {1, 2}}}});
    std::istringstream in(dump(c));
    const auto only_test = corpus::read_corpus(in, std::set<Partition>{Partition::kTest});
    CHECK(only_test.size() == 1);
    CHECK(only_test.counts().at(Partition::kTest) == corpus::PartitionCounts{1, 2});
  }

  TEST_CASE("merge_training keeps train and distant with their original labels") {
    const auto c = synthetic::generate({.seed = 5,
                                        .shape = {{Partition::kTrain, {2, 4}},
                                                  {Partition::kDistant, {3, 9}},
                                                  {Partition::kTest, {4, 6}}}});
    const auto merged = corpus::merge_training(c);
    CHECK(merged.size() == 5);
    CHECK(merged.totals() == corpus::PartitionCounts{5, 13});
    std::size_t train = 0, distant = 0;
    for (const auto& d : merged.documents()) {
      CHECK(d.training);
      train += d.partition == Partition::kTrain;
      distant += d.partition == Partition::kDistant;
    }
    CHECK(train == 2);
    CHECK(distant == 3);
    CHECK(corpus::test_split(c).size() == 4);

    const auto only_test = synthetic::generate({.seed = 1, .shape = {{Partition::kTest, {3, 3}}}});
    CHECK(corpus::merge_training(only_test).empty());
  }

  TEST_CASE("count conservation over random shapes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t tp = 1 + rng() % 5, dp = 1 + rng() % 5, sp = rng() % 4;
      const corpus::PartitionCounts t{tp, rng() % 15}, d{dp, rng() % 15}, s{sp, sp ? rng() % 10 : 0};
      const auto c = synthetic::generate(
          {.seed = rng(), .shape = {{Partition::kTrain, t}, {Partition::kDistant, d}, {Partition::kTest, s}}});
      const auto counts = c.counts();
      CHECK(counts.at(Partition::kTrain) == t);
      CHECK(counts.at(Partition::kDistant) == d);
      CHECK(counts.at(Partition::kTest) == s);
      CHECK(corpus::merge_training(c).totals() ==
            corpus::PartitionCounts{t.papers + d.papers, t.citations + d.citations});
    }
  }

  TEST_CASE("save/load round-trip on 100 randomized documents, byte-stable re-save") {
    std::mt19937_64 rng(2024);
    std::stringstream raw;
    for (std::size_t i = 0; i < 100; ++i) raw << random_raw(rng, i).dump() << '\n';
    const auto c = corpus::ingest_raw(raw);
    REQUIRE(c.size() == 100);

    fixtures::TempDir dir;
    corpus::save_corpus(c, dir / "a.jsonl");
    const auto loaded = corpus::load_corpus(dir / "a.jsonl");
    CHECK(loaded == c);
    corpus::save_corpus(loaded, dir / "b.jsonl");
    std::ifstream a(dir / "a.jsonl"), b(dir / "b.jsonl");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }

  TEST_CASE("every span slice contains its citation mark") {
    std::mt19937_64 rng(99);
    std::stringstream raw;
    for (std::size_t i = 0; i < 30; ++i) raw << random_raw(rng, i).dump() << '\n';
    const auto c = corpus::ingest_raw(raw);
    std::size_t spans = 0;
    for (const auto& d : c.documents()) {
      for (const auto& p : d.paragraphs) {
        for (const auto& s : p.citations) {
          CHECK(p.span_text(s).find(s.citation_mark) != std::string::npos);
          ++spans;
        }
      }
    }
    CHECK(spans > 0);
  }

  TEST_CASE("raw ingest normalizes whitespace and locates spans") {
    const auto c = fixtures::example_corpus();
    REQUIRE(c.size() == fixtures::citation_examples().size());
    const auto* doc = c.find("srl_dependency_structure");
    REQUIRE(doc != nullptr);
    const auto& p = doc->paragraphs.at(0);
    REQUIRE(p.citations.size() == 1);
    CHECK(p.span_text(p.citations[0]) == "Haji et al. (2009) incorporate dependency-structure information.");
    CHECK(p.sentences.size() == 2);
    CHECK(p.sentence(0) == fixtures::citation_examples()[0].sentences[0]);
  }

  TEST_CASE("I/O errors carry the path") {
    try {
      corpus::load_corpus("/nonexistent/dir/corpus.jsonl");
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("/nonexistent/dir/corpus.jsonl") != std::string::npos);
    }
  }
}
