#include "citeforge/synthetic.hpp"

#include <array>
#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "citeforge/text.hpp"

namespace citeforge::synthetic {

using corpus::CitationSpan;
using corpus::Document;
using corpus::Paragraph;
using corpus::Partition;
using corpus::ReferenceEntry;

namespace {

constexpr std::array kSurnames = {"Smith",  "Chen",    "Garcia", "Kumar",  "Novak",
                                  "Okafor", "Larsen",  "Tanaka", "Rossi",  "Dubois",
                                  "Petrov", "Silva",   "Haddad", "Kim",    "Murphy",
                                  "Weber",  "Ivanova", "Moreau", "Jensen", "Nakamura"};
constexpr std::array kAdjectives = {"neural",      "sparse",        "hierarchical", "graph-based",
                                    "contrastive", "latent",        "recurrent",    "convolutional",
                                    "multilingual", "unsupervised", "probabilistic", "character-level"};
constexpr std::array kNouns = {"parser",  "encoder",   "tagger",    "classifier", "aligner",
                               "ranker",  "decoder",   "retriever", "summarizer", "segmenter"};
constexpr std::array kTasks = {"dependency parsing",        "named entity recognition",
                               "machine translation",       "question answering",
                               "text summarization",        "coreference resolution",
                               "sentiment analysis",        "relation extraction",
                               "semantic role labeling",    "grammatical error detection"};
// present / past pairs
constexpr std::array<std::array<const char*, 2>, 8> kVerbs = {{{"propose", "proposed"},
                                                               {"introduce", "introduced"},
                                                               {"extend", "extended"},
                                                               {"build", "built"},
                                                               {"improve", "improved"},
                                                               {"present", "presented"},
                                                               {"study", "studied"},
                                                               {"evaluate", "evaluated"}}};
constexpr std::array kFindings = {"that reduces annotation cost",
                                  "that is robust to noisy text",
                                  "trained on large unlabeled corpora",
                                  "with an auxiliary language modeling objective",
                                  "using cross-lingual supervision",
                                  "with explicit syntactic features"};
constexpr std::array kFollowUps = {"Their method was evaluated on standard benchmarks.",
                                   "This approach requires substantial training data.",
                                   "The resulting model is fast at inference time.",
                                   "However, it does not handle long documents."};
constexpr std::array kLeadIns = {"Similarly,", "More recently,", "In particular,",
                                 "Building on this idea,", "In a related direction,"};

class Writer {
 public:
  explicit Writer(std::uint64_t seed) : rng_(seed) {}

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  template <typename Array>
  auto pick(const Array& a) {
    return a[uniform(0, a.size() - 1)];
  }
  bool chance(unsigned percent) { return uniform(0, 99) < percent; }

  std::string filler(const std::string& task) {
    switch (uniform(0, 5)) {
      case 0: return "Research on " + task + " has grown steadily in recent years.";
      case 1: return "Early systems for " + task + " relied on hand-written rules.";
      case 2: return std::string("Most recent methods use ") + pick(kAdjectives) + " " +
                     pick(kNouns) + "s.";
      case 3: return "In contrast with their work, we study " + task + " in a low-resource setting.";
      case 4: return "We follow this line of work.";
      default: return "These approaches often require large annotated datasets.";
    }
  }

  ReferenceEntry reference(const std::string& ref_id, std::string& cite_sentence_body) {
    const std::string surname = pick(kSurnames);
    const std::string year = std::to_string(uniform(2005, 2023));
    std::string mark;
    switch (uniform(0, 2)) {
      case 0: mark = surname + " et al. (" + year + ")"; break;
      case 1: mark = surname + " and " + pick(kSurnames) + " (" + year + ")"; break;
      default: mark = surname + " (" + year + ")"; break;
    }
    const std::string adj = pick(kAdjectives);
    const std::string noun = pick(kNouns);
    const std::string task = pick(kTasks);
    const auto verb = pick(kVerbs);
    const std::string finding = pick(kFindings);

    std::string title = adj + " " + noun + "s for " + task;
    title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
    ReferenceEntry e;
    e.ref_id = ref_id;
    e.citation_mark = mark;
    e.title = title;
    e.abstract = std::string("We ") + verb[0] + " a " + adj + " " + noun + " for " + task + " " +
                 finding + ". Experiments on " + task + " show consistent gains.";
    cite_sentence_body = mark + " " + verb[1] + " a " + adj + " " + noun + " for " + task + " " +
                         finding + ".";
    return e;
  }

  std::string task() { return pick(kTasks); }
  std::string follow_up() { return pick(kFollowUps); }
  std::string lead_in() { return pick(kLeadIns); }

 private:
  std::mt19937_64 rng_;
};

struct PendingCitation {
  std::size_t sentence = 0;
  bool two_sentences = false;
  std::size_t prefix_cp = 0;  // code points before the span inside its first sentence
  std::string span;
  std::string mark;
  std::string ref_id;
};

Paragraph make_paragraph(Writer& w, const Options& opts, const std::string& para_id,
                         std::size_t n_cites, std::size_t& ref_counter, const std::string& span_prefix,
                         std::map<std::string, ReferenceEntry>& refs) {
  const std::string topic = w.task();
  const std::size_t base = w.uniform(opts.min_sentences, std::max(opts.min_sentences, opts.max_sentences));
  // Each citation occupies up to two sentences and is followed by at least one
  // filler, so the layout always fits.
  std::vector<std::string> sentences;
  std::vector<PendingCitation> pending;
  std::size_t remaining_cites = n_cites;
  std::size_t remaining_fillers = base > 2 * n_cites ? base - 2 * n_cites : 1;

  while (remaining_cites > 0 || remaining_fillers > 0) {
    const bool place_cite = remaining_cites > 0 && (remaining_fillers == 0 || w.chance(50));
    if (!place_cite) {
      sentences.push_back(w.filler(topic));
      --remaining_fillers;
      continue;
    }
    std::string body;
    const std::string ref_id = "r" + std::to_string(ref_counter++);
    ReferenceEntry ref = w.reference(ref_id, body);
    PendingCitation pc;
    pc.sentence = sentences.size();
    pc.mark = ref.citation_mark;
    pc.ref_id = ref_id;
    std::string sentence = body;
    if (w.chance(opts.partial_percent)) {
      const std::string lead = w.lead_in();
      pc.prefix_cp = text::cp_length(lead) + 1;
      sentence = lead + " " + body;
    }
    pc.span = body;
    sentences.push_back(sentence);
    if (w.chance(opts.multi_sentence_percent)) {
      const std::string extra = w.follow_up();
      pc.two_sentences = true;
      pc.span += " " + extra;
      sentences.push_back(extra);
    }
    // A filler after each citation keeps citations from touching.
    sentences.push_back(w.filler(topic));
    refs.emplace(ref_id, std::move(ref));
    pending.push_back(std::move(pc));
    --remaining_cites;
  }

  Paragraph para;
  para.para_id = para_id;
  std::size_t cursor = 0;
  for (const auto& s : sentences) {
    if (!para.text.empty()) {
      para.text.push_back(' ');
      ++cursor;
    }
    const std::size_t len = text::cp_length(s);
    para.sentences.push_back({cursor, cursor + len});
    para.text += s;
    cursor += len;
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const auto& pc = pending[i];
    CitationSpan c;
    c.span_id = span_prefix + std::to_string(i);
    c.first_sentence = pc.sentence;
    c.last_sentence = pc.sentence + (pc.two_sentences ? 1 : 0);
    const std::size_t begin = para.sentences[pc.sentence].begin + pc.prefix_cp;
    c.chars = {begin, begin + text::cp_length(pc.span)};
    c.citation_mark = pc.mark;
    c.ref_id = pc.ref_id;
    para.citations.push_back(std::move(c));
  }
  return para;
}

}  // namespace

corpus::Corpus generate(const Options& opts) {
  Writer w(opts.seed);
  std::vector<Document> docs;
  std::size_t serial = 0;
  for (const auto& [partition, shape] : opts.shape) {
    if (shape.citations > 0 && shape.papers == 0) {
      throw ArgumentError("synthetic partition " + std::string(corpus::to_string(partition)) +
                          " has citations but no papers");
    }
    for (std::size_t p = 0; p < shape.papers; ++p) {
      std::size_t n_cites = shape.citations / shape.papers + (p < shape.citations % shape.papers ? 1 : 0);
      Document doc;
      doc.paper_id = std::string(corpus::to_string(partition)) + "-" + std::to_string(serial++);
      doc.partition = partition;
      doc.intro_text = "We study " + w.task() + ". " + w.filler(w.task());
      std::size_t ref_counter = 0;
      std::size_t para_no = 0;
      do {
        const std::size_t max_here = std::max<std::size_t>(1, opts.max_citations_per_paragraph);
        const std::size_t here = std::min(n_cites, w.uniform(1, max_here));
        const std::string para_id = "p" + std::to_string(para_no);
        doc.paragraphs.push_back(make_paragraph(w, opts, para_id, here, ref_counter,
                                                para_id + "-c", doc.references));
        n_cites -= here;
        ++para_no;
      } while (n_cites > 0);
      docs.push_back(std::move(doc));
    }
  }
  return corpus::Corpus(std::move(docs));
}

corpus::Corpus generate_train(std::size_t papers, std::size_t citations, std::uint64_t seed,
                              unsigned partial_percent, unsigned multi_sentence_percent) {
  Options o;
  o.seed = seed;
  o.shape[Partition::kTrain] = {papers, citations};
  o.partial_percent = partial_percent;
  o.multi_sentence_percent = multi_sentence_percent;
  return generate(o);
}

}  // namespace citeforge::synthetic
