#include "citeforge/targets.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "citeforge/text.hpp"
#include "json.hpp"

namespace citeforge::targets {

using corpus::Document;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Mode m) {
  return m == Mode::kInfilling ? "infilling" : "contextualized";
}

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "infilling") return Mode::kInfilling;
  if (s == "contextualized") return Mode::kContextualized;
  return std::nullopt;
}

std::string ContextWindow::left_text() const {
  std::vector<std::string> parts = left;
  parts.push_back(left_partial);
  return text::join_nonempty(parts);
}

std::string ContextWindow::right_text() const {
  std::vector<std::string> parts{right_partial};
  parts.insert(parts.end(), right.begin(), right.end());
  return text::join_nonempty(parts);
}

std::string ContextWindow::reassembled() const {
  return text::join_nonempty({left_text(), citation_text, right_text()});
}

ContextWindow extract_context_window(const Document& doc, std::string_view span_id, std::size_t width) {
  if (width == 0) throw ArgumentError("context window width must be >= 1");
  const auto loc = corpus::find_span(doc, span_id);
  if (!loc) {
    throw NotFoundError("span '" + std::string(span_id) + "' not found in " + doc.paper_id);
  }
  const auto& para = doc.paragraphs[loc->paragraph];
  const auto& cite = para.citations[loc->citation];

  ContextWindow w;
  w.source = {doc.paper_id, para.para_id, cite.span_id};
  w.width = width;
  w.citation_text = std::string(text::trim(para.span_text(cite)));

  const auto& first = para.sentences[cite.first_sentence];
  const auto& last = para.sentences[cite.last_sentence];
  w.left_partial = std::string(text::trim(para.slice({first.begin, cite.chars.begin})));
  w.right_partial = std::string(text::trim(para.slice({cite.chars.end, last.end})));

  const std::size_t left_from = cite.first_sentence > width ? cite.first_sentence - width : 0;
  for (std::size_t i = left_from; i < cite.first_sentence; ++i) w.left.push_back(para.sentence(i));
  const std::size_t n = para.sentences.size();
  const std::size_t right_to =
      (n - 1 - cite.last_sentence) > width ? cite.last_sentence + 1 + width : n;
  for (std::size_t i = cite.last_sentence + 1; i < right_to; ++i) w.right.push_back(para.sentence(i));

  w.extent.begin = w.left.empty() ? (w.left_partial.empty() ? cite.chars.begin : first.begin)
                                  : para.sentences[left_from].begin;
  w.extent.end = w.right.empty() ? (w.right_partial.empty() ? cite.chars.end : last.end)
                                 : para.sentences[right_to - 1].end;
  return w;
}

std::string mask_window(const ContextWindow& window) {
  return text::join_nonempty({window.left_text(), std::string(text::kMask), window.right_text()});
}

std::string mask_paragraph(const Document& doc, std::string_view span_id) {
  return mask_window(extract_context_window(doc, span_id, kWholeParagraph));
}

std::size_t protected_size(std::string_view masked_paragraph, const corpus::ReferenceEntry& ref) {
  return 4 * text::cp_length(kFieldJoin) + text::cp_length(masked_paragraph) +
         text::cp_length(ref.citation_mark) + text::cp_length(ref.title);
}

std::string build_input(const Document& doc, std::string_view masked_paragraph,
                        const corpus::ReferenceEntry& ref, std::size_t budget) {
  const std::size_t fixed = protected_size(masked_paragraph, ref);
  if (budget < fixed) {
    throw BudgetError("input budget " + std::to_string(budget) + " is below the " +
                      std::to_string(fixed) + " code points needed for paragraph, mark and title");
  }
  const std::size_t room = budget - fixed;
  std::string intro = doc.intro_text;
  std::string abstract = ref.abstract;
  const std::size_t intro_len = text::cp_length(intro);
  const std::size_t abstract_len = text::cp_length(abstract);
  if (intro_len + abstract_len > room) {
    if (abstract_len <= room) {
      intro = text::cp_head(intro, room - abstract_len);
    } else {
      intro.clear();
      abstract = text::cp_head(abstract, room);
    }
  }
  std::string out;
  out.reserve(intro.size() + masked_paragraph.size() + ref.title.size() + abstract.size() + 64);
  out += intro;
  out += kFieldJoin;
  out += masked_paragraph;
  out += kFieldJoin;
  out += ref.citation_mark;
  out += kFieldJoin;
  out += ref.title;
  out += kFieldJoin;
  out += abstract;
  return out;
}

std::string build_target(const ContextWindow& window, Mode mode) {
  if (mode == Mode::kInfilling) return window.citation_text;
  const std::string sep(text::kSep);
  return text::join_nonempty({window.left_text(), sep, window.citation_text, sep, window.right_text()});
}

std::string example_id_for(const Source& s) {
  return s.paper_id + "/" + s.para_id + "/" + s.span_id;
}

namespace {

struct Prepared {
  std::string input;
  ContextWindow window;
};

std::vector<Prepared> prepare(const corpus::Corpus& corpus, const BuildOptions& opts, BuildReport& report) {
  std::vector<Prepared> out;
  for (const auto& doc : corpus.documents()) {
    for (const auto& para : doc.paragraphs) {
      for (const auto& cite : para.citations) {
        try {
          Prepared p;
          p.window = extract_context_window(doc, cite.span_id, opts.width);
          const auto ref = doc.references.find(cite.ref_id);
          if (ref == doc.references.end()) throw NotFoundError("unresolved ref_id " + cite.ref_id);
          p.input = build_input(doc, mask_paragraph(doc, cite.span_id), ref->second, opts.budget);
          out.push_back(std::move(p));
        } catch (const Error& e) {
          ++report.skipped;
          report.failures.push_back({doc.paper_id, "/" + para.para_id + "/" + cite.span_id, e.what()});
        }
      }
    }
  }
  if (opts.shuffle) {
    std::mt19937_64 rng(opts.seed);
    std::shuffle(out.begin(), out.end(), rng);
  }
  report.emitted = out.size();
  return out;
}

GenerationExample make_example(const Prepared& p, Mode mode) {
  GenerationExample ex;
  ex.example_id = example_id_for(p.window.source);
  ex.mode = mode;
  ex.input_text = p.input;
  ex.target_text = build_target(p.window, mode);
  ex.source = p.window.source;
  return ex;
}

}  // namespace

std::vector<GenerationExample> build_dataset(const corpus::Corpus& corpus, Mode mode,
                                             const BuildOptions& opts, BuildReport* report) {
  BuildReport local;
  auto prepared = prepare(corpus, opts, local);
  std::vector<GenerationExample> out;
  out.reserve(prepared.size());
  for (const auto& p : prepared) out.push_back(make_example(p, mode));
  if (report) *report = std::move(local);
  return out;
}

PairedDataset build_paired(const corpus::Corpus& corpus, const BuildOptions& opts) {
  PairedDataset d;
  auto prepared = prepare(corpus, opts, d.report);
  d.infilling.reserve(prepared.size());
  d.contextualized.reserve(prepared.size());
  for (const auto& p : prepared) {
    d.infilling.push_back(make_example(p, Mode::kInfilling));
    d.contextualized.push_back(make_example(p, Mode::kContextualized));
  }
  return d;
}

std::string_view to_string(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::kOk: return "ok";
    case ExtractionStatus::kMissingSeparator: return "missing_separator";
    case ExtractionStatus::kExtraSeparator: return "extra_separator";
    case ExtractionStatus::kEmptyCitation: return "empty_citation";
  }
  return "ok";
}

std::optional<ExtractionStatus> parse_status(std::string_view s) {
  for (auto st : {ExtractionStatus::kOk, ExtractionStatus::kMissingSeparator,
                  ExtractionStatus::kExtraSeparator, ExtractionStatus::kEmptyCitation}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

GenerationOutput extract_citation(std::string_view raw_text, Mode mode, std::string example_id) {
  GenerationOutput out;
  out.example_id = std::move(example_id);
  out.raw_text = std::string(raw_text);

  if (mode == Mode::kInfilling) {
    out.extracted_citation = std::string(text::trim(raw_text));
    out.status = out.extracted_citation.empty() ? ExtractionStatus::kEmptyCitation : ExtractionStatus::kOk;
    return out;
  }

  const std::size_t first = raw_text.find(text::kSep);
  if (first == std::string_view::npos) {
    out.extracted_citation = std::string(text::trim(raw_text));
    out.status = ExtractionStatus::kMissingSeparator;
    return out;
  }
  const std::size_t after_first = first + text::kSep.size();
  const std::size_t second = raw_text.find(text::kSep, after_first);
  if (second == std::string_view::npos) {
    // One separator: keep what follows it as a best-effort citation.
    out.extracted_citation = std::string(text::trim(raw_text.substr(after_first)));
    out.status = ExtractionStatus::kMissingSeparator;
    return out;
  }
  out.extracted_citation = std::string(text::trim(raw_text.substr(after_first, second - after_first)));
  const bool more = raw_text.find(text::kSep, second + text::kSep.size()) != std::string_view::npos;
  if (out.extracted_citation.empty()) {
    out.status = ExtractionStatus::kEmptyCitation;
  } else {
    out.status = more ? ExtractionStatus::kExtraSeparator : ExtractionStatus::kOk;
  }
  return out;
}

namespace {

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::vector<Issue> issues;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string tag = "line " + std::to_string(line_no);
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& e) {
      issues.push_back({tag, "", e.what()});
    } catch (const ValidationError& e) {
      for (auto is : e.issues()) {
        is.record = tag + (is.record.empty() ? "" : " (" + is.record + ")");
        issues.push_back(std::move(is));
      }
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return out;
}

GenerationExample example_from_json(const json& j) {
  GenerationExample ex;
  ex.example_id = j.at("example_id").get<std::string>();
  const auto mode = parse_mode(j.at("mode").get<std::string>());
  if (!mode) throw ValidationError({{ex.example_id, "/mode", "unknown mode"}});
  ex.mode = *mode;
  ex.input_text = j.at("input_text").get<std::string>();
  ex.target_text = j.at("target_text").get<std::string>();
  const auto& src = j.at("source");
  ex.source = {src.at("paper_id").get<std::string>(), src.at("para_id").get<std::string>(),
               src.at("span_id").get<std::string>()};
  return ex;
}

GenerationOutput output_from_json(const json& j) {
  GenerationOutput o;
  o.example_id = j.at("example_id").get<std::string>();
  o.raw_text = j.at("raw_text").get<std::string>();
  o.extracted_citation = j.at("extracted_citation").get<std::string>();
  const auto st = parse_status(j.at("status").get<std::string>());
  if (!st) throw ValidationError({{o.example_id, "/status", "unknown status"}});
  o.status = *st;
  return o;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_examples(const std::vector<GenerationExample>& examples, std::ostream& out) {
  for (const auto& ex : examples) {
    ordered_json j;
    j["example_id"] = ex.example_id;
    j["mode"] = std::string(to_string(ex.mode));
    j["input_text"] = ex.input_text;
    j["target_text"] = ex.target_text;
    j["source"] = ordered_json{{"paper_id", ex.source.paper_id},
                               {"para_id", ex.source.para_id},
                               {"span_id", ex.source.span_id}};
    out << j.dump() << '\n';
  }
}

void save_examples(const std::vector<GenerationExample>& examples, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_examples(examples, out);
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::vector<GenerationExample> read_examples(std::istream& in) {
  return read_lines<GenerationExample>(in, example_from_json);
}

std::vector<GenerationExample> load_examples(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_examples(in);
}

void write_outputs(const std::vector<GenerationOutput>& outputs, std::ostream& out) {
  for (const auto& o : outputs) {
    ordered_json j;
    j["example_id"] = o.example_id;
    j["raw_text"] = o.raw_text;
    j["extracted_citation"] = o.extracted_citation;
    j["status"] = std::string(to_string(o.status));
    out << j.dump() << '\n';
  }
}

void save_outputs(const std::vector<GenerationOutput>& outputs, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_outputs(outputs, out);
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::vector<GenerationOutput> read_outputs(std::istream& in) {
  return read_lines<GenerationOutput>(in, output_from_json);
}

std::vector<GenerationOutput> load_outputs(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_outputs(in);
}

}  // namespace citeforge::targets
