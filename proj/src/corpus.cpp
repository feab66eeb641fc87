#include "citeforge/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "citeforge/text.hpp"
#include "json.hpp"

namespace citeforge {

namespace {

std::string summarize(const std::vector<Issue>& issues) {
  std::ostringstream os;
  os << issues.size() << " validation issue(s)";
  const std::size_t shown = std::min<std::size_t>(issues.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& is = issues[i];
    os << (i == 0 ? ": " : "; ") << is.record << " " << is.path << ": " << is.message;
  }
  if (issues.size() > shown) os << "; ...";
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Issue> issues)
    : Error(summarize(issues)), issues_(std::move(issues)) {}

}  // namespace citeforge

namespace citeforge::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kDistant: return "distant";
    case Partition::kTest: return "test";
  }
  return "train";
}

std::optional<Partition> parse_partition(std::string_view s) {
  if (s == "train") return Partition::kTrain;
  if (s == "distant") return Partition::kDistant;
  if (s == "test") return Partition::kTest;
  return std::nullopt;
}

std::string Paragraph::slice(TextRange r) const { return text::cp_slice(text, r.begin, r.end); }

std::size_t Document::citation_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.citations.size();
  return n;
}

std::optional<SpanLocation> find_span(const Document& doc, std::string_view span_id) {
  for (std::size_t p = 0; p < doc.paragraphs.size(); ++p) {
    const auto& cites = doc.paragraphs[p].citations;
    for (std::size_t c = 0; c < cites.size(); ++c) {
      if (cites[c].span_id == span_id) return SpanLocation{p, c};
    }
  }
  return std::nullopt;
}

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  std::vector<Issue> dupes;
  index_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!index_.emplace(docs_[i].paper_id, i).second) {
      dupes.push_back({docs_[i].paper_id, "/paper_id", "duplicate paper_id"});
    }
  }
  if (!dupes.empty()) throw ValidationError(std::move(dupes));
}

const Document* Corpus::find(std::string_view paper_id) const {
  auto it = index_.find(std::string(paper_id));
  return it == index_.end() ? nullptr : &docs_[it->second];
}

std::map<Partition, PartitionCounts> Corpus::counts() const {
  std::map<Partition, PartitionCounts> out{
      {Partition::kTrain, {}}, {Partition::kDistant, {}}, {Partition::kTest, {}}};
  for (const auto& d : docs_) {
    auto& c = out[d.partition];
    ++c.papers;
    c.citations += d.citation_count();
  }
  return out;
}

PartitionCounts Corpus::totals() const {
  PartitionCounts t;
  for (const auto& d : docs_) {
    ++t.papers;
    t.citations += d.citation_count();
  }
  return t;
}

std::vector<Issue> validate(const Document& doc) {
  std::vector<Issue> issues;
  const std::string& rec = doc.paper_id;
  auto add = [&](std::string path, std::string msg) {
    issues.push_back({rec, std::move(path), std::move(msg)});
  };

  if (doc.paper_id.empty()) add("/paper_id", "empty paper_id");
  if (text::contains_meta_token(doc.intro_text)) add("/intro_text", "contains a reserved meta-token");
  if (doc.paragraphs.empty()) add("/paragraphs", "document has no paragraphs");

  for (const auto& [key, ref] : doc.references) {
    const std::string base = "/references/" + key;
    if (ref.ref_id != key) add(base, "ref_id does not match its key");
    if (text::normalize_whitespace(ref.title).empty()) add(base + "/title", "empty title");
    if (text::normalize_whitespace(ref.abstract).empty()) add(base + "/abstract", "empty abstract");
    if (text::normalize_whitespace(ref.citation_mark).empty()) {
      add(base + "/citation_mark", "empty citation_mark");
    }
    if (text::contains_meta_token(ref.title) || text::contains_meta_token(ref.abstract) ||
        text::contains_meta_token(ref.citation_mark)) {
      add(base, "contains a reserved meta-token");
    }
  }

  std::set<std::string> span_ids;
  for (std::size_t pi = 0; pi < doc.paragraphs.size(); ++pi) {
    const auto& para = doc.paragraphs[pi];
    const std::string base = "/paragraphs/" + std::to_string(pi);
    const std::size_t len = text::cp_length(para.text);
    if (text::contains_meta_token(para.text)) add(base + "/text", "contains a reserved meta-token");
    if (para.sentences.empty()) add(base + "/sentence_offsets", "no sentences");

    std::size_t prev_end = 0;
    for (std::size_t si = 0; si < para.sentences.size(); ++si) {
      const auto& s = para.sentences[si];
      const std::string sp = base + "/sentence_offsets/" + std::to_string(si);
      if (s.begin >= s.end) add(sp, "empty or inverted sentence range");
      if (s.end > len) add(sp, "sentence range out of bounds");
      if (si > 0 && s.begin < prev_end) add(sp, "sentence ranges overlap or are not ascending");
      prev_end = s.end;
    }

    for (std::size_t ci = 0; ci < para.citations.size(); ++ci) {
      const auto& c = para.citations[ci];
      const std::string cp = base + "/citations/" + std::to_string(ci);
      if (c.span_id.empty()) add(cp + "/span_id", "empty span_id");
      if (!span_ids.insert(c.span_id).second) add(cp + "/span_id", "duplicate span_id " + c.span_id);
      if (!doc.references.contains(c.ref_id)) {
        add(cp + "/ref_id", "span " + c.span_id + " has unresolved ref_id " + c.ref_id);
      }
      if (c.first_sentence > c.last_sentence || c.last_sentence >= para.sentences.size()) {
        add(cp + "/sentence_range", "invalid sentence range");
        continue;
      }
      const std::size_t lo = para.sentences[c.first_sentence].begin;
      const std::size_t hi = para.sentences[c.last_sentence].end;
      if (c.chars.begin >= c.chars.end || c.chars.begin < lo || c.chars.end > hi) {
        add(cp + "/char_range", "char range outside its sentence range");
        continue;
      }
      if (c.citation_mark.empty() ||
          para.span_text(c).find(c.citation_mark) == std::string::npos) {
        add(cp + "/citation_mark", "citation_mark not found in span text");
      }
    }
  }
  return issues;
}

namespace {

// Field-by-field reader that records every problem with its path.
class RecordReader {
 public:
  RecordReader(std::string record, std::vector<Issue>& issues)
      : record_(std::move(record)), issues_(issues) {}

  void fail(const std::string& path, const std::string& msg) {
    issues_.push_back({record_, path, msg});
  }

  void exact_fields(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> fields) {
    for (const auto& f : fields) {
      if (!obj.contains(std::string(f))) fail(path + "/" + std::string(f), "missing field");
    }
    for (const auto& [k, _] : obj.items()) {
      bool known = false;
      for (const auto& f : fields) known = known || k == f;
      if (!known) fail(path + "/" + k, "unexpected field");
    }
  }

  std::string str(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_string()) {
      fail(path + "/" + key, "expected string");
      return {};
    }
    return it->get<std::string>();
  }

  std::optional<std::pair<std::size_t, std::size_t>> pair(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() ||
        !v[1].is_number_unsigned()) {
      fail(path, "expected [non-negative int, non-negative int]");
      return std::nullopt;
    }
    return std::pair{v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }

  const json* array(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_array()) {
      fail(path + "/" + key, "expected array");
      return nullptr;
    }
    return &*it;
  }

 private:
  std::string record_;
  std::vector<Issue>& issues_;
};

Document document_from_json(const json& j, std::vector<Issue>& issues, const std::string& line_tag) {
  Document doc;
  if (!j.is_object()) {
    issues.push_back({line_tag, "", "record is not a JSON object"});
    return doc;
  }
  std::string record = line_tag;
  if (auto it = j.find("paper_id"); it != j.end() && it->is_string()) record = it->get<std::string>();
  RecordReader r(record, issues);
  r.exact_fields(j, "", {"paper_id", "partition", "intro_text", "paragraphs", "references"});

  doc.paper_id = r.str(j, "paper_id", "");
  const std::string part = r.str(j, "partition", "");
  if (auto p = parse_partition(part)) {
    doc.partition = *p;
  } else if (j.contains("partition")) {
    r.fail("/partition", "unknown partition '" + part + "'");
  }
  doc.intro_text = r.str(j, "intro_text", "");

  if (auto refs = j.find("references"); refs != j.end()) {
    if (!refs->is_object()) {
      r.fail("/references", "expected object");
    } else {
      for (const auto& [key, v] : refs->items()) {
        const std::string path = "/references/" + key;
        if (!v.is_object()) {
          r.fail(path, "expected object");
          continue;
        }
        r.exact_fields(v, path, {"citation_mark", "title", "abstract"});
        ReferenceEntry e;
        e.ref_id = key;
        e.citation_mark = r.str(v, "citation_mark", path);
        e.title = r.str(v, "title", path);
        e.abstract = r.str(v, "abstract", path);
        doc.references.emplace(key, std::move(e));
      }
    }
  }

  if (const json* paras = r.array(j, "paragraphs", "")) {
    for (std::size_t pi = 0; pi < paras->size(); ++pi) {
      const json& pj = (*paras)[pi];
      const std::string path = "/paragraphs/" + std::to_string(pi);
      if (!pj.is_object()) {
        r.fail(path, "expected object");
        continue;
      }
      r.exact_fields(pj, path, {"para_id", "text", "sentence_offsets", "citations"});
      Paragraph para;
      para.para_id = r.str(pj, "para_id", path);
      para.text = r.str(pj, "text", path);
      if (const json* offs = r.array(pj, "sentence_offsets", path)) {
        for (std::size_t si = 0; si < offs->size(); ++si) {
          if (auto pr = r.pair((*offs)[si], path + "/sentence_offsets/" + std::to_string(si))) {
            para.sentences.push_back({pr->first, pr->second});
          }
        }
      }
      if (const json* cites = r.array(pj, "citations", path)) {
        for (std::size_t ci = 0; ci < cites->size(); ++ci) {
          const json& cj = (*cites)[ci];
          const std::string cpath = path + "/citations/" + std::to_string(ci);
          if (!cj.is_object()) {
            r.fail(cpath, "expected object");
            continue;
          }
          r.exact_fields(cj, cpath,
                         {"span_id", "sentence_range", "char_range", "citation_mark", "ref_id"});
          CitationSpan c;
          c.span_id = r.str(cj, "span_id", cpath);
          c.citation_mark = r.str(cj, "citation_mark", cpath);
          c.ref_id = r.str(cj, "ref_id", cpath);
          if (cj.contains("sentence_range")) {
            if (auto pr = r.pair(cj["sentence_range"], cpath + "/sentence_range")) {
              c.first_sentence = pr->first;
              c.last_sentence = pr->second;
            }
          }
          if (cj.contains("char_range")) {
            if (auto pr = r.pair(cj["char_range"], cpath + "/char_range")) {
              c.chars = {pr->first, pr->second};
            }
          }
          para.citations.push_back(std::move(c));
        }
      }
      doc.paragraphs.push_back(std::move(para));
    }
  }
  return doc;
}

ordered_json document_to_json(const Document& d) {
  ordered_json j;
  j["paper_id"] = d.paper_id;
  j["partition"] = std::string(to_string(d.partition));
  j["intro_text"] = d.intro_text;
  ordered_json paras = ordered_json::array();
  for (const auto& p : d.paragraphs) {
    ordered_json pj;
    pj["para_id"] = p.para_id;
    pj["text"] = p.text;
    ordered_json offs = ordered_json::array();
    for (const auto& s : p.sentences) offs.push_back({s.begin, s.end});
    pj["sentence_offsets"] = std::move(offs);
    ordered_json cites = ordered_json::array();
    for (const auto& c : p.citations) {
      ordered_json cj;
      cj["span_id"] = c.span_id;
      cj["sentence_range"] = {c.first_sentence, c.last_sentence};
      cj["char_range"] = {c.chars.begin, c.chars.end};
      cj["citation_mark"] = c.citation_mark;
      cj["ref_id"] = c.ref_id;
      cites.push_back(std::move(cj));
    }
    pj["citations"] = std::move(cites);
    paras.push_back(std::move(pj));
  }
  j["paragraphs"] = std::move(paras);
  ordered_json refs = ordered_json::object();
  for (const auto& [id, r] : d.references) {
    ordered_json rj;
    rj["citation_mark"] = r.citation_mark;
    rj["title"] = r.title;
    rj["abstract"] = r.abstract;
    refs[id] = std::move(rj);
  }
  j["references"] = std::move(refs);
  return j;
}

}  // namespace

Corpus read_corpus(std::istream& in, const PartitionFilter& filter) {
  std::vector<Document> docs;
  std::vector<Issue> issues;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string tag = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      issues.push_back({tag, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    const std::size_t before = issues.size();
    Document doc = document_from_json(j, issues, tag);
    {
      // Semantic checks run even after schema problems so one pass reports both.
      auto more = validate(doc);
      issues.insert(issues.end(), more.begin(), more.end());
      if (!doc.paper_id.empty() && !seen.insert(doc.paper_id).second) {
        issues.push_back({doc.paper_id, "/paper_id", "duplicate paper_id"});
      }
    }
    if (issues.size() != before) continue;
    if (filter && !filter->contains(doc.partition)) continue;
    docs.push_back(std::move(doc));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path, const PartitionFilter& filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  return read_corpus(in, filter);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus.documents()) out << document_to_json(d).dump() << '\n';
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  write_corpus(corpus, out);
  out.flush();
  if (!out) throw IoError("write failed for corpus file " + path.string());
}

Corpus merge_training(const Corpus& corpus) {
  std::vector<Document> docs;
  for (const auto& d : corpus.documents()) {
    if (d.partition == Partition::kTest) continue;
    Document copy = d;
    copy.training = true;
    docs.push_back(std::move(copy));
  }
  return Corpus(std::move(docs));
}

Corpus test_split(const Corpus& corpus) {
  std::vector<Document> docs;
  for (const auto& d : corpus.documents()) {
    if (d.partition == Partition::kTest) docs.push_back(d);
  }
  return Corpus(std::move(docs));
}

namespace {

Document ingest_record(const json& j, const std::string& tag, std::vector<Issue>& issues) {
  Document doc;
  if (!j.is_object()) {
    issues.push_back({tag, "", "record is not a JSON object"});
    return doc;
  }
  std::string record = tag;
  if (auto it = j.find("paper_id"); it != j.end() && it->is_string()) record = it->get<std::string>();
  RecordReader r(record, issues);
  doc.paper_id = r.str(j, "paper_id", "");
  const std::string part = r.str(j, "partition", "");
  if (auto p = parse_partition(part)) {
    doc.partition = *p;
  } else {
    r.fail("/partition", "unknown partition '" + part + "'");
  }
  doc.intro_text = text::normalize_whitespace(r.str(j, "intro_text", ""), /*keep_newlines=*/true);

  if (auto refs = j.find("references"); refs != j.end() && refs->is_object()) {
    for (const auto& [key, v] : refs->items()) {
      const std::string path = "/references/" + key;
      ReferenceEntry e;
      e.ref_id = key;
      e.citation_mark = text::normalize_whitespace(r.str(v, "citation_mark", path));
      e.title = text::normalize_whitespace(r.str(v, "title", path));
      e.abstract = text::normalize_whitespace(r.str(v, "abstract", path));
      doc.references.emplace(key, std::move(e));
    }
  } else {
    r.fail("/references", "expected object");
  }

  const json* paras = r.array(j, "paragraphs", "");
  if (!paras) {
    r.fail("/paragraphs", "expected array");
    return doc;
  }
  for (std::size_t pi = 0; pi < paras->size(); ++pi) {
    const json& pj = (*paras)[pi];
    const std::string path = "/paragraphs/" + std::to_string(pi);
    Paragraph para;
    para.para_id = pj.contains("para_id") ? r.str(pj, "para_id", path) : "p" + std::to_string(pi);
    const json* sents = r.array(pj, "sentences", path);
    if (!sents) {
      r.fail(path + "/sentences", "expected array of strings");
      continue;
    }
    std::size_t cursor = 0;
    for (std::size_t si = 0; si < sents->size(); ++si) {
      const json& s = (*sents)[si];
      if (!s.is_string()) {
        r.fail(path + "/sentences/" + std::to_string(si), "expected string");
        continue;
      }
      std::string norm = text::normalize_whitespace(s.get<std::string>());
      if (norm.empty()) continue;
      if (!para.text.empty()) {
        para.text.push_back(' ');
        ++cursor;
      }
      const std::size_t len = text::cp_length(norm);
      para.sentences.push_back({cursor, cursor + len});
      para.text += norm;
      cursor += len;
    }
    if (const json* cites = r.array(pj, "citations", path)) {
      for (std::size_t ci = 0; ci < cites->size(); ++ci) {
        const json& cj = (*cites)[ci];
        const std::string cpath = path + "/citations/" + std::to_string(ci);
        CitationSpan c;
        c.span_id = cj.contains("span_id") ? r.str(cj, "span_id", cpath)
                                           : para.para_id + "-c" + std::to_string(ci);
        c.citation_mark = text::normalize_whitespace(r.str(cj, "citation_mark", cpath));
        c.ref_id = r.str(cj, "ref_id", cpath);
        auto range = cj.contains("sentence_range")
                         ? r.pair(cj["sentence_range"], cpath + "/sentence_range")
                         : std::nullopt;
        const std::string span = text::normalize_whitespace(r.str(cj, "text", cpath));
        if (!range || span.empty() || range->second >= para.sentences.size() ||
            range->first > range->second) {
          r.fail(cpath, "citation needs a valid sentence_range and non-empty text");
          continue;
        }
        c.first_sentence = range->first;
        c.last_sentence = range->second;
        const std::size_t lo = para.sentences[c.first_sentence].begin;
        const std::size_t hi = para.sentences[c.last_sentence].end;
        const std::string extent = text::cp_slice(para.text, lo, hi);
        const auto byte_pos = extent.find(span);
        if (byte_pos == std::string::npos) {
          r.fail(cpath + "/text", "span text not found in its sentence range");
          continue;
        }
        const std::size_t begin = lo + text::cp_length(std::string_view(extent).substr(0, byte_pos));
        c.chars = {begin, begin + text::cp_length(span)};
        para.citations.push_back(std::move(c));
      }
    }
    doc.paragraphs.push_back(std::move(para));
  }
  return doc;
}

}  // namespace

Corpus ingest_raw(std::istream& in) {
  std::vector<Document> docs;
  std::vector<Issue> issues;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string tag = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      issues.push_back({tag, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    const std::size_t before = issues.size();
    Document doc = ingest_record(j, tag, issues);
    {
      // Semantic checks run even after schema problems so one pass reports both.
      auto more = validate(doc);
      issues.insert(issues.end(), more.begin(), more.end());
      if (!seen.insert(doc.paper_id).second) {
        issues.push_back({doc.paper_id, "/paper_id", "duplicate paper_id"});
      }
    }
    if (issues.size() == before) docs.push_back(std::move(doc));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return Corpus(std::move(docs));
}

Corpus ingest_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open raw export " + path.string());
  return ingest_raw(in);
}

}  // namespace citeforge::corpus
