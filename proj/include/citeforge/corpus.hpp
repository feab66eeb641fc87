#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "citeforge/errors.hpp"

namespace citeforge::corpus {

enum class Partition { kTrain, kDistant, kTest };

std::string_view to_string(Partition p);
std::optional<Partition> parse_partition(std::string_view s);

/// Half-open code-point range into a paragraph's text.
struct TextRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TextRange&) const = default;
};

struct CitationSpan {
  std::string span_id;
  std::size_t first_sentence = 0;  // inclusive
  std::size_t last_sentence = 0;   // inclusive
  TextRange chars;
  std::string citation_mark;
  std::string ref_id;
  bool operator==(const CitationSpan&) const = default;
};

struct Paragraph {
  std::string para_id;
  std::string text;
  std::vector<TextRange> sentences;
  std::vector<CitationSpan> citations;

  std::string slice(TextRange r) const;
  std::string sentence(std::size_t i) const { return slice(sentences.at(i)); }
  std::string span_text(const CitationSpan& c) const { return slice(c.chars); }
  bool operator==(const Paragraph&) const = default;
};

struct ReferenceEntry {
  std::string ref_id;
  std::string citation_mark;
  std::string title;
  std::string abstract;
  bool operator==(const ReferenceEntry&) const = default;
};

struct Document {
  std::string paper_id;
  Partition partition = Partition::kTrain;  // original label, kept as provenance
  std::string intro_text;
  std::vector<Paragraph> paragraphs;
  std::map<std::string, ReferenceEntry> references;
  // Set by merge_training(); not part of the on-disk record.
  bool training = false;

  std::size_t citation_count() const;
  bool operator==(const Document&) const = default;
};

/// Location of one citation inside a document.
struct SpanLocation {
  std::size_t paragraph = 0;
  std::size_t citation = 0;
};

std::optional<SpanLocation> find_span(const Document& doc, std::string_view span_id);

struct PartitionCounts {
  std::size_t papers = 0;
  std::size_t citations = 0;
  bool operator==(const PartitionCounts&) const = default;
};

/// Immutable collection of validated documents with a paper_id index.
class Corpus {
 public:
  Corpus() = default;
  /// Throws ValidationError on duplicate paper ids.
  explicit Corpus(std::vector<Document> docs);

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const Document* find(std::string_view paper_id) const;

  /// Per-partition counts, always containing all three partitions.
  std::map<Partition, PartitionCounts> counts() const;
  PartitionCounts totals() const;

  bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// All schema and referential problems of one document (empty when valid).
std::vector<Issue> validate(const Document& doc);

using PartitionFilter = std::optional<std::set<Partition>>;

/// Reads the line-delimited corpus format. Every record is validated; all
/// issues are reported together in one ValidationError.
Corpus read_corpus(std::istream& in, const PartitionFilter& filter = std::nullopt);
Corpus load_corpus(const std::filesystem::path& path, const PartitionFilter& filter = std::nullopt);

void write_corpus(const Corpus& corpus, std::ostream& out);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Training view: train + distant documents tagged `training`, test excluded.
Corpus merge_training(const Corpus& corpus);

/// Test partition only.
Corpus test_split(const Corpus& corpus);

/// Converts the raw sentence-list export (see README, "Raw ingest format")
/// into the canonical corpus: whitespace is normalized, paragraph text is the
/// sentences joined by single spaces, and offsets are computed from that.
Corpus ingest_raw(std::istream& in);
Corpus ingest_raw(const std::filesystem::path& path);

}  // namespace citeforge::corpus
