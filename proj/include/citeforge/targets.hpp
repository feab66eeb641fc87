#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeforge/corpus.hpp"

namespace citeforge::targets {

enum class Mode { kInfilling, kContextualized };

std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct Source {
  std::string paper_id;
  std::string para_id;
  std::string span_id;
  bool operator==(const Source&) const = default;
};

/// Sentences around one citation, limited to its paragraph.
///
/// `left` and `right` hold whole sentences (at most `width` each). When the
/// citation starts or ends mid-sentence, the remainder of that sentence is kept
/// in `left_partial` / `right_partial` so nothing between the outer sentences
/// and the citation is lost.
struct ContextWindow {
  std::vector<std::string> left;
  std::string left_partial;
  std::string citation_text;
  std::string right_partial;
  std::vector<std::string> right;
  Source source;
  std::size_t width = 0;
  corpus::TextRange extent;  // paragraph code points covered by the window

  std::string left_text() const;
  std::string right_text() const;
  /// left, citation, right joined by single spaces.
  std::string reassembled() const;
};

inline constexpr std::size_t kDefaultWidth = 3;
inline constexpr std::size_t kWholeParagraph = std::numeric_limits<std::size_t>::max();

/// Throws NotFoundError for an unknown span, ArgumentError for width 0.
ContextWindow extract_context_window(const corpus::Document& doc, std::string_view span_id,
                                     std::size_t width = kDefaultWidth);

/// Context with the citation replaced by `[MASK]`. Other citations stay.
std::string mask_window(const ContextWindow& window);

/// Whole paragraph containing the span, with only that span masked.
std::string mask_paragraph(const corpus::Document& doc, std::string_view span_id);

/// " </s> " between the five input fields.
inline constexpr std::string_view kFieldJoin = " </s> ";

/// Code points that can never be truncated: the four field separators, the
/// masked paragraph, the citation mark and the title.
std::size_t protected_size(std::string_view masked_paragraph, const corpus::ReferenceEntry& ref);

/// intro </s> masked paragraph </s> mark </s> title </s> abstract, at most
/// `budget` code points long. Over budget, the intro is cut to its leading
/// part first; if that is not enough it is dropped and the abstract keeps only
/// its leading part. Throws BudgetError when `budget < protected_size(...)`.
std::string build_input(const corpus::Document& doc, std::string_view masked_paragraph,
                        const corpus::ReferenceEntry& ref, std::size_t budget);

std::string build_target(const ContextWindow& window, Mode mode);

struct GenerationExample {
  std::string example_id;
  Mode mode = Mode::kInfilling;
  std::string input_text;
  std::string target_text;
  Source source;
  bool operator==(const GenerationExample&) const = default;
};

std::string example_id_for(const Source& s);

struct BuildOptions {
  std::size_t width = kDefaultWidth;
  std::size_t budget = 16384;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

struct BuildReport {
  std::size_t emitted = 0;
  std::size_t skipped = 0;
  std::vector<Issue> failures;
};

/// One example per citation span, ordered by a seeded shuffle of the corpus
/// order. Failing spans are skipped and recorded in `report`.
std::vector<GenerationExample> build_dataset(const corpus::Corpus& corpus, Mode mode,
                                             const BuildOptions& opts, BuildReport* report = nullptr);

struct PairedDataset {
  std::vector<GenerationExample> infilling;
  std::vector<GenerationExample> contextualized;
  BuildReport report;
};

/// Both modes from identical windows; element i of each vector shares
/// example_id and input_text.
PairedDataset build_paired(const corpus::Corpus& corpus, const BuildOptions& opts);

enum class ExtractionStatus { kOk, kMissingSeparator, kExtraSeparator, kEmptyCitation };

std::string_view to_string(ExtractionStatus s);
std::optional<ExtractionStatus> parse_status(std::string_view s);

struct GenerationOutput {
  std::string example_id;
  std::string raw_text;
  std::string extracted_citation;
  ExtractionStatus status = ExtractionStatus::kOk;
  bool operator==(const GenerationOutput&) const = default;
};

/// Recovers the citation from decoded text. Contextualized outputs use the
/// span between the first two `[SEP]` tokens; degenerate outputs get a
/// non-ok status instead of an error.
GenerationOutput extract_citation(std::string_view raw_text, Mode mode, std::string example_id = {});

// Line-delimited JSON files.
void write_examples(const std::vector<GenerationExample>& examples, std::ostream& out);
void save_examples(const std::vector<GenerationExample>& examples, const std::filesystem::path& path);
std::vector<GenerationExample> read_examples(std::istream& in);
std::vector<GenerationExample> load_examples(const std::filesystem::path& path);

void write_outputs(const std::vector<GenerationOutput>& outputs, std::ostream& out);
void save_outputs(const std::vector<GenerationOutput>& outputs, const std::filesystem::path& path);
std::vector<GenerationOutput> read_outputs(std::istream& in);
std::vector<GenerationOutput> load_outputs(const std::filesystem::path& path);

}  // namespace citeforge::targets
