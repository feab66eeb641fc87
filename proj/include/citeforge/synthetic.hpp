#pragma once

#include <cstdint>
#include <map>

#include "citeforge/corpus.hpp"

namespace citeforge::synthetic {

// Templated related-work corpora with known shape. Citation sentences paraphrase
// their reference abstract, so a small model can learn to copy from the input.
struct Options {
  std::uint64_t seed = 1;
  std::map<corpus::Partition, corpus::PartitionCounts> shape;
  std::size_t max_citations_per_paragraph = 3;
  std::size_t min_sentences = 4;
  std::size_t max_sentences = 7;
  // Fraction (in percent) of citations that start mid-sentence after a lead-in
  // clause, and of those that span two sentences.
  unsigned partial_percent = 30;
  unsigned multi_sentence_percent = 10;
};

/// Citations are spread evenly over a partition's papers; a paper may end up
/// with none. Throws ArgumentError when a partition has citations but no papers.
corpus::Corpus generate(const Options& opts);

/// Single-partition convenience: `papers` train documents with `citations`
/// spans in total.
corpus::Corpus generate_train(std::size_t papers, std::size_t citations, std::uint64_t seed,
                              unsigned partial_percent = 30, unsigned multi_sentence_percent = 10);

}  // namespace citeforge::synthetic
