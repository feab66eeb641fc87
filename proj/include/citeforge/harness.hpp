#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeforge/errors.hpp"
#include "citeforge/nn/transformer.hpp"
#include "citeforge/targets.hpp"
#include "citeforge/tokenizer.hpp"
#include "json.hpp"

namespace citeforge::harness {

enum class OverflowPolicy { kError, kTruncate };

struct HarnessConfig {
  std::string preset = "tiny";
  int d_model = 64;
  int heads = 4;
  int ff = 256;
  int encoder_layers = 2;
  int decoder_layers = 2;

  std::size_t min_piece_count = 1;
  std::size_t max_input_len = 512;   // tokens, EOS included
  std::size_t max_target_len = 256;  // tokens, EOS included
  OverflowPolicy target_overflow = OverflowPolicy::kError;
  std::size_t max_decode_len = 256;
  std::size_t beam_size = 1;

  std::uint64_t seed = 1;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  float learning_rate = 2e-3f;
  std::size_t warmup_steps = 50;
  std::string schedule = "constant";  // constant | linear | inverse_sqrt
  float clip_norm = 1.0f;
  std::size_t eval_every = 10;  // epochs between validation passes

  /// Stop once training-set exact match reaches this value (checked at
  /// validation points); 0 disables.
  double stop_at_train_exact = 0.0;

  /// "tiny" or "small"; throws ArgumentError otherwise.
  static HarnessConfig from_preset(std::string_view name);

  /// Throws ArgumentError on an unusable configuration.
  void validate() const;

  /// SHA-256 over the fields that shape the model and its tokenization.
  std::string fingerprint() const;

  nlohmann::ordered_json to_json() const;
  /// Fields missing from `j` keep the preset defaults named by j["preset"].
  static HarnessConfig from_json(const nlohmann::json& j);
};

struct LossRecord {
  std::size_t step = 0;
  std::string split;  // "train" or "validation"
  double loss = 0.0;
};

struct Checkpoint {
  HarnessConfig config;
  targets::Mode mode = targets::Mode::kInfilling;
  Vocabulary vocab;
  std::shared_ptr<nn::Transformer> model;
  std::size_t step = 0;  // optimizer step of the kept weights
  nlohmann::ordered_json validation;
  std::vector<LossRecord> log;
  std::size_t truncated_targets = 0;
};

using Progress = std::function<void(const LossRecord&)>;

/// Trains a fresh model and returns the weights with the lowest validation
/// loss (training loss when `validation` is empty). Throws ArgumentError on
/// an empty or mixed-mode training set, and on input or target overflow
/// under the error policy.
Checkpoint train(const HarnessConfig& config, const std::vector<targets::GenerationExample>& train_set,
                 const std::vector<targets::GenerationExample>& validation, const Progress& progress = {});

/// Decodes one input. Throws ArgumentError when the input is longer than
/// max_input_len tokens. Thread-safe on a shared checkpoint.
std::string generate(const Checkpoint& ckpt, std::string_view input_text);

struct BatchFailure {
  std::string example_id;
  std::string message;
};

/// generate + extract_citation per example, in input order. An example that
/// cannot be decoded gets empty raw text (and therefore a non-ok status);
/// the reason goes to `failures`.
std::vector<targets::GenerationOutput> generate_batch(const Checkpoint& ckpt,
                                                      const std::vector<targets::GenerationExample>& examples,
                                                      std::vector<BatchFailure>* failures = nullptr);

/// Writes config.json, vocab.json, weights.bin and metrics.jsonl to `dir`.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
/// Throws IoError if files are missing, the fingerprint does not match the
/// stored config, or the weights have the wrong size.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Fraction of examples whose extracted citation equals the citation
/// extracted from the reference target.
double exact_match(const Checkpoint& ckpt, const std::vector<targets::GenerationExample>& examples);

}  // namespace citeforge::harness
