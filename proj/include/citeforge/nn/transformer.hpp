#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "citeforge/nn/graph.hpp"

namespace citeforge::nn {

struct TransformerDims {
  int vocab = 0;
  int d_model = 64;
  int heads = 4;
  int ff = 256;
  int encoder_layers = 2;
  int decoder_layers = 2;
};

/// Pre-LayerNorm encoder-decoder Transformer with sinusoidal positions and
/// one embedding table shared by encoder input, decoder input and the output
/// projection.
class Transformer {
 public:
  Transformer(TransformerDims dims, std::uint64_t seed);

  const TransformerDims& dims() const noexcept { return dims_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  /// Encoder states, one row per source token.
  Var encode(Graph& g, std::span<const int> src) const;
  /// Next-token logits, one row per decoder input token.
  Var decode(Graph& g, Var memory, std::span<const int> prefix) const;

  /// Teacher-forced mean token loss of `target` (which should end in EOS).
  Var loss(Graph& g, std::span<const int> src, std::span<const int> target, int bos) const;

  /// Greedy decode when beam_size <= 1, otherwise length-normalized beam
  /// search. Output excludes BOS and EOS.
  std::vector<int> generate(std::span<const int> src, int bos, int eos, std::size_t max_len,
                            std::size_t beam_size = 1) const;

  /// Raw float32 weights in parameter order.
  void write_weights(std::ostream& out) const;
  void read_weights(std::istream& in);

 private:
  struct Attention {
    Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
  };
  struct Norm {
    Parameter *gain, *bias;
  };
  struct FeedForward {
    Parameter *w1, *b1, *w2, *b2;
  };
  struct EncoderLayer {
    Norm n1, n2;
    Attention self;
    FeedForward ff;
  };
  struct DecoderLayer {
    Norm n1, n2, n3;
    Attention self, cross;
    FeedForward ff;
  };

  TransformerDims dims_;
  ParameterSet params_;
  Parameter* embed_ = nullptr;
  std::vector<EncoderLayer> enc_;
  std::vector<DecoderLayer> dec_;
  Norm enc_final_{}, dec_final_{};

  Attention make_attention(const std::string& prefix, std::mt19937_64& rng);
  Norm make_norm(const std::string& prefix);
  FeedForward make_ff(const std::string& prefix, std::mt19937_64& rng);

  Var embed(Graph& g, std::span<const int> ids) const;
  Var attend(Graph& g, const Attention& a, Var q_in, Var kv_in, bool causal) const;
  Var norm(Graph& g, const Norm& n, Var x) const;
  Var feed_forward(Graph& g, const FeedForward& f, Var x) const;
};

}  // namespace citeforge::nn
