#include "citeforge/nn/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace citeforge::nn {

namespace {

Matrix sinusoids(Eigen::Index len, Eigen::Index d) {
  Matrix pe(len, d);
  for (Eigen::Index pos = 0; pos < len; ++pos) {
    for (Eigen::Index i = 0; i < d; i += 2) {
      const double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pe(pos, i) = static_cast<float>(std::sin(static_cast<double>(pos) * rate));
      if (i + 1 < d) pe(pos, i + 1) = static_cast<float>(std::cos(static_cast<double>(pos) * rate));
    }
  }
  return pe;
}

Matrix zeros_row(int n) { return Matrix::Zero(1, n); }
Matrix ones_row(int n) { return Matrix::Ones(1, n); }

}  // namespace

Transformer::Transformer(TransformerDims dims, std::uint64_t seed) : dims_(dims) {
  if (dims.vocab <= 0 || dims.d_model <= 0 || dims.heads <= 0 || dims.d_model % dims.heads != 0 ||
      dims.ff <= 0 || dims.encoder_layers < 0 || dims.decoder_layers <= 0) {
    throw std::invalid_argument("invalid transformer dimensions");
  }
  std::mt19937_64 rng(seed);
  embed_ = &params_.add("embed", normal(dims.vocab, dims.d_model,
                                        1.0f / std::sqrt(static_cast<float>(dims.d_model)), rng));
  for (int l = 0; l < dims.encoder_layers; ++l) {
    const std::string p = "enc" + std::to_string(l) + ".";
    EncoderLayer layer;
    layer.n1 = make_norm(p + "n1");
    layer.self = make_attention(p + "self", rng);
    layer.n2 = make_norm(p + "n2");
    layer.ff = make_ff(p + "ff", rng);
    enc_.push_back(layer);
  }
  enc_final_ = make_norm("enc.final");
  for (int l = 0; l < dims.decoder_layers; ++l) {
    const std::string p = "dec" + std::to_string(l) + ".";
    DecoderLayer layer;
    layer.n1 = make_norm(p + "n1");
    layer.self = make_attention(p + "self", rng);
    layer.n2 = make_norm(p + "n2");
    layer.cross = make_attention(p + "cross", rng);
    layer.n3 = make_norm(p + "n3");
    layer.ff = make_ff(p + "ff", rng);
    dec_.push_back(layer);
  }
  dec_final_ = make_norm("dec.final");
}

Transformer::Attention Transformer::make_attention(const std::string& p, std::mt19937_64& rng) {
  const int d = dims_.d_model;
  Attention a{};
  a.wq = &params_.add(p + ".wq", xavier(d, d, rng));
  a.bq = &params_.add(p + ".bq", zeros_row(d));
  a.wk = &params_.add(p + ".wk", xavier(d, d, rng));
  a.bk = &params_.add(p + ".bk", zeros_row(d));
  a.wv = &params_.add(p + ".wv", xavier(d, d, rng));
  a.bv = &params_.add(p + ".bv", zeros_row(d));
  a.wo = &params_.add(p + ".wo", xavier(d, d, rng));
  a.bo = &params_.add(p + ".bo", zeros_row(d));
  return a;
}

Transformer::Norm Transformer::make_norm(const std::string& p) {
  return {&params_.add(p + ".gain", ones_row(dims_.d_model)),
          &params_.add(p + ".bias", zeros_row(dims_.d_model))};
}

Transformer::FeedForward Transformer::make_ff(const std::string& p, std::mt19937_64& rng) {
  FeedForward f{};
  f.w1 = &params_.add(p + ".w1", xavier(dims_.d_model, dims_.ff, rng));
  f.b1 = &params_.add(p + ".b1", zeros_row(dims_.ff));
  f.w2 = &params_.add(p + ".w2", xavier(dims_.ff, dims_.d_model, rng));
  f.b2 = &params_.add(p + ".b2", zeros_row(dims_.d_model));
  return f;
}

Var Transformer::embed(Graph& g, std::span<const int> ids) const {
  const Var e = g.embedding(*embed_, ids);
  const Var scaled = g.scale(e, std::sqrt(static_cast<float>(dims_.d_model)));
  return g.add_constant(scaled, sinusoids(static_cast<Eigen::Index>(ids.size()), dims_.d_model));
}

Var Transformer::norm(Graph& g, const Norm& n, Var x) const {
  return g.layer_norm(x, g.param(*n.gain), g.param(*n.bias));
}

Var Transformer::feed_forward(Graph& g, const FeedForward& f, Var x) const {
  const Var h = g.relu(g.add_row(g.matmul(x, g.param(*f.w1)), g.param(*f.b1)));
  return g.add_row(g.matmul(h, g.param(*f.w2)), g.param(*f.b2));
}

Var Transformer::attend(Graph& g, const Attention& a, Var q_in, Var kv_in, bool causal) const {
  const Var q = g.add_row(g.matmul(q_in, g.param(*a.wq)), g.param(*a.bq));
  const Var k = g.add_row(g.matmul(kv_in, g.param(*a.wk)), g.param(*a.bk));
  const Var v = g.add_row(g.matmul(kv_in, g.param(*a.wv)), g.param(*a.bv));
  const int dh = dims_.d_model / dims_.heads;
  const float inv = 1.0f / std::sqrt(static_cast<float>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(dims_.heads));
  for (int h = 0; h < dims_.heads; ++h) {
    const Var qh = g.slice_cols(q, h * dh, dh);
    const Var kh = g.slice_cols(k, h * dh, dh);
    const Var vh = g.slice_cols(v, h * dh, dh);
    const Var w = g.softmax_rows(g.scale(g.matmul_bt(qh, kh), inv), causal);
    heads.push_back(g.matmul(w, vh));
  }
  const Var cat = dims_.heads == 1 ? heads[0] : g.concat_cols(heads);
  return g.add_row(g.matmul(cat, g.param(*a.wo)), g.param(*a.bo));
}

Var Transformer::encode(Graph& g, std::span<const int> src) const {
  if (src.empty()) throw std::invalid_argument("encode: empty source");
  Var x = embed(g, src);
  for (const auto& l : enc_) {
    const Var n1 = norm(g, l.n1, x);
    x = g.add(x, attend(g, l.self, n1, n1, false));
    x = g.add(x, feed_forward(g, l.ff, norm(g, l.n2, x)));
  }
  return norm(g, enc_final_, x);
}

Var Transformer::decode(Graph& g, Var memory, std::span<const int> prefix) const {
  Var x = embed(g, prefix);
  for (const auto& l : dec_) {
    const Var n1 = norm(g, l.n1, x);
    x = g.add(x, attend(g, l.self, n1, n1, true));
    x = g.add(x, attend(g, l.cross, norm(g, l.n2, x), memory, false));
    x = g.add(x, feed_forward(g, l.ff, norm(g, l.n3, x)));
  }
  return g.matmul_bt(norm(g, dec_final_, x), g.param(*embed_));
}

Var Transformer::loss(Graph& g, std::span<const int> src, std::span<const int> target, int bos) const {
  std::vector<int> prefix;
  prefix.reserve(target.size());
  prefix.push_back(bos);
  prefix.insert(prefix.end(), target.begin(), target.end() - 1);
  const Var memory = encode(g, src);
  return g.cross_entropy(decode(g, memory, prefix), target);
}

namespace {

Eigen::VectorXf last_log_probs(const Matrix& logits) {
  const auto row = logits.row(logits.rows() - 1);
  const float mx = row.maxCoeff();
  const float lse = mx + std::log((row.array() - mx).exp().sum());
  return (row.array() - lse).transpose();
}

}  // namespace

std::vector<int> Transformer::generate(std::span<const int> src, int bos, int eos, std::size_t max_len,
                                       std::size_t beam_size) const {
  Matrix memory;
  {
    Graph g;
    memory = g.value(encode(g, src));
  }
  auto step = [&](const std::vector<int>& prefix) {
    Graph g;
    const Var mem = g.constant(memory);
    return last_log_probs(g.value(decode(g, mem, prefix)));
  };

  if (beam_size <= 1) {
    std::vector<int> seq{bos};
    while (seq.size() <= max_len) {
      const auto lp = step(seq);
      Eigen::Index best = 0;
      lp.maxCoeff(&best);
      if (static_cast<int>(best) == eos) break;
      seq.push_back(static_cast<int>(best));
    }
    return {seq.begin() + 1, seq.end()};
  }

  struct Beam {
    std::vector<int> seq;
    double logp = 0.0;
    bool done = false;
    double score() const { return logp / static_cast<double>(std::max<std::size_t>(seq.size() - 1, 1)); }
  };
  std::vector<Beam> beams{{{bos}, 0.0, false}};
  for (std::size_t t = 0; t < max_len; ++t) {
    std::vector<Beam> next;
    for (const auto& b : beams) {
      if (b.done) {
        next.push_back(b);
        continue;
      }
      const auto lp = step(b.seq);
      std::vector<int> order(static_cast<std::size_t>(lp.size()));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      const auto k = std::min(beam_size, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](int a, int c) { return lp(a) > lp(c) || (lp(a) == lp(c) && a < c); });
      for (std::size_t i = 0; i < k; ++i) {
        Beam nb = b;
        nb.logp += lp(order[i]);
        if (order[i] == eos) {
          nb.done = true;
        } else {
          nb.seq.push_back(order[i]);
        }
        next.push_back(std::move(nb));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) { return a.score() > b.score(); });
    if (next.size() > beam_size) next.resize(beam_size);
    beams = std::move(next);
    if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;
  }
  const auto& best = beams.front();
  return {best.seq.begin() + 1, best.seq.end()};
}

void Transformer::write_weights(std::ostream& out) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& m = params_[i].value;
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  }
}

void Transformer::read_weights(std::istream& in) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& m = params_[i].value;
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw std::runtime_error("weights file is shorter than the model");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("weights file is longer than the model");
}

}  // namespace citeforge::nn
