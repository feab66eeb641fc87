#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "citeforge/errors.hpp"
#include "citeforge/nn/transformer.hpp"
#include "citeforge/synthetic.hpp"
#include "citeforge/targets.hpp"
#include "citeforge/tokenizer.hpp"
#include "doctest.h"

using namespace citeforge;
using namespace citeforge::nn;

namespace {

using Build = std::function<Var(Graph&)>;

double forward(const Build& build) {
  Graph g;
  return g.value(build(g))(0, 0);
}

// Central differences over every scalar in `params` (or a strided sample of
// them when `stride` > 1) against the recorded backward pass.
void check_gradients(ParameterSet& params, const Build& build, std::size_t stride = 1, float h = 5e-3f) {
  GradStore grads(params);
  Graph g(&grads);
  g.backward(build(g));
  std::size_t checked = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& value = params[p].value;
    for (Eigen::Index k = 0; k < value.size(); k += static_cast<Eigen::Index>(stride)) {
      float* x = value.data() + k;
      const float saved = *x;
      *x = saved + h;
      const double up = forward(build);
      *x = saved - h;
      const double down = forward(build);
      *x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[p].data()[k];
      CAPTURE(params[p].name);
      CAPTURE(k);
      CHECK(std::abs(numeric - analytic) <= 2e-3 + 3e-2 * std::abs(analytic));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) { return normal(r, c, 0.7f, rng); }

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("gradients of individual ops") {
    std::mt19937_64 rng(1);
    ParameterSet ps;
    auto& a = ps.add("a", random_matrix(3, 4, rng));
    auto& b = ps.add("b", random_matrix(4, 5, rng));
    auto& c = ps.add("c", random_matrix(3, 5, rng));
    auto& row = ps.add("row", random_matrix(1, 5, rng));
    auto& gain = ps.add("gain", random_matrix(1, 5, rng));
    auto& bias = ps.add("bias", random_matrix(1, 5, rng));
    auto& table = ps.add("table", random_matrix(6, 5, rng));
    const std::vector<int> targets{0, 4, 2};
    const std::vector<int> ids{5, 1, 5};
    const Matrix offset = random_matrix(3, 5, rng);

    SUBCASE("matmul, add, add_row, relu") {
      check_gradients(ps, [&](Graph& g) {
        Var x = g.matmul(g.param(a), g.param(b));
        x = g.add(x, g.param(c));
        x = g.add_row(x, g.param(row));
        x = g.relu(g.add_constant(x, offset));
        return g.cross_entropy(g.scale(x, 1.5f), targets);
      });
    }
    SUBCASE("matmul_bt and causal softmax") {
      check_gradients(ps, [&](Graph& g) {
        Var scores = g.matmul_bt(g.param(c), g.param(c));  // 3 x 3
        Var att = g.softmax_rows(scores, true);
        Var x = g.matmul(att, g.param(c));
        return g.cross_entropy(x, targets);
      });
    }
    SUBCASE("softmax without mask and layer norm") {
      check_gradients(ps, [&](Graph& g) {
        Var x = g.softmax_rows(g.matmul(g.param(a), g.param(b)), false);
        x = g.layer_norm(g.add(x, g.param(c)), g.param(gain), g.param(bias));
        return g.cross_entropy(x, targets);
      });
    }
    SUBCASE("slice and concat") {
      check_gradients(ps, [&](Graph& g) {
        Var x = g.param(c);
        std::vector<Var> parts{g.slice_cols(x, 3, 2), g.slice_cols(x, 0, 3)};
        Var y = g.concat_cols(parts);
        return g.cross_entropy(g.add(y, g.param(c)), targets);
      });
    }
    SUBCASE("embedding with repeated ids") {
      check_gradients(ps, [&](Graph& g) {
        Var e = g.embedding(table, ids);
        return g.cross_entropy(g.matmul_bt(e, g.param(table)), targets);
      });
    }
  }

  TEST_CASE("gradients of a small transformer") {
    TransformerDims dims{12, 8, 2, 16, 1, 1};
    Transformer model(dims, 3);
    const std::vector<int> src{4, 7, 9, 3};
    const std::vector<int> tgt{5, 6, 3};
    check_gradients(model.params(), [&](Graph& g) { return model.loss(g, src, tgt, 2); }, 7);
  }

  TEST_CASE("forward-only graphs refuse backward") {
    std::mt19937_64 rng(2);
    ParameterSet ps;
    auto& a = ps.add("a", random_matrix(2, 3, rng));
    Graph g;
    const std::vector<int> t{0, 1};
    Var l = g.cross_entropy(g.param(a), t);
    CHECK_THROWS_AS(g.backward(l), std::logic_error);
  }

  TEST_CASE("meta tokens are single pieces") {
    const auto ps = pieces("left [SEP] Smith (2020) did it. [SEP]right");
    CHECK(std::count(ps.begin(), ps.end(), "[SEP]") == 2);
    const auto masked = pieces("x [MASK] y");
    CHECK(std::count(masked.begin(), masked.end(), "[MASK]") == 1);

    const std::vector<std::string> corpus{"a [SEP] b", "c </s> d [MASK]"};
    const auto vocab = Vocabulary::build(corpus);
    const auto ids = vocab.encode("a [SEP] b");
    CHECK(std::count(ids.begin(), ids.end(), vocab.id("[SEP]")) == 1);
    CHECK(vocab.id("[SEP]") != Vocabulary::kUnk);
    CHECK(vocab.encode("zzz").front() == Vocabulary::kUnk);
  }

  TEST_CASE("decode inverts encode on generated targets") {
    const auto corpus = synthetic::generate_train(4, 40, 9);
    const auto ds = targets::build_paired(corpus, {});
    std::vector<std::string> texts;
    for (const auto& e : ds.contextualized) {
      texts.push_back(e.input_text);
      texts.push_back(e.target_text);
    }
    const auto vocab = Vocabulary::build(texts);
    for (const auto& t : texts) {
      const auto ids = vocab.encode(t);
      CHECK(vocab.decode(ids) == t);
    }
    const auto back = Vocabulary::from_json(vocab.to_json());
    CHECK(back.size() == vocab.size());
    CHECK(back.encode(texts[0]) == vocab.encode(texts[0]));

    auto broken = vocab.to_json();
    std::swap(broken["pieces"][0], broken["pieces"][1]);
    CHECK_THROWS_AS(Vocabulary::from_json(broken), IoError);
  }

  TEST_CASE("weights round-trip and size checks") {
    TransformerDims dims{20, 16, 2, 32, 1, 1};
    Transformer a(dims, 5), b(dims, 6);
    const std::vector<int> src{4, 5, 6, 3};
    std::stringstream ss;
    a.write_weights(ss);
    b.read_weights(ss);
    CHECK(a.generate(src, 2, 3, 12) == b.generate(src, 2, 3, 12));
    CHECK(a.generate(src, 2, 3, 12, 3) == b.generate(src, 2, 3, 12, 3));

    std::stringstream full;
    a.write_weights(full);
    const std::string bytes = full.str();
    std::stringstream shorter(bytes.substr(0, bytes.size() - 4));
    CHECK_THROWS_AS(b.read_weights(shorter), std::runtime_error);
    std::stringstream longer(bytes + "xxxx");
    CHECK_THROWS_AS(b.read_weights(longer), std::runtime_error);
  }

  TEST_CASE("generation is bounded") {
    Transformer m({20, 16, 2, 32, 1, 1}, 8);
    const std::vector<int> src{3};
    for (std::size_t max_len : {0u, 1u, 5u}) {
      CHECK(m.generate(src, 2, 3, max_len).size() <= max_len);
      CHECK(m.generate(src, 2, 3, max_len, 4).size() <= max_len);
    }
    CHECK_THROWS_AS(Transformer({0, 16, 2, 32, 1, 1}, 1), std::invalid_argument);
    CHECK_THROWS_AS(Transformer({10, 15, 2, 32, 1, 1}, 1), std::invalid_argument);
  }
}
