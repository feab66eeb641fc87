#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace citeforge::nn {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  std::string name;
  Matrix value;
  std::size_t index = 0;  // position in its ParameterSet
};

/// Owns the trainable tensors of a model. Addresses are stable.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init);
  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Per-parameter gradient accumulators, shaped like the ParameterSet.
class GradStore {
 public:
  explicit GradStore(const ParameterSet& params);
  Matrix& operator[](std::size_t i) { return grads_[i]; }
  const Matrix& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const noexcept { return grads_.size(); }
  void zero();
  double squared_norm() const;
  void scale(float s);

 private:
  std::vector<Matrix> grads_;
};

Matrix xavier(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);
Matrix normal(Eigen::Index rows, Eigen::Index cols, float stddev, std::mt19937_64& rng);

struct Var {
  std::uint32_t id = 0;
};

/// Define-by-run computation graph over row-major float matrices.
///
/// Built with a GradStore, each op records a backward closure and
/// backward() accumulates parameter gradients into the store. Built without
/// one, nothing is recorded and the graph is a plain forward evaluator; it
/// then only reads parameters, so one model can serve concurrent graphs.
class Graph {
 public:
  explicit Graph(GradStore* grads = nullptr) : grads_(grads) {}

  Var param(const Parameter& p);
  Var constant(Matrix m);
  const Matrix& value(Var v) const;

  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast 1 x n over rows
  Var add_constant(Var a, const Matrix& c);
  Var scale(Var a, float s);
  Var relu(Var a);
  Var layer_norm(Var x, Var gain, Var bias, float eps = 1e-5f);
  /// Row-wise softmax; with `causal`, row i only sees columns <= i.
  Var softmax_rows(Var x, bool causal);
  Var slice_cols(Var x, Eigen::Index start, Eigen::Index count);
  Var concat_cols(std::span<const Var> parts);
  Var embedding(const Parameter& table, std::span<const int> ids);
  /// Mean negative log-likelihood of `targets` under row-wise softmax(logits).
  Var cross_entropy(Var logits, std::span<const int> targets);

  void backward(Var loss);
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;  // parameter value, not copied
    Matrix grad;
    std::ptrdiff_t param = -1;
    std::function<void()> back;
  };

  bool recording() const noexcept { return grads_ != nullptr; }
  Var push(Matrix value, std::function<void()> back = {});
  Matrix& grad(std::uint32_t id);
  bool has_grad(std::uint32_t id) const { return nodes_[id].grad.size() > 0; }
  const Matrix& val(std::uint32_t id) const {
    return nodes_[id].ref ? *nodes_[id].ref : nodes_[id].value;
  }

  GradStore* grads_;
  std::vector<Node> nodes_;
};

}  // namespace citeforge::nn
