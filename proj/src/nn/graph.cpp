#include "citeforge/nn/graph.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace citeforge::nn {

Parameter& ParameterSet::add(std::string name, Matrix init) {
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->value = std::move(init);
  p->index = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

GradStore::GradStore(const ParameterSet& params) {
  grads_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
  }
}

void GradStore::zero() {
  for (auto& g : grads_) g.setZero();
}

double GradStore::squared_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) s += static_cast<double>(g.squaredNorm());
  return s;
}

void GradStore::scale(float s) {
  for (auto& g : grads_) g *= s;
}

Matrix xavier(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const float limit = std::sqrt(6.0f / static_cast<float>(rows + cols));
  std::uniform_real_distribution<float> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix normal(Eigen::Index rows, Eigen::Index cols, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Var Graph::push(Matrix value, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  if (recording()) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Matrix& Graph::grad(std::uint32_t id) {
  auto& n = nodes_[id];
  if (n.grad.size() == 0) {
    const auto& v = val(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

const Matrix& Graph::value(Var v) const { return val(v.id); }

Var Graph::param(const Parameter& p) {
  Node n;
  n.ref = &p.value;
  n.param = static_cast<std::ptrdiff_t>(p.index);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(Matrix m) { return push(std::move(m)); }

Var Graph::matmul(Var a, Var b) {
  Matrix out = val(a.id) * val(b.id);
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, b, o] {
    const Matrix& g = nodes_[o].grad;
    grad(a.id).noalias() += g * val(b.id).transpose();
    grad(b.id).noalias() += val(a.id).transpose() * g;
  });
}

Var Graph::matmul_bt(Var a, Var b) {
  Matrix out = val(a.id) * val(b.id).transpose();
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, b, o] {
    const Matrix& g = nodes_[o].grad;
    grad(a.id).noalias() += g * val(b.id);
    grad(b.id).noalias() += g.transpose() * val(a.id);
  });
}

Var Graph::add(Var a, Var b) {
  Matrix out = val(a.id) + val(b.id);
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, b, o] {
    grad(a.id) += nodes_[o].grad;
    grad(b.id) += nodes_[o].grad;
  });
}

Var Graph::add_row(Var a, Var row) {
  Matrix out = val(a.id).rowwise() + val(row.id).row(0);
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, row, o] {
    grad(a.id) += nodes_[o].grad;
    grad(row.id) += nodes_[o].grad.colwise().sum();
  });
}

Var Graph::add_constant(Var a, const Matrix& c) {
  Matrix out = val(a.id) + c;
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, o] { grad(a.id) += nodes_[o].grad; });
}

Var Graph::scale(Var a, float s) {
  Matrix out = val(a.id) * s;
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, s, o] { grad(a.id) += nodes_[o].grad * s; });
}

Var Graph::relu(Var a) {
  Matrix out = val(a.id).cwiseMax(0.0f);
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, a, o] {
    const Matrix& x = val(a.id);
    grad(a.id) += (x.array() > 0.0f).select(nodes_[o].grad, 0.0f);
  });
}

Var Graph::layer_norm(Var x, Var gain, Var bias, float eps) {
  const Matrix& in = val(x.id);
  const Eigen::Index n = in.cols();
  Matrix xhat(in.rows(), n);
  Eigen::VectorXf inv_std(in.rows());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const float mean = in.row(r).mean();
    const float var = (in.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0f / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = (xhat.array().rowwise() * val(gain.id).row(0).array()).rowwise() +
               val(bias.id).row(0).array();
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, x, gain, bias, o, xhat = std::move(xhat),
                               inv_std = std::move(inv_std), n] {
    const Matrix& g = nodes_[o].grad;
    grad(gain.id) += (g.array() * xhat.array()).colwise().sum().matrix();
    grad(bias.id) += g.colwise().sum();
    Matrix dxhat = g.array().rowwise() * val(gain.id).row(0).array();
    Matrix& gx = grad(x.id);
    const float inv_n = 1.0f / static_cast<float>(n);
    for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
      const float mean_d = dxhat.row(r).sum() * inv_n;
      const float mean_dx = dxhat.row(r).dot(xhat.row(r)) * inv_n;
      gx.row(r).array() +=
          inv_std(r) * (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx);
    }
  });
}

Var Graph::softmax_rows(Var x, bool causal) {
  const Matrix& in = val(x.id);
  Matrix out = Matrix::Zero(in.rows(), in.cols());
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    const Eigen::Index width = causal ? std::min<Eigen::Index>(r + 1, in.cols()) : in.cols();
    if (width == 0) continue;
    const auto row = in.row(r).head(width);
    const float mx = row.maxCoeff();
    auto e = (row.array() - mx).exp();
    out.row(r).head(width) = e / e.sum();
  }
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, x, o] {
    const Matrix& y = nodes_[o].value;
    const Matrix& g = nodes_[o].grad;
    Eigen::VectorXf dots = (g.array() * y.array()).rowwise().sum();
    grad(x.id).array() += y.array() * (g.array().colwise() - dots.array());
  });
}

Var Graph::slice_cols(Var x, Eigen::Index start, Eigen::Index count) {
  Matrix out = val(x.id).middleCols(start, count);
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(out), [this, x, start, count, o] {
    grad(x.id).middleCols(start, count) += nodes_[o].grad;
  });
}

Var Graph::concat_cols(std::span<const Var> parts) {
  assert(!parts.empty());
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += val(p.id).cols();
  Matrix out(val(parts[0].id).rows(), cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, val(p.id).cols()) = val(p.id);
    at += val(p.id).cols();
  }
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(out), [this, ids = std::move(ids), o] {
    Eigen::Index at = 0;
    for (const auto& p : ids) {
      const auto c = val(p.id).cols();
      grad(p.id) += nodes_[o].grad.middleCols(at, c);
      at += c;
    }
  });
}

Var Graph::embedding(const Parameter& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
  }
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  std::vector<int> rows(ids.begin(), ids.end());
  const std::size_t pidx = table.index;
  return push(std::move(out), [this, rows = std::move(rows), pidx, o] {
    Matrix& g = (*grads_)[pidx];
    const Matrix& go = nodes_[o].grad;
    for (std::size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += go.row(static_cast<Eigen::Index>(i));
  });
}

Var Graph::cross_entropy(Var logits, std::span<const int> targets) {
  const Matrix& z = val(logits.id);
  if (static_cast<std::size_t>(z.rows()) != targets.size() || targets.empty()) {
    throw std::invalid_argument("cross_entropy: logits rows must match non-empty targets");
  }
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const float mx = z.row(r).maxCoeff();
    auto e = (z.row(r).array() - mx).exp();
    const float sum = e.sum();
    probs.row(r) = e / sum;
    loss -= static_cast<double>(z(r, targets[r]) - mx - std::log(sum));
  }
  const float inv = 1.0f / static_cast<float>(targets.size());
  Matrix out(1, 1);
  out(0, 0) = static_cast<float>(loss) * inv;
  const auto o = static_cast<std::uint32_t>(nodes_.size());
  std::vector<int> tg(targets.begin(), targets.end());
  return push(std::move(out), [this, logits, o, probs = std::move(probs), tg = std::move(tg), inv] {
    const float g = nodes_[o].grad(0, 0) * inv;
    Matrix d = probs * g;
    for (std::size_t r = 0; r < tg.size(); ++r) d(static_cast<Eigen::Index>(r), tg[r]) -= g;
    grad(logits.id) += d;
  });
}

void Graph::backward(Var loss) {
  if (!recording()) throw std::logic_error("backward on a graph built without gradients");
  grad(loss.id).setOnes();
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    auto& n = nodes_[i];
    if (n.grad.size() == 0) continue;
    if (n.back) n.back();
    if (n.param >= 0) (*grads_)[static_cast<std::size_t>(n.param)] += n.grad;
  }
}

}  // namespace citeforge::nn
