#include "citeforge/kendall.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "citeforge/errors.hpp"

namespace citeforge::humaneval {

namespace {

std::vector<int> distinct_sorted(std::span<const int> v) {
  std::vector<int> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t rank_of(const std::vector<int>& levels, int value) {
  return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), value) - levels.begin());
}

}  // namespace

std::optional<double> kendall_tau_b(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size()) throw ArgumentError("kendall_tau_b: vectors differ in length");
  if (x.size() < 2) throw ArgumentError("kendall_tau_b: need at least two observations");

  const auto xs = distinct_sorted(x);
  const auto ys = distinct_sorted(y);
  const std::size_t rows = xs.size();
  const std::size_t cols = ys.size();
  std::vector<std::int64_t> table(rows * cols, 0);
  for (std::size_t i = 0; i < x.size(); ++i) ++table[rank_of(xs, x[i]) * cols + rank_of(ys, y[i])];

  // suffix(r, c): observations with x-rank >= r and y-rank >= c.
  auto at = [&](std::vector<std::int64_t>& m, std::size_t r, std::size_t c) -> std::int64_t& {
    return m[r * (cols + 1) + c];
  };
  std::vector<std::int64_t> suffix((rows + 1) * (cols + 1), 0);
  for (std::size_t r = rows; r-- > 0;) {
    for (std::size_t c = cols; c-- > 0;) {
      at(suffix, r, c) = table[r * cols + c] + at(suffix, r + 1, c) + at(suffix, r, c + 1) -
                         at(suffix, r + 1, c + 1);
    }
  }

  std::int64_t s = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::int64_t n_rc = table[r * cols + c];
      if (n_rc == 0) continue;
      const std::int64_t greater_both = r + 1 < rows ? at(suffix, r + 1, c + 1) : 0;
      const std::int64_t greater_x = r + 1 < rows ? at(suffix, r + 1, 0) : 0;
      const std::int64_t greater_x_ge_y = r + 1 < rows ? at(suffix, r + 1, c) : 0;
      const std::int64_t greater_x_less_y = greater_x - greater_x_ge_y;
      s += n_rc * (greater_both - greater_x_less_y);
    }
  }

  const auto n = static_cast<std::int64_t>(x.size());
  const std::int64_t n0 = n * (n - 1) / 2;
  std::int64_t n1 = 0, n2 = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::int64_t t = 0;
    for (std::size_t c = 0; c < cols; ++c) t += table[r * cols + c];
    n1 += t * (t - 1) / 2;
  }
  for (std::size_t c = 0; c < cols; ++c) {
    std::int64_t u = 0;
    for (std::size_t r = 0; r < rows; ++r) u += table[r * cols + c];
    n2 += u * (u - 1) / 2;
  }
  const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  if (denom == 0.0) return std::nullopt;
  return static_cast<double>(s) / denom;
}

}  // namespace citeforge::humaneval
