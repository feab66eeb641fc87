#pragma once

// Brute-force reference implementations used to check the library.
// Deliberately naive: clarity over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f = 0.0;
  bool undefined = false;
};

inline Prf prf(double overlap, double cand_units, double ref_units) {
  Prf out;
  if (ref_units == 0.0) {
    out.undefined = true;
    return out;
  }
  out.p = cand_units == 0.0 ? 0.0 : overlap / cand_units;
  out.r = overlap / ref_units;
  out.f = out.p + out.r == 0.0 ? 0.0 : 2.0 * out.p * out.r / (out.p + out.r);
  return out;
}

inline std::vector<std::vector<std::string>> ngrams(const std::vector<std::string>& toks, std::size_t n) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) out.emplace_back(toks.begin() + i, toks.begin() + i + n);
  return out;
}

// ROUGE-N by explicit multiset intersection of sorted n-gram lists.
inline Prf rouge_n(const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t n) {
  auto a = ngrams(cand, n);
  auto b = ngrams(ref, n);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::vector<std::string>> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return prf(static_cast<double>(common.size()), static_cast<double>(a.size()), static_cast<double>(b.size()));
}

// LCS length with the full (m+1) x (n+1) table.
inline std::size_t lcs_table(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

// LCS length by enumerating every subsequence of `a` (|a| <= ~12).
inline std::size_t lcs_exhaustive(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::size_t m = a.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::size_t len = 0, j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) {
      if (!(mask & (std::size_t{1} << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else {
        ++len;
        ++j;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

inline Prf rouge_l(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  return prf(static_cast<double>(lcs_table(cand, ref)), static_cast<double>(cand.size()),
             static_cast<double>(ref.size()));
}

// Kendall tau-b from all n(n-1)/2 pairs: sum of sign products over the
// root of the products of non-tied pair counts.
inline std::optional<double> tau_b(const std::vector<int>& x, const std::vector<int>& y) {
  auto sgn = [](int v) { return (v > 0) - (v < 0); };
  long long s = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int a = sgn(x[i] - x[j]);
      const int b = sgn(y[i] - y[j]);
      s += a * b;
      nx += a * a;
      ny += b * b;
    }
  }
  if (nx == 0 || ny == 0) return std::nullopt;
  return static_cast<double>(s) / std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
}

}  // namespace oracle
