#pragma once

#include <optional>
#include <span>

namespace citeforge::humaneval {

/// Kendall's tau-b between two ordinal vectors of equal length (>= 2).
///
/// Computed from the contingency table of (x, y) value pairs:
///   tau_b = S / sqrt((n0 - n1) * (n0 - n2))
/// where S is concordant minus discordant pairs, n0 = n(n-1)/2 and n1, n2
/// count the pairs tied in x and in y. Returns nullopt when either vector is
/// constant (zero denominator). Throws ArgumentError on bad lengths.
std::optional<double> kendall_tau_b(std::span<const int> x, std::span<const int> y);

}  // namespace citeforge::humaneval
