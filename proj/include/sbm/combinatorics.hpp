#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Log-space combinatorial kernels. All probabilities in this library are
// natural-log doubles; conversion to bits happens only at the presentation
// boundary (see to_bits).

namespace sbm {

inline constexpr double LN2 = 0.6931471805599453094;

inline double to_bits(double ln_p) { return ln_p / LN2; }

// ln(n!)
double log_factorial(int64_t n);

// ln(n!!) for even n >= 0, i.e. (n/2) ln 2 + ln((n/2)!)
double log_double_factorial_even(int64_t n);

// ln C(n, k), 0 <= k <= n
double log_binomial(int64_t n, int64_t k);

// ln multiset(n, m) = ln C(n+m-1, m); number of m-combinations with
// repetition from n types. (0, 0) -> 0.
double log_multiset(int64_t n, int64_t m);

// ln q(m, n): number of partitions of the integer m into at most n parts.
// Exact log-space DP for m <= 2000 (memoized); Szekeres-style asymptotics
// above that, which is only exercised by very large group volumes.
double log_restricted_partitions(int64_t m, int64_t n);

// ln a_n, the ordered Bell numbers, via a_n = sum_k C(n,k) a_{n-k}.
// Cached; diagnostic range n <= 2000.
double log_ordered_bell(int64_t n);

// ln sum_i exp(v_i), max-shifted. Empty input is a contract violation.
double log_sum_exp(std::span<const double> values);
double log_sum_exp(double a, double b);

} // namespace sbm
