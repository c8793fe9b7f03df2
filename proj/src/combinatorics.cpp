#include "sbm/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace sbm {

namespace {

constexpr int SMALL_FACT = 1 << 17; // ~1 MB; keeps group-volume factorials off lgamma

const std::vector<double>& small_factorial_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(SMALL_FACT);
        t[0] = 0.0;
        double acc = 0.0;
        for (int n = 1; n < SMALL_FACT; ++n) {
            acc += std::log(static_cast<double>(n));
            t[n] = acc;
        }
        return t;
    }();
    return table;
}

// Li2(x) for x in [0, 1].
double dilog(double x) {
    if (x < 0.0 || x > 1.0)
        throw std::invalid_argument("dilog: argument outside [0,1]");
    if (x > 0.5) {
        // Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x)
        static const double PI2_6 = 1.6449340668482264365;
        if (x == 1.0)
            return PI2_6;
        return PI2_6 - std::log(x) * std::log1p(-x) - dilog(1.0 - x);
    }
    double sum = 0.0, term = x;
    for (int k = 1; k < 200; ++k) {
        double add = term / (static_cast<double>(k) * k);
        sum += add;
        if (add < 1e-17 * sum)
            break;
        term *= x;
    }
    return sum;
}

// Saddle-point solution of v = u sqrt(Li2(1 - e^-v)).
double restricted_partitions_v(double u) {
    double v = u;
    for (int it = 0; it < 10000; ++it) {
        double nv = u * std::sqrt(dilog(1.0 - std::exp(-v)));
        if (std::abs(nv - v) < 1e-14)
            return nv;
        v = nv;
    }
    return v;
}

double log_q_asymptotic(int64_t m, int64_t n) {
    if (n > m)
        n = m;
    double dm = static_cast<double>(m);
    if (static_cast<double>(n) < std::pow(dm, 0.25))
        return log_binomial(m - 1, n - 1) - log_factorial(n);
    double u = static_cast<double>(n) / std::sqrt(dm);
    double v = restricted_partitions_v(u);
    double lf = std::log(v) - 0.5 * std::log1p(-std::exp(-v) * (1 + u * u / 2))
                - 1.5 * std::log(2.0) - std::log(u) - std::log(M_PI);
    double g = 2 * v / u - u * std::log1p(-std::exp(-v));
    return lf - std::log(dm) + std::sqrt(dm) * g;
}

constexpr int64_t Q_EXACT_MAX = 2000;

// Triangular table q[m][n], n <= m, in log space. q(m,n) = q(m,m) for n > m.
class RestrictedPartitionTable {
  public:
    double get(int64_t m, int64_t n) {
        n = std::min(n, m);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (m >= static_cast<int64_t>(rows_.size()))
                extend(m);
            return rows_[m][n];
        }
    }

  private:
    void extend(int64_t m_max) {
        if (rows_.empty()) {
            rows_.push_back({0.0}); // q(0, 0) = 1
        }
        for (int64_t m = static_cast<int64_t>(rows_.size()); m <= m_max; ++m) {
            std::vector<double> row(m + 1);
            row[0] = -std::numeric_limits<double>::infinity(); // q(m>0, 0) = 0
            row[1] = 0.0;                                      // q(m, 1) = 1
            for (int64_t n = 2; n <= m; ++n) {
                // q(m, n) = q(m, n-1) + q(m-n, n)
                int64_t mm = m - n;
                double lower = rows_[mm][std::min(n, mm)];
                row[n] = log_sum_exp(row[n - 1], lower);
            }
            rows_.push_back(std::move(row));
        }
    }

    std::mutex mutex_;
    std::vector<std::vector<double>> rows_;
};

RestrictedPartitionTable& q_table() {
    static RestrictedPartitionTable t;
    return t;
}

class OrderedBellCache {
  public:
    double get(int64_t n) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (n < static_cast<int64_t>(vals_.size()))
            return vals_[n];
        std::vector<double> terms;
        for (int64_t m = vals_.size(); m <= n; ++m) {
            terms.clear();
            for (int64_t k = 1; k <= m; ++k)
                terms.push_back(log_binomial(m, k) + vals_[m - k]);
            vals_.push_back(log_sum_exp(terms));
        }
        return vals_[n];
    }

  private:
    std::mutex mutex_;
    std::vector<double> vals_ = {0.0}; // a_0 = 1
};

} // namespace

double log_factorial(int64_t n) {
    if (n < 0)
        throw std::invalid_argument("log_factorial: negative argument");
    if (n < SMALL_FACT)
        return small_factorial_table()[n];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_double_factorial_even(int64_t n) {
    if (n < 0 || (n & 1))
        throw std::invalid_argument("log_double_factorial_even: need even n >= 0");
    int64_t h = n / 2;
    return h * LN2 + log_factorial(h);
}

double log_binomial(int64_t n, int64_t k) {
    if (k < 0 || k > n)
        throw std::invalid_argument("log_binomial: need 0 <= k <= n");
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_multiset(int64_t n, int64_t m) {
    if (n < 0 || m < 0)
        throw std::invalid_argument("log_multiset: negative argument");
    if (n == 0) {
        if (m == 0)
            return 0.0;
        throw std::invalid_argument("log_multiset: zero types, nonzero picks");
    }
    return log_binomial(n + m - 1, m);
}

double log_restricted_partitions(int64_t m, int64_t n) {
    if (m < 0 || n < 0)
        throw std::invalid_argument("log_restricted_partitions: negative argument");
    if (m == 0)
        return 0.0;
    if (n == 0)
        return -std::numeric_limits<double>::infinity();
    if (m <= Q_EXACT_MAX)
        return q_table().get(m, n);
    return log_q_asymptotic(m, n);
}

double log_ordered_bell(int64_t n) {
    if (n < 0 || n > 2000)
        throw std::invalid_argument("log_ordered_bell: n outside [0, 2000]");
    static OrderedBellCache cache;
    return cache.get(n);
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("log_sum_exp: empty input");
    double mx = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(mx))
        return mx; // all -inf (or a +inf/nan dominates)
    double acc = 0.0;
    for (double v : values)
        acc += std::exp(v - mx);
    return mx + std::log(acc);
}

double log_sum_exp(double a, double b) {
    if (a < b)
        std::swap(a, b);
    if (!std::isfinite(a))
        return a;
    return a + std::log1p(std::exp(b - a));
}

} // namespace sbm
