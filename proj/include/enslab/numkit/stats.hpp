#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace enslab {

struct MeanAndError {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error of the mean. Infinite inputs propagate as an
/// infinite mean with infinite error.
inline MeanAndError mean_and_error(std::span<const double> values) {
    MeanAndError out;
    const std::size_t n = values.size();
    if (n == 0) return out;
    double sum = 0.0;
    for (double v : values) {
        if (std::isinf(v)) {
            out.mean = v;
            out.std_error = std::numeric_limits<double>::infinity();
            return out;
        }
        sum += v;
    }
    out.mean = sum / static_cast<double>(n);
    if (n < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    return out;
}

/// P(X >= k) for X ~ Binomial(n, 1/2).
inline double binomial_upper_tail(std::size_t k, std::size_t n) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    double total = 0.0;
    for (std::size_t i = k; i <= n; ++i) {
        const double log_choose = std::lgamma(static_cast<double>(n) + 1.0) -
                                  std::lgamma(static_cast<double>(i) + 1.0) -
                                  std::lgamma(static_cast<double>(n - i) + 1.0);
        total += std::exp(log_choose + log_half_n);
    }
    return std::min(1.0, total);
}

struct SignTest {
    std::size_t wins = 0;    ///< pairs with a < b
    std::size_t losses = 0;  ///< pairs with a > b
    std::size_t ties = 0;
    double p_one_sided = 1.0;  ///< H1: a tends to be smaller than b
    double p_two_sided = 1.0;
};

/// Exact paired sign test over (a[i], b[i]); ties are dropped.
inline SignTest paired_sign_test(std::span<const double> a, std::span<const double> b) {
    SignTest out;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] < b[i]) ++out.wins;
        else if (a[i] > b[i]) ++out.losses;
        else ++out.ties;
    }
    const std::size_t m = out.wins + out.losses;
    out.p_one_sided = binomial_upper_tail(out.wins, m);
    const std::size_t extreme = std::max(out.wins, out.losses);
    out.p_two_sided = std::min(1.0, 2.0 * binomial_upper_tail(extreme, m));
    return out;
}

}  // namespace enslab
