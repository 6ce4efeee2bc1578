// Minimal statistics helpers for the verification suite: the regularized
// incomplete gamma function (series + continued fraction) and the
// chi-square survival function built on it.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lfpo::stats {

// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p domain");
    if (x == 0.0) return 0.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        // series representation
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - gln);
    }
    // continued fraction (modified Lentz)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    const double q = std::exp(-x + a * std::log(x) - gln) * h;
    return 1.0 - q;
}

// P(X >= stat) for X ~ chi-square with df degrees of freedom.
inline double chi_square_pvalue(double stat, double df) {
    if (df <= 0.0) return 1.0;
    return 1.0 - gamma_p(df / 2.0, stat / 2.0);
}

// Chi-square goodness-of-fit p-value for observed counts against equal
// expected frequencies.
inline double uniform_chi_square_pvalue(const std::vector<std::size_t>& counts) {
    if (counts.size() < 2) return 1.0;
    double total = 0.0;
    for (std::size_t c : counts) total += static_cast<double>(c);
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (std::size_t c : counts) {
        const double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return chi_square_pvalue(stat, static_cast<double>(counts.size() - 1));
}

// One-sided Welch test statistic for mean(a) < mean(b); returns the
// z-score (normal approximation, adequate for the sample sizes used here).
inline double welch_one_sided_z(const std::vector<double>& a,
                                const std::vector<double>& b) {
    auto mean_var = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
        return std::pair<double, double>(mean, var);
    };
    const auto [ma, va] = mean_var(a);
    const auto [mb, vb] = mean_var(b);
    const double se = std::sqrt(va / static_cast<double>(a.size()) +
                                vb / static_cast<double>(b.size()));
    return (ma - mb) / se;
}

}  // namespace lfpo::stats
