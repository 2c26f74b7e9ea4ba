#ifndef ASMC_STATS_HPP
#define ASMC_STATS_HPP

// Small statistical helpers shared by diagnostics, experiments and tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "asmc/errors.hpp"

namespace asmc::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double mean(std::span<const double> v) {
    if (v.empty()) throw ArgumentError("mean of an empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Unbiased sample standard deviation; 0 for a single value.
inline double stddev(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Linear-interpolated quantile (type 7), q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ArgumentError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return v[lo] + f * (v[hi] - v[lo]);
}

// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw ArgumentError("KS statistic of an empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

// Asymptotic p-value of the one-sample KS test (Kolmogorov distribution).
inline double ks_pvalue(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double t = (sn + 0.12 + 0.11 / sn) * d;
    if (t < 1e-3) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

// Pearson chi-square statistic and its upper-tail p-value; cells with zero
// expected count must have zero observed count and are dropped.
struct ChiSquare {
    double statistic = 0.0;
    std::size_t dof = 0;
    double pvalue = 1.0;
};

inline ChiSquare chi_square(std::span<const double> observed, std::span<const double> expected) {
    if (observed.size() != expected.size()) throw ArgumentError("chi-square size mismatch");
    ChiSquare r;
    std::size_t cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) {
            if (observed[i] > 0.0) {
                r.statistic = INFINITY;
                r.pvalue = 0.0;
                return r;
            }
            continue;
        }
        r.statistic += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
        ++cells;
    }
    r.dof = cells > 0 ? cells - 1 : 0;
    r.pvalue = r.dof == 0 ? 1.0 : boost::math::gamma_q(0.5 * static_cast<double>(r.dof), 0.5 * r.statistic);
    return r;
}

// Least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope needs >= 2 paired points");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw ArgumentError("slope undefined for constant x");
    return sxy / sxx;
}

}  // namespace asmc::stats

#endif  // ASMC_STATS_HPP
