#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "beliefroute/errors.hpp"
#include "beliefroute/rng.hpp"

namespace beliefroute {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw ContractViolation("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw ContractViolation("median of empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool overlaps(const Interval& other) const {
        return lo <= other.hi && other.lo <= hi;
    }
};

/// Percentile bootstrap CI for the mean.
inline Interval bootstrap_mean_ci(std::span<const double> xs, double level = 0.95,
                                  int resamples = 2000, std::uint64_t seed = 17) {
    if (xs.empty()) throw ContractViolation("bootstrap of empty sample");
    RngStream rng(seed, 0xb005ull);
    std::vector<double> means(resamples);
    for (int b = 0; b < resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            s += xs[rng.uniform_index(xs.size())];
        }
        means[b] = s / static_cast<double>(xs.size());
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    const auto idx = [&](double q) {
        const auto i = static_cast<std::size_t>(q * (resamples - 1));
        return means[std::min<std::size_t>(i, resamples - 1)];
    };
    return Interval{idx(tail), idx(1.0 - tail)};
}

/// Two-sided paired-bootstrap p-value for the hypothesis that the mean of
/// the paired differences is zero. Clamped below at 1/resamples.
inline double paired_bootstrap_p(std::span<const double> diffs, int resamples = 4000,
                                 std::uint64_t seed = 29) {
    if (diffs.empty()) throw ContractViolation("paired bootstrap of empty sample");
    RngStream rng(seed, 0xb007ull);
    int nonpos = 0, nonneg = 0;
    for (int b = 0; b < resamples; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < diffs.size(); ++i) {
            s += diffs[rng.uniform_index(diffs.size())];
        }
        if (s <= 0.0) ++nonpos;
        if (s >= 0.0) ++nonneg;
    }
    const double p = 2.0 * std::min(nonpos, nonneg) / static_cast<double>(resamples);
    return std::clamp(p, 1.0 / resamples, 1.0);
}

/// Least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ContractViolation("ols_slope: need two aligned samples");
    }
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw ContractViolation("ols_slope: degenerate x");
    return sxy / sxx;
}

/// Round to 6 significant digits; metric files are serialized through this.
inline double round_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

inline std::string format_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace beliefroute
