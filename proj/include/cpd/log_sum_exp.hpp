#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace cpd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without leaving log space.
inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

/// log of the sum of exp over a range, shifted by the max for stability.
inline double log_sum_exp(std::span<const double> values) {
    double max_val = kNegInf;
    for (double v : values) {
        if (v > max_val) max_val = v;
    }
    if (!std::isfinite(max_val)) {
        return max_val;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += std::exp(v - max_val);
    }
    return max_val + std::log(sum);
}

} // namespace cpd
