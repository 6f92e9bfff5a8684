#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cpd {

/// Location-scale Student-t parameterization. `scale_sq` is the squared
/// scale, not the variance (the variance is scale_sq * df / (df - 2) when
/// df > 2).
struct StudentTSpec {
    double df;       // degrees of freedom, > 0
    double loc;      // center
    double scale_sq; // squared scale, > 0
};

/// lgamma restricted to positive arguments. lgamma_r avoids the signgam
/// global so concurrent sweep workers stay race-free.
inline double log_gamma(double x) {
#if defined(__unix__) || defined(__APPLE__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

/// Natural-log density of the location-scale Student-t. Finite for all
/// finite inputs; densities are kept in log space throughout the project
/// because per-run products underflow in linear space.
inline double log_pdf_student_t(double x, const StudentTSpec& spec) {
    if (!(spec.df > 0.0) || !(spec.scale_sq > 0.0)) {
        throw std::invalid_argument("StudentTSpec requires df > 0 and scale_sq > 0");
    }
    if (!std::isfinite(x)) {
        throw std::invalid_argument("log_pdf_student_t: x must be finite");
    }
    const double df = spec.df;
    const double z_sq = (x - spec.loc) * (x - spec.loc) / spec.scale_sq;
    return log_gamma(0.5 * (df + 1.0)) - log_gamma(0.5 * df)
         - 0.5 * std::log(df * std::numbers::pi * spec.scale_sq)
         - 0.5 * (df + 1.0) * std::log1p(z_sq / df);
}

} // namespace cpd
