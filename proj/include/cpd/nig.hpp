#pragma once

#include "cpd/student_t.hpp"

#include <cmath>
#include <stdexcept>

namespace cpd {

/// Normal-Inverse-Gamma sufficient statistics for a Gaussian with unknown
/// mean and variance. One bundle backs one run-length hypothesis.
///
/// Sequential updates keep nu = nu0 + n and alpha = alpha0 + n/2 exactly
/// after n observations; beta never decreases.
struct NigParams {
    double mu;    // predictive location
    double nu;    // pseudo-observation count, > 0
    double alpha; // half degrees of freedom, > 0
    double beta;  // scale accumulator, > 0

    bool operator==(const NigParams&) const = default;
};

/// Fresh prior centered at `loc` with unit nu, alpha, beta.
inline NigParams init_nig(double loc) {
    if (!std::isfinite(loc)) {
        throw std::invalid_argument("init_nig: loc must be finite");
    }
    return NigParams{loc, 1.0, 1.0, 1.0};
}

/// One conjugate update with observation x. Pure: the input bundle is not
/// mutated.
inline NigParams update_nig(const NigParams& p, double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("update_nig: x must be finite");
    }
    const double nu_next = p.nu + 1.0;
    const double diff = x - p.mu;
    return NigParams{
        (p.nu * p.mu + x) / nu_next,
        nu_next,
        p.alpha + 0.5,
        p.beta + p.nu * diff * diff / (2.0 * nu_next),
    };
}

/// Posterior predictive of the next observation under the bundle: a
/// location-scale Student-t with df = 2*alpha and squared scale
/// beta*(nu+1)/(nu*alpha).
inline StudentTSpec predictive_spec(const NigParams& p) {
    return StudentTSpec{
        2.0 * p.alpha,
        p.mu,
        p.beta * (p.nu + 1.0) / (p.nu * p.alpha),
    };
}

} // namespace cpd
