#pragma once

// Standardized innovation laws for the marginal model.
//
// Skew-t: Fernandez-Steel skewing of the unit-variance Student-t g(.),
//   f*(x) = 2/(xi + 1/xi) * { g(x/xi) for x >= 0 ; g(x*xi) for x < 0 },
// then re-standardized: eps = (X - mu_xi) / sigma_xi, with
//   m1       = E|Z| under g = 2 sqrt(nu-2) G((nu+1)/2) / (sqrt(pi) (nu-1) G(nu/2))
//   mu_xi    = m1 (xi - 1/xi)
//   sigma_xi = sqrt((1 - m1^2)(xi^2 + 1/xi^2) + 2 m1^2 - 1).

#include <cmath>
#include <numbers>

#include "core/dual.hpp"
#include "core/error.hpp"
#include "core/student_t.hpp"

namespace risknet::marginal {

template <class S>
struct SkewTShape {
    S nu;
    S xi;
    S m1;
    S mu;         // mean of the un-standardized skewed variable
    S sigma;      // its standard deviation
    S log_norm;   // ln sigma + ln 2 - ln(xi + 1/xi) + lnG((nu+1)/2) - lnG(nu/2) - 0.5 ln(pi (nu-2))
};

template <class S>
SkewTShape<S> skewt_shape(const S& nu, const S& xi) {
    using std::exp;
    using std::log;
    using std::sqrt;
    constexpr double pi = std::numbers::pi;
    const S lg_half_up = ad::lgamma(0.5 * (nu + 1.0));
    const S lg_half = ad::lgamma(0.5 * nu);
    SkewTShape<S> s{nu, xi, S(0.0), S(0.0), S(0.0), S(0.0)};
    s.m1 = 2.0 * sqrt(nu - 2.0) * exp(lg_half_up - lg_half) / (std::sqrt(pi) * (nu - 1.0));
    const S inv_xi = 1.0 / xi;
    s.mu = s.m1 * (xi - inv_xi);
    s.sigma = sqrt((1.0 - s.m1 * s.m1) * (xi * xi + inv_xi * inv_xi) + 2.0 * s.m1 * s.m1 - 1.0);
    s.log_norm = log(s.sigma) + std::log(2.0) - log(xi + inv_xi) + lg_half_up - lg_half -
                 0.5 * log(pi * (nu - 2.0));
    return s;
}

template <class S>
S skewt_log_density(const S& eps, const SkewTShape<S>& s) {
    using std::log1p;
    const S z = s.mu + s.sigma * eps;
    const S w = z >= 0.0 ? z / s.xi : z * s.xi;
    return s.log_norm - 0.5 * (s.nu + 1.0) * log1p(w * w / (s.nu - 2.0));
}

template <class S>
S normal_log_density(const S& eps) {
    return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * eps * eps;
}

namespace detail {

// CDF of the unit-variance Student-t.
template <class S>
S std_t_cdf(const S& b, const S& nu) {
    using std::sqrt;
    return stats::t_cdf(S(b * sqrt(nu / (nu - 2.0))), nu);
}

// Density of the unit-variance Student-t.
template <class S>
S std_t_density(const S& b, const S& nu) {
    using std::exp;
    using std::log;
    using std::log1p;
    const S lg = ad::lgamma(0.5 * (nu + 1.0)) - ad::lgamma(0.5 * nu) -
                 0.5 * log(std::numbers::pi * (nu - 2.0));
    return exp(lg - 0.5 * (nu + 1.0) * log1p(b * b / (nu - 2.0)));
}

// Partial first moment  H(b) = int_{-inf}^{b} s g(s) ds = -(nu - 2 + b^2) g(b) / (nu - 1).
template <class S>
S std_t_partial_moment(const S& b, const S& nu) {
    return -(nu - 2.0 + b * b) * std_t_density(b, nu) / (nu - 1.0);
}

}  // namespace detail

/// E|eps| for the standardized skew-t, assembled from the one-sided truncated
/// moments of the unit-variance t:  E|X - mu| = 2 (mu F*(mu) - E[X 1{X < mu}]).
template <class S>
S skewt_abs_moment(const S& nu, const S& xi) {
    if (!(ad::value_of(nu) > 2.0)) throw DomainError("skew-t E|eps| requires nu > 2");
    if (!(ad::value_of(xi) > 0.0)) throw DomainError("skew-t E|eps| requires xi > 0");
    const SkewTShape<S> s = skewt_shape(nu, xi);
    const S xi2 = xi * xi;
    const S k = 2.0 / (xi + 1.0 / xi);
    const S a = s.mu;
    S cdf_a, pm_a;
    if (a <= 0.0) {
        cdf_a = 2.0 / (1.0 + xi2) * detail::std_t_cdf(S(a * xi), nu);
        pm_a = k / xi2 * detail::std_t_partial_moment(S(a * xi), nu);
    } else {
        const S h0 = detail::std_t_partial_moment(S(0.0), nu);
        cdf_a = 1.0 / (1.0 + xi2) + 2.0 * xi2 / (1.0 + xi2) * (detail::std_t_cdf(S(a / xi), nu) - 0.5);
        pm_a = k / xi2 * h0 + k * xi2 * (detail::std_t_partial_moment(S(a / xi), nu) - h0);
    }
    return 2.0 * (a * cdf_a - pm_a) / s.sigma;
}

inline double normal_abs_moment() { return std::sqrt(2.0 / std::numbers::pi); }

double skewt_cdf(double eps, double nu, double xi);
double skewt_quantile(double p, double nu, double xi);

}  // namespace risknet::marginal
