#pragma once

// Student-t CDF / quantile that propagate derivatives with respect to both the
// argument and the degrees of freedom. The dof-sensitivity of the CDF has no
// elementary closed form; it is taken by a fourth-order central difference of
// the (lower-tail) CDF, and the quantile's sensitivity follows by implicit
// differentiation: dx/dnu = -(dF/dnu) / f(x).

#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "core/dual.hpp"

namespace risknet::stats {

inline double t_pdf(double x, double nu) {
    return boost::math::pdf(boost::math::students_t_distribution<double>(nu), x);
}

inline double t_cdf(double x, double nu) {
    return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
}

inline double t_quantile(double p, double nu) {
    return boost::math::quantile(boost::math::students_t_distribution<double>(nu), p);
}

inline double normal_cdf(double x) {
    return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

inline double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// dF_nu(x)/dnu, evaluated on the lower tail for accuracy.
inline double t_cdf_dnu(double x, double nu) {
    const double z = -std::abs(x);
    const double h = 1e-3 * nu;
    const double g = (-t_cdf(z, nu + 2 * h) + 8 * t_cdf(z, nu + h) - 8 * t_cdf(z, nu - h) +
                      t_cdf(z, nu - 2 * h)) /
                     (12 * h);
    return x > 0 ? -g : g;
}

template <class S>
S t_cdf(const S& x, const S& nu) {
    if constexpr (ad::is_dual_v<S>) {
        const double F = t_cdf(x.v, nu.v);
        const double fx = t_pdf(x.v, nu.v);
        const double fnu = t_cdf_dnu(x.v, nu.v);
        S r(F);
        for (std::size_t i = 0; i < r.d.size(); ++i) r.d[i] = fx * x.d[i] + fnu * nu.d[i];
        return r;
    } else {
        return t_cdf(x, nu);
    }
}

template <class S>
S t_quantile(double p, const S& nu) {
    if constexpr (ad::is_dual_v<S>) {
        const double x = t_quantile(p, nu.v);
        const double dx = -t_cdf_dnu(x, nu.v) / t_pdf(x, nu.v);
        return ad::chain(nu, x, dx);
    } else {
        return t_quantile(p, nu);
    }
}

}  // namespace risknet::stats
