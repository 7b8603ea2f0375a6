#pragma once

// Discrete power law P(X = x) = x^{-alpha} / zeta(alpha), x >= 1.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "core/dual.hpp"
#include "core/rng.hpp"

namespace risknet::topology {

namespace detail {

// B_{2j} / (2j)!, j = 1..8
inline constexpr double kBernoulliOverFactorial[8] = {
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
};

}  // namespace detail

/// Hurwitz zeta sum_{n>=0} (q + n)^{-s} for s > 1, q > 0 (Euler-Maclaurin).
template <class S>
S hurwitz_zeta(const S& s, double q) {
    using std::exp;
    constexpr int N = 10;
    S sum(0.0);
    for (int n = 0; n < N; ++n) sum += exp(-s * std::log(q + n));
    const double a = q + N;
    const double ln_a = std::log(a);
    const S a_pow = exp(-s * ln_a);  // a^{-s}
    sum += a_pow * a / (s - 1.0) + 0.5 * a_pow;
    S rising = s;                    // s (s+1) ... (s+2j-2)
    S term = a_pow / a;              // a^{-s-2j+1}
    const double inv_a2 = 1.0 / (a * a);
    for (int j = 0; j < 8; ++j) {
        sum += detail::kBernoulliOverFactorial[j] * rising * term;
        rising *= (s + (2 * j + 1.0)) * (s + (2 * j + 2.0));
        term *= inv_a2;
    }
    return sum;
}

inline double riemann_zeta(double s) { return hurwitz_zeta<double>(s, 1.0); }

/// E[ln X] = -zeta'(alpha) / zeta(alpha) under the power law.
double expected_log(double alpha);

/// P(X <= x) = 1 - zeta(alpha, x + 1) / zeta(alpha).
double power_law_cdf(double x, double alpha);

inline constexpr double kAlphaLower = 1.01;
inline constexpr double kAlphaUpper = 10.0;

/// Root of the score equation E_alpha[ln X] = mean(ln x) on (1.01, 10);
/// nullopt when the data carry no variation or the root leaves the bracket.
std::optional<double> power_law_mle(std::span<const int> x);

/// Kolmogorov-Smirnov distance between the sample and the fitted law.
double ks_distance(std::span<const int> x, double alpha);

/// Devroye's rejection sampler for the zeta distribution.
std::int64_t sample_zeta(double alpha, Rng& rng);

struct PowerLawConfig {
    int replicates = 1000;
    std::uint64_t seed = 0;
};

struct PowerLawFit {
    double alpha = 0.0;
    double ks = 0.0;
    double pvalue = 0.0;
    bool alpha_valid = false;
    std::size_t n = 0;
    int valid_replicates = 0;
    std::string message;
};

/// MLE with x_min = 1 and parametric-bootstrap KS p-value. Replicate r draws
/// from its own stream mix_seed(seed, r). Throws DataError on empty input or
/// values below 1.
PowerLawFit fit_power_law(std::span<const int> degrees, const PowerLawConfig& config = {});

}  // namespace risknet::topology
