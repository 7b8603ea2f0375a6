#include "topology/power_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "core/error.hpp"
#include "core/hash.hpp"

namespace risknet::topology {

double expected_log(double alpha) {
    const auto z = hurwitz_zeta(ad::Dual<1>::variable(alpha, 0), 1.0);
    return -z.d[0] / z.v;
}

double power_law_cdf(double x, double alpha) {
    if (x < 1.0) return 0.0;
    return 1.0 - hurwitz_zeta<double>(alpha, std::floor(x) + 1.0) / riemann_zeta(alpha);
}

namespace {

std::optional<double> mle_from_mean_log(double mean_log) {
    if (!(mean_log > 0.0) || !std::isfinite(mean_log)) return std::nullopt;
    // E_alpha[ln X] decreases in alpha.
    double lo = kAlphaLower, hi = kAlphaUpper;
    if (expected_log(lo) < mean_log || expected_log(hi) > mean_log) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (expected_log(mid) > mean_log)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double mean_log(std::span<const int> x) {
    double s = 0.0;
    for (int v : x) s += std::log(static_cast<double>(v));
    return s / static_cast<double>(x.size());
}

// KS over sorted data.
double ks_sorted(const std::vector<int>& xs, double alpha) {
    const double n = static_cast<double>(xs.size());
    const double z = riemann_zeta(alpha);
    double d = 0.0;
    std::size_t i = 0;
    while (i < xs.size()) {
        const int v = xs[i];
        std::size_t j = i;
        while (j < xs.size() && xs[j] == v) ++j;
        const double below = static_cast<double>(i) / n;  // S(v - 1)
        const double at = static_cast<double>(j) / n;     // S(v)
        const double p_below = v > 1 ? 1.0 - hurwitz_zeta<double>(alpha, v) / z : 0.0;
        const double p_at = 1.0 - hurwitz_zeta<double>(alpha, v + 1.0) / z;
        d = std::max({d, std::abs(below - p_below), std::abs(at - p_at)});
        i = j;
    }
    return d;
}

}  // namespace

std::optional<double> power_law_mle(std::span<const int> x) {
    if (x.empty()) return std::nullopt;
    return mle_from_mean_log(mean_log(x));
}

double ks_distance(std::span<const int> x, double alpha) {
    std::vector<int> xs(x.begin(), x.end());
    std::sort(xs.begin(), xs.end());
    return ks_sorted(xs, alpha);
}

std::int64_t sample_zeta(double alpha, Rng& rng) {
    if (!(alpha > 1.0)) throw DomainError("zeta sampler requires alpha > 1");
    const double am1 = alpha - 1.0;
    const double b = std::pow(2.0, am1);
    constexpr double kMax = 9007199254740992.0;  // 2^53
    for (;;) {
        const double u = rng.uniform();
        const double v = rng.uniform();
        const double x = std::floor(std::pow(u, -1.0 / am1));
        if (!(x >= 1.0) || x > kMax) continue;
        const double t = std::pow(1.0 + 1.0 / x, am1);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::int64_t>(x);
    }
}

PowerLawFit fit_power_law(std::span<const int> degrees, const PowerLawConfig& config) {
    if (degrees.empty()) throw DataError("power-law fit needs a nonempty degree sequence");
    for (int v : degrees)
        if (v < 1) throw DataError("power-law fit needs values >= 1");
    if (config.replicates < 0) throw ConfigError("bootstrap replicate count must be non-negative");

    PowerLawFit fit;
    fit.n = degrees.size();
    const auto alpha = power_law_mle(degrees);
    if (!alpha) {
        fit.alpha = std::numeric_limits<double>::quiet_NaN();
        fit.ks = std::numeric_limits<double>::quiet_NaN();
        fit.pvalue = std::numeric_limits<double>::quiet_NaN();
        fit.message = std::all_of(degrees.begin(), degrees.end(), [&](int v) { return v == degrees[0]; })
                          ? "degenerate: no variation in degrees"
                          : "score root outside alpha bracket";
        return fit;
    }
    fit.alpha = *alpha;
    fit.ks = ks_distance(degrees, fit.alpha);

    int exceed = 0;
    std::vector<int> sample(fit.n);
    for (int r = 0; r < config.replicates; ++r) {
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(r)));
        bool overflow = false;
        for (auto& s : sample) {
            const auto v = sample_zeta(fit.alpha, rng);
            if (v > std::numeric_limits<int>::max()) overflow = true;
            s = static_cast<int>(std::min<std::int64_t>(v, std::numeric_limits<int>::max()));
        }
        if (overflow) continue;
        const auto a = power_law_mle(sample);
        if (!a) continue;
        std::sort(sample.begin(), sample.end());
        ++fit.valid_replicates;
        if (ks_sorted(sample, *a) >= fit.ks) ++exceed;
    }
    if (config.replicates == 0) {
        fit.pvalue = std::numeric_limits<double>::quiet_NaN();
        fit.alpha_valid = true;
        fit.message = "no bootstrap requested";
    } else if (fit.valid_replicates == 0) {
        fit.pvalue = std::numeric_limits<double>::quiet_NaN();
        fit.message = "bootstrap degenerate: no valid replicate";
    } else {
        fit.pvalue = static_cast<double>(exceed) / fit.valid_replicates;
        fit.alpha_valid = true;
    }
    return fit;
}

}  // namespace risknet::topology
