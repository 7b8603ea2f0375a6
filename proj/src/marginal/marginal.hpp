#pragma once

// ARMA(p,q) conditional mean with eGARCH(pv,qv) log-variance and standardized
// normal or skew-t innovations:
//
//   r_t = mu_t + y_t,           mu_t = mu0 + sum phi_j r_{t-j} + sum theta_j y_{t-j}
//   y_t = sqrt(h_t) eps_t,
//   log h_t = omega + sum_j [alpha_j eps_{t-j} + gamma_j (|eps_{t-j}| - E|eps|)]
//                   + sum_j beta_j log h_{t-j}
//
// Pre-sample values: eps = 0, y = 0, r = sample mean of r, log h = ln of the
// sample variance of the mean-filtered series y.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/dual.hpp"
#include "core/optimizer.hpp"
#include "json.hpp"
#include "marginal/skewt.hpp"

namespace risknet::marginal {

enum class Family { normal, skew_t };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct InnovationDist {
    Family family = Family::skew_t;
    double shape = 8.0;  // nu > 2 (skew-t only)
    double skew = 1.0;   // xi > 0 (skew-t only)
};

struct ArmaParams {
    double mu0 = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
};

struct EgarchParams {
    double omega = 0.0;
    std::vector<double> alpha;
    std::vector<double> gamma;
    std::vector<double> beta;
};

struct MarginalParams {
    ArmaParams arma;
    EgarchParams egarch;
    InnovationDist dist;
};

struct ModelOrders {
    int p = 1;   // AR lags
    int q = 1;   // MA lags
    int pv = 2;  // shock lags (alpha, gamma)
    int qv = 2;  // log-variance lags (beta)
};

/// Flat natural-parameter vector layout:
/// [mu0, phi.., theta.., omega, alpha.., gamma.., beta.., (nu, xi)].
class ParamLayout {
public:
    ParamLayout(ModelOrders orders, Family family);

    std::size_t size() const { return size_; }
    const ModelOrders& orders() const { return orders_; }
    Family family() const { return family_; }

    std::size_t mu0() const { return 0; }
    std::size_t phi(int j) const { return 1 + static_cast<std::size_t>(j); }
    std::size_t theta(int j) const { return 1 + static_cast<std::size_t>(orders_.p + j); }
    std::size_t omega() const { return 1 + static_cast<std::size_t>(orders_.p + orders_.q); }
    std::size_t alpha(int j) const { return omega() + 1 + static_cast<std::size_t>(j); }
    std::size_t gamma(int j) const { return omega() + 1 + static_cast<std::size_t>(orders_.pv + j); }
    std::size_t beta(int j) const { return omega() + 1 + static_cast<std::size_t>(2 * orders_.pv + j); }
    std::size_t nu() const { return beta(orders_.qv); }
    std::size_t xi() const { return nu() + 1; }

    std::vector<double> pack(const MarginalParams& p) const;
    MarginalParams unpack(std::span<const double> theta) const;
    std::vector<std::string> names() const;

private:
    ModelOrders orders_;
    Family family_;
    std::size_t size_;
};

inline constexpr std::size_t kMaxMarginalParams = 16;
using MarginalDual = ad::Dual<kMaxMarginalParams>;

// ----------------------------------------------------------------------------
// Feasible-region transforms (unconstrained <-> natural).

namespace detail {

// Partial autocorrelations in (-1,1) -> stationary AR coefficients (Durbin-Levinson).
template <class S>
std::vector<S> pacf_to_ar(const std::vector<S>& r) {
    std::vector<S> phi;
    for (std::size_t k = 0; k < r.size(); ++k) {
        std::vector<S> next(k + 1);
        next[k] = r[k];
        for (std::size_t j = 0; j < k; ++j) next[j] = phi[j] - r[k] * phi[k - 1 - j];
        phi = std::move(next);
    }
    return phi;
}

std::vector<double> ar_to_pacf(std::vector<double> phi);

template <class S>
S logistic(const S& u) {
    using std::exp;
    return 1.0 / (1.0 + exp(-u));
}

inline constexpr double kNuLower = 2.05;
inline constexpr double kNuUpper = 100.0;

}  // namespace detail

/// Maps an unconstrained vector onto the feasible region:
/// |AR roots| outside the unit circle, invertible MA, stationary log-variance
/// recursion, nu in (2.05, 100), xi > 0.
template <class S>
std::vector<S> to_natural(const ParamLayout& L, std::span<const S> u) {
    using std::exp;
    using std::tanh;
    const auto& o = L.orders();
    std::vector<S> th(u.begin(), u.end());
    auto tanh_block = [&](std::size_t first, int n) {
        std::vector<S> r(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) r[j] = tanh(u[first + j]);
        return detail::pacf_to_ar(r);
    };
    if (o.p > 0) {
        const auto phi = tanh_block(L.phi(0), o.p);
        for (int j = 0; j < o.p; ++j) th[L.phi(j)] = phi[j];
    }
    if (o.q > 0) {
        const auto ma = tanh_block(L.theta(0), o.q);
        for (int j = 0; j < o.q; ++j) th[L.theta(j)] = -ma[j];
    }
    if (o.qv > 0) {
        const auto beta = tanh_block(L.beta(0), o.qv);
        for (int j = 0; j < o.qv; ++j) th[L.beta(j)] = beta[j];
    }
    if (L.family() == Family::skew_t) {
        th[L.nu()] = detail::kNuLower + (detail::kNuUpper - detail::kNuLower) * detail::logistic(u[L.nu()]);
        th[L.xi()] = exp(u[L.xi()]);
    }
    return th;
}

std::vector<double> to_unconstrained(const ParamLayout& L, std::span<const double> natural);

// ----------------------------------------------------------------------------
// Filter and likelihood, generic over double / Dual.

template <class S>
struct FilterSeries {
    std::vector<S> cond_mean;
    std::vector<S> cond_var;
    std::vector<S> std_resid;
    std::vector<S> log_var;
};

/// Largest |log h| accepted before the filter reports failure.
inline constexpr double kMaxAbsLogVariance = 700.0;

/// Runs the recursion; returns false on non-finite parameters or a non-finite or
/// overflowing log-variance.
template <class S>
bool run_filter(std::span<const double> r, const ParamLayout& L, std::span<const S> th,
                FilterSeries<S>& out) {
    using std::abs;
    using std::exp;
    using std::log;
    using std::sqrt;
    const auto& o = L.orders();
    const std::size_t T = r.size();
    out.cond_mean.assign(T, S(0.0));
    out.cond_var.assign(T, S(0.0));
    out.std_resid.assign(T, S(0.0));
    out.log_var.assign(T, S(0.0));
    if (T == 0) return true;
    for (const auto& v : th)
        if (!std::isfinite(ad::value_of(v))) return false;

    double r_bar = 0.0;
    for (double x : r) r_bar += x;
    r_bar /= static_cast<double>(T);

    std::vector<S> y(T);
    for (std::size_t t = 0; t < T; ++t) {
        S m = th[L.mu0()];
        for (int j = 1; j <= o.p; ++j) {
            const double lag = t >= static_cast<std::size_t>(j) ? r[t - j] : r_bar;
            m += th[L.phi(j - 1)] * lag;
        }
        for (int j = 1; j <= o.q; ++j)
            if (t >= static_cast<std::size_t>(j)) m += th[L.theta(j - 1)] * y[t - j];
        out.cond_mean[t] = m;
        y[t] = r[t] - m;
    }

    S y_mean(0.0);
    for (const auto& v : y) y_mean += v;
    y_mean /= static_cast<double>(T);
    S y_var(0.0);
    for (const auto& v : y) {
        const S d = v - y_mean;
        y_var += d * d;
    }
    y_var /= static_cast<double>(T);
    // A constant mean-filtered series has no usable log-variance seed; floor it
    // so zero-coefficient lags stay exact.
    const S log_seed = ad::value_of(y_var) > 0.0 ? log(y_var) : S(std::log(std::numeric_limits<double>::min()));

    S e_abs;
    if (L.family() == Family::skew_t)
        e_abs = skewt_abs_moment(th[L.nu()], th[L.xi()]);
    else
        e_abs = S(normal_abs_moment());
    if (!std::isfinite(ad::value_of(e_abs))) return false;

    for (std::size_t t = 0; t < T; ++t) {
        S lh = th[L.omega()];
        for (int j = 1; j <= o.pv; ++j) {
            if (t >= static_cast<std::size_t>(j)) {
                const S& e = out.std_resid[t - j];
                lh += th[L.alpha(j - 1)] * e + th[L.gamma(j - 1)] * (abs(e) - e_abs);
            } else {
                lh -= th[L.gamma(j - 1)] * e_abs;
            }
        }
        for (int j = 1; j <= o.qv; ++j)
            lh += th[L.beta(j - 1)] * (t >= static_cast<std::size_t>(j) ? out.log_var[t - j] : log_seed);
        const double lv = ad::value_of(lh);
        if (!std::isfinite(lv) || std::abs(lv) > kMaxAbsLogVariance) return false;
        out.log_var[t] = lh;
        out.cond_var[t] = exp(lh);
        out.std_resid[t] = y[t] / sqrt(out.cond_var[t]);
    }
    return true;
}

/// Sum over t of [ln f(eps_t) - 0.5 ln h_t].
template <class S>
S loglik_terms(const FilterSeries<S>& fs, const ParamLayout& L, std::span<const S> th) {
    S total(0.0);
    const std::size_t T = fs.std_resid.size();
    if (L.family() == Family::skew_t) {
        if (!(ad::value_of(th[L.nu()]) > 2.0) || !(ad::value_of(th[L.xi()]) > 0.0))
            return S(-std::numeric_limits<double>::infinity());
        const SkewTShape<S> shape = skewt_shape(th[L.nu()], th[L.xi()]);
        for (std::size_t t = 0; t < T; ++t)
            total += skewt_log_density(fs.std_resid[t], shape) - 0.5 * fs.log_var[t];
    } else {
        for (std::size_t t = 0; t < T; ++t)
            total += normal_log_density(fs.std_resid[t]) - 0.5 * fs.log_var[t];
    }
    return total;
}

/// Log-likelihood; -inf when the filter fails or parameters leave the domain.
template <class S>
S loglik(std::span<const double> r, const ParamLayout& L, std::span<const S> th) {
    if (L.family() == Family::skew_t &&
        (!(ad::value_of(th[L.nu()]) > 2.0) || !(ad::value_of(th[L.xi()]) > 0.0)))
        return S(-std::numeric_limits<double>::infinity());
    FilterSeries<S> fs;
    if (!run_filter(r, L, th, fs)) return S(-std::numeric_limits<double>::infinity());
    return loglik_terms(fs, L, th);
}

/// Value and analytic gradient with respect to the natural parameters.
double loglik_gradient(std::span<const double> r, const ParamLayout& L, std::span<const double> th,
                       std::vector<double>& grad);

// ----------------------------------------------------------------------------
// Public, double-valued surface.

struct FilterOutput {
    std::vector<double> cond_mean;
    std::vector<double> cond_var;
    std::vector<double> std_resid;
};

/// Deterministic forward filter; std::nullopt signals failure (overflow of the
/// log-variance), which the optimizer treats as an infeasible point.
std::optional<FilterOutput> filter_arma_egarch(std::span<const double> returns, const ArmaParams& arma,
                                               const EgarchParams& egarch, const InnovationDist& dist);

double loglik_marginal(std::span<const double> returns, const MarginalParams& params);

/// Log-likelihood of already-filtered series (T may be 1).
double loglik_from_filtered(std::span<const double> cond_var, std::span<const double> std_resid,
                            const InnovationDist& dist);

double innovation_log_density(double eps, const InnovationDist& dist);
double innovation_cdf(double eps, const InnovationDist& dist);
double innovation_quantile(double p, const InnovationDist& dist);

/// E|eps| under the standardized law; throws DomainError for nu <= 2.
double skewt_absmoment(const InnovationDist& dist);

struct FitDiagnostics {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;
    std::string message;
    bool short_sample = false;  // T below the documented soft floor of 100
};

struct MarginalFit {
    MarginalParams params;
    std::vector<std::string> param_names;
    std::vector<double> std_errors;  // natural-parameter order, NaN if unavailable
    double loglik = 0.0;
    std::vector<double> cond_mean;
    std::vector<double> cond_var;
    std::vector<double> std_resid;
    std::vector<double> pit;
    FitDiagnostics diagnostics;
    ModelOrders orders;

    const ArmaParams& arma() const { return params.arma; }
    const EgarchParams& egarch() const { return params.egarch; }
    const InnovationDist& dist() const { return params.dist; }
};

struct MarginalConfig {
    ModelOrders orders;
    Family family = Family::skew_t;
    optim::Settings optimizer;
};

/// Thrown when the optimizer stops without meeting the gradient tolerance.
/// Carries the best parameters found and their filtered series.
class MarginalConvergenceError : public EstimationError {
public:
    MarginalConvergenceError(const std::string& what, MarginalFit best)
        : EstimationError(what), best_(std::move(best)) {}
    const MarginalFit& best() const { return best_; }

private:
    MarginalFit best_;
};

MarginalFit fit_marginal(std::span<const double> returns, const MarginalConfig& config);

/// Builds the fitted record (filtered series, PIT) for given parameters.
MarginalFit make_fit(std::span<const double> returns, const ModelOrders& orders, const MarginalParams& params);

/// u_t = F(eps_t), clamped to [eps_mach, 1 - eps_mach].
std::vector<double> pit_transform(const MarginalFit& fit);

/// Observed-information standard errors at `params` (natural parameters).
std::vector<double> standard_errors(std::span<const double> returns, const ParamLayout& L,
                                    std::span<const double> theta);

nlohmann::json to_json(const MarginalFit& fit);
/// Restores parameters and diagnostics, then re-filters `returns`.
MarginalFit marginal_fit_from_json(const nlohmann::json& j, std::span<const double> returns);

}  // namespace risknet::marginal
