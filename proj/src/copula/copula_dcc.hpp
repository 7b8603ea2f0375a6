#pragma once

// Bivariate Student-t copula whose correlation follows a scalar DCC(m,n)
// recursion on the standardized copula shocks:
//
//   x_t   = T_nu^{-1}(u_t)                       (componentwise)
//   e_t   = x_t / sqrt(nu / (nu - 2))            (unit-variance shocks)
//   Q_t   = (1 - sum c - sum d) Qbar + sum_j c_j e_{t-j} e'_{t-j} + sum_j d_j Q_{t-j}
//   R_t   = diag(Q_t)^{-1/2} Q_t diag(Q_t)^{-1/2}
//
// Qbar is targeted to the sample second moment of e (not estimated); pre-sample
// Q and e e' are set to Qbar, so Q_1 = Qbar.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core/dual.hpp"
#include "core/error.hpp"
#include "core/optimizer.hpp"
#include "core/student_t.hpp"
#include "json.hpp"

namespace risknet::copula {

struct DccParams {
    std::vector<double> c;  // shock loadings, length m
    std::vector<double> d;  // persistence, length n
    double nu = 8.0;        // copula degrees of freedom
};

struct Sym2 {
    double q11 = 1.0;
    double q12 = 0.0;
    double q22 = 1.0;

    double correlation() const { return q12 / std::sqrt(q11 * q22); }
};

struct ShockPair {
    std::vector<double> first;
    std::vector<double> second;
};

struct PairDiagnostics {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;
    std::string message;
    bool effectively_gaussian = false;  // nu at the upper search bound
};

struct DccFit {
    DccParams params;
    Sym2 qbar;
    std::vector<double> rho_path;
    double loglik = 0.0;
    std::vector<double> std_errors;  // order: c.., d.., nu
    PairDiagnostics diagnostics;
};

struct DccConfig {
    int m = 1;
    int n = 1;
    optim::Settings optimizer;
};

inline constexpr double kNuLower = 2.05;
inline constexpr double kNuUpper = 100.0;
inline constexpr std::size_t kMaxCopulaParams = 8;
using CopulaDual = ad::Dual<kMaxCopulaParams>;

/// Unit-variance Student-t shocks T_nu^{-1}(u) / sqrt(nu/(nu-2)).
ShockPair copula_shocks(std::span<const double> u1, std::span<const double> u2, double nu);

/// Correlation targeting: sample second-moment matrix of the shocks.
Sym2 target_qbar(const ShockPair& shocks);

/// Conditional correlation path R_t(1,2), seeded with Q_1 = Qbar.
std::vector<double> dcc_filter(const ShockPair& shocks, const DccParams& params, const Sym2& qbar);

/// ln c_nu(u1, u2; rho) of the bivariate t copula.
double tcopula_log_density(double u1, double u2, double rho, double nu);

/// Copula log-likelihood with Qbar targeted from the shocks implied by params.nu.
/// Returns -inf for infeasible parameters.
double loglik_tcopula_dcc(std::span<const double> u1, std::span<const double> u2, const DccParams& params);

/// Value plus analytic gradient in (c.., d.., nu).
double loglik_tcopula_dcc_gradient(std::span<const double> u1, std::span<const double> u2,
                                   const DccParams& params, std::vector<double>& grad);

/// Maximizes the copula likelihood over (c, d, nu) with Qbar targeting.
/// Throws PairConvergenceError when the optimizer stops short of tolerance.
DccFit fit_pair(std::span<const double> u1, std::span<const double> u2, const DccConfig& config);

/// Fit record (targeted Qbar, rho path, log-likelihood) at given parameters.
DccFit make_pair_fit(std::span<const double> u1, std::span<const double> u2, const DccParams& params);

class PairConvergenceError : public EstimationError {
public:
    PairConvergenceError(const std::string& what, DccFit best) : EstimationError(what), best_(std::move(best)) {}
    const DccFit& best() const { return best_; }

private:
    DccFit best_;
};

nlohmann::json to_json(const DccFit& fit);
DccFit dcc_fit_from_json(const nlohmann::json& j);

// ----------------------------------------------------------------------------
// Generic likelihood kernel.

namespace detail {

template <class S>
S tcopula_log_constant(const S& nu) {
    return ad::lgamma(0.5 * (nu + 2.0)) + ad::lgamma(0.5 * nu) - 2.0 * ad::lgamma(0.5 * (nu + 1.0));
}

// Bivariate t-copula log density given the t quantiles x1, x2; the summands are
// arranged so that swapping the two margins yields bit-identical results.
template <class S>
S tcopula_log_density_x(const S& x1, const S& x2, const S& rho, const S& nu, const S& log_const) {
    using std::log;
    using std::log1p;
    const S one_m_r2 = 1.0 - rho * rho;
    const S quad = (x1 * x1 + x2 * x2) - 2.0 * rho * (x1 * x2);
    const S margins = log1p(x1 * x1 / nu) + log1p(x2 * x2 / nu);
    return log_const - 0.5 * log(one_m_r2) - 0.5 * (nu + 2.0) * log1p(quad / (nu * one_m_r2)) +
           0.5 * (nu + 1.0) * margins;
}

}  // namespace detail

template <class S>
struct DccTrace {
    S qbar11, qbar12, qbar22;
    std::vector<double> rho;
};

/// Copula log-likelihood for parameters (c, d, nu) of any scalar type.
/// `trace`, when given, receives the targeted Qbar and the rho path.
template <class S>
S dcc_loglik(std::span<const double> u1, std::span<const double> u2, std::span<const S> c, std::span<const S> d,
             const S& nu, DccTrace<S>* trace = nullptr) {
    using std::sqrt;
    const S neg_inf(-std::numeric_limits<double>::infinity());
    const std::size_t T = u1.size();
    if (u2.size() != T) throw DataError("PIT series lengths differ");
    if (!(ad::value_of(nu) > 2.0)) return neg_inf;
    S persistence(0.0);
    for (const auto& x : c) {
        if (ad::value_of(x) < 0.0) return neg_inf;
        persistence += x;
    }
    for (const auto& x : d) {
        if (ad::value_of(x) < 0.0) return neg_inf;
        persistence += x;
    }
    if (!(ad::value_of(persistence) < 1.0)) return neg_inf;

    std::vector<S> x1(T), x2(T), e1(T), e2(T);
    const S scale = sqrt(nu / (nu - 2.0));
    S q11(0.0), q12(0.0), q22(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        x1[t] = stats::t_quantile<S>(u1[t], nu);
        x2[t] = stats::t_quantile<S>(u2[t], nu);
        e1[t] = x1[t] / scale;
        e2[t] = x2[t] / scale;
        q11 += e1[t] * e1[t];
        q12 += e1[t] * e2[t];
        q22 += e2[t] * e2[t];
    }
    const double inv_T = 1.0 / static_cast<double>(T);
    q11 *= inv_T;
    q12 *= inv_T;
    q22 *= inv_T;
    if (trace) {
        trace->qbar11 = q11;
        trace->qbar12 = q12;
        trace->qbar22 = q22;
        trace->rho.assign(T, 0.0);
    }

    const std::size_t m = c.size(), n = d.size();
    const S w = 1.0 - persistence;
    // Lag buffers (index 0 = most recent); pre-sample values equal Qbar.
    std::vector<S> lag_e11(m, q11), lag_e12(m, q12), lag_e22(m, q22);
    std::vector<S> lag_q11(n, q11), lag_q12(n, q12), lag_q22(n, q22);

    const S log_const = detail::tcopula_log_constant(nu);
    S total(0.0);
    for (std::size_t t = 0; t < T; ++t) {
        S a11 = w * q11, a12 = w * q12, a22 = w * q22;
        for (std::size_t j = 0; j < m; ++j) {
            a11 += c[j] * lag_e11[j];
            a12 += c[j] * lag_e12[j];
            a22 += c[j] * lag_e22[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            a11 += d[j] * lag_q11[j];
            a12 += d[j] * lag_q12[j];
            a22 += d[j] * lag_q22[j];
        }
        if (!(ad::value_of(a11) > 0.0) || !(ad::value_of(a22) > 0.0)) return neg_inf;
        const S rho = a12 / sqrt(a11 * a22);
        if (!(std::abs(ad::value_of(rho)) < 1.0)) return neg_inf;
        if (trace) trace->rho[t] = ad::value_of(rho);
        total += detail::tcopula_log_density_x(x1[t], x2[t], rho, nu, log_const);

        if (m > 0) {
            for (std::size_t j = m - 1; j > 0; --j) {
                lag_e11[j] = lag_e11[j - 1];
                lag_e12[j] = lag_e12[j - 1];
                lag_e22[j] = lag_e22[j - 1];
            }
            lag_e11[0] = e1[t] * e1[t];
            lag_e12[0] = e1[t] * e2[t];
            lag_e22[0] = e2[t] * e2[t];
        }
        if (n > 0) {
            for (std::size_t j = n - 1; j > 0; --j) {
                lag_q11[j] = lag_q11[j - 1];
                lag_q12[j] = lag_q12[j - 1];
                lag_q22[j] = lag_q22[j - 1];
            }
            lag_q11[0] = a11;
            lag_q12[0] = a12;
            lag_q22[0] = a22;
        }
    }
    return total;
}

}  // namespace risknet::copula
