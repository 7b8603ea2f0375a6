#include "copula/copula_dcc.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace risknet::copula {

ShockPair copula_shocks(std::span<const double> u1, std::span<const double> u2, double nu) {
    if (!(nu > 2.0)) throw DomainError("copula shocks require nu > 2");
    if (u1.size() != u2.size()) throw DataError("PIT series lengths differ");
    const double scale = std::sqrt(nu / (nu - 2.0));
    ShockPair out;
    out.first.resize(u1.size());
    out.second.resize(u2.size());
    for (std::size_t t = 0; t < u1.size(); ++t) {
        out.first[t] = stats::t_quantile(u1[t], nu) / scale;
        out.second[t] = stats::t_quantile(u2[t], nu) / scale;
    }
    return out;
}

Sym2 target_qbar(const ShockPair& s) {
    const std::size_t T = s.first.size();
    if (T == 0 || s.second.size() != T) throw DataError("shock series empty or of different length");
    Sym2 q{0.0, 0.0, 0.0};
    for (std::size_t t = 0; t < T; ++t) {
        q.q11 += s.first[t] * s.first[t];
        q.q12 += s.first[t] * s.second[t];
        q.q22 += s.second[t] * s.second[t];
    }
    const double inv_T = 1.0 / static_cast<double>(T);
    q.q11 *= inv_T;
    q.q12 *= inv_T;
    q.q22 *= inv_T;
    return q;
}

std::vector<double> dcc_filter(const ShockPair& shocks, const DccParams& params, const Sym2& qbar) {
    const std::size_t T = shocks.first.size();
    if (shocks.second.size() != T) throw DataError("shock series lengths differ");
    double persistence = 0.0;
    for (double x : params.c) persistence += x;
    for (double x : params.d) persistence += x;
    for (double x : params.c)
        if (x < 0.0) throw DomainError("DCC shock loadings must be non-negative");
    for (double x : params.d)
        if (x < 0.0) throw DomainError("DCC persistence terms must be non-negative");
    if (!(persistence < 1.0)) throw DomainError("DCC requires sum(c) + sum(d) < 1");
    if (!(qbar.q11 > 0.0 && qbar.q22 > 0.0 && qbar.q11 * qbar.q22 > qbar.q12 * qbar.q12))
        throw DomainError("Qbar must be symmetric positive definite");

    const std::size_t m = params.c.size(), n = params.d.size();
    const double w = 1.0 - persistence;
    std::vector<Sym2> lag_e(m, qbar), lag_q(n, qbar);
    std::vector<double> rho(T);
    for (std::size_t t = 0; t < T; ++t) {
        Sym2 q{w * qbar.q11, w * qbar.q12, w * qbar.q22};
        for (std::size_t j = 0; j < m; ++j) {
            q.q11 += params.c[j] * lag_e[j].q11;
            q.q12 += params.c[j] * lag_e[j].q12;
            q.q22 += params.c[j] * lag_e[j].q22;
        }
        for (std::size_t j = 0; j < n; ++j) {
            q.q11 += params.d[j] * lag_q[j].q11;
            q.q12 += params.d[j] * lag_q[j].q12;
            q.q22 += params.d[j] * lag_q[j].q22;
        }
        if (!(q.q11 > 0.0 && q.q22 > 0.0)) throw EstimationError("DCC recursion lost positive diagonal");
        rho[t] = q.correlation();
        if (m > 0) {
            std::rotate(lag_e.rbegin(), lag_e.rbegin() + 1, lag_e.rend());
            const double a = shocks.first[t], b = shocks.second[t];
            lag_e[0] = Sym2{a * a, a * b, b * b};
        }
        if (n > 0) {
            std::rotate(lag_q.rbegin(), lag_q.rbegin() + 1, lag_q.rend());
            lag_q[0] = q;
        }
    }
    return rho;
}

double tcopula_log_density(double u1, double u2, double rho, double nu) {
    if (!(nu > 2.0)) throw DomainError("t copula requires nu > 2");
    if (!(std::abs(rho) < 1.0)) throw DomainError("t copula correlation must lie in (-1, 1)");
    const double x1 = stats::t_quantile(u1, nu);
    const double x2 = stats::t_quantile(u2, nu);
    return detail::tcopula_log_density_x(x1, x2, rho, nu, detail::tcopula_log_constant(nu));
}

double loglik_tcopula_dcc(std::span<const double> u1, std::span<const double> u2, const DccParams& params) {
    return dcc_loglik<double>(u1, u2, params.c, params.d, params.nu);
}

double loglik_tcopula_dcc_gradient(std::span<const double> u1, std::span<const double> u2,
                                   const DccParams& params, std::vector<double>& grad) {
    const std::size_t m = params.c.size(), n = params.d.size();
    if (m + n + 1 > kMaxCopulaParams) throw ConfigError("DCC order too large");
    std::vector<CopulaDual> c(m), d(n);
    for (std::size_t j = 0; j < m; ++j) c[j] = CopulaDual::variable(params.c[j], j);
    for (std::size_t j = 0; j < n; ++j) d[j] = CopulaDual::variable(params.d[j], m + j);
    const CopulaDual nu = CopulaDual::variable(params.nu, m + n);
    const CopulaDual ll = dcc_loglik<CopulaDual>(u1, u2, c, d, nu);
    grad.assign(m + n + 1, 0.0);
    if (std::isfinite(ll.v))
        for (std::size_t i = 0; i < m + n + 1; ++i) grad[i] = ll.d[i];
    return ll.v;
}

DccFit make_pair_fit(std::span<const double> u1, std::span<const double> u2, const DccParams& params) {
    DccTrace<double> trace;
    DccFit fit;
    fit.params = params;
    fit.loglik = dcc_loglik<double>(u1, u2, params.c, params.d, params.nu, &trace);
    if (!std::isfinite(fit.loglik)) throw EstimationError("copula likelihood not finite at given parameters");
    fit.qbar = Sym2{trace.qbar11, trace.qbar12, trace.qbar22};
    fit.rho_path = std::move(trace.rho);
    fit.std_errors.assign(params.c.size() + params.d.size() + 1, std::numeric_limits<double>::quiet_NaN());
    fit.diagnostics.effectively_gaussian = params.nu > kNuUpper - 1.0;
    return fit;
}

namespace {

// Unconstrained (a_c.., a_d.., a_nu) -> (c.., d.., nu): the loadings and the
// residual weight 1 - sum c - sum d form a softmax with the residual's logit
// fixed at 0; nu is a scaled logistic on (2.05, 100).
template <class S>
void to_natural(std::span<const S> a, std::size_t m, std::size_t n, std::vector<S>& c, std::vector<S>& d, S& nu) {
    using std::exp;
    S denom(1.0);
    std::vector<S> w(m + n);
    for (std::size_t j = 0; j < m + n; ++j) {
        w[j] = exp(a[j]);
        denom += w[j];
    }
    c.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(m));
    d.assign(w.begin() + static_cast<std::ptrdiff_t>(m), w.end());
    for (auto& x : c) x /= denom;
    for (auto& x : d) x /= denom;
    nu = kNuLower + (kNuUpper - kNuLower) / (1.0 + exp(-a[m + n]));
}

std::vector<double> to_unconstrained(const DccParams& p) {
    double rest = 1.0;
    for (double x : p.c) rest -= x;
    for (double x : p.d) rest -= x;
    std::vector<double> a;
    for (double x : p.c) a.push_back(std::log(x / rest));
    for (double x : p.d) a.push_back(std::log(x / rest));
    const double s = (p.nu - kNuLower) / (kNuUpper - kNuLower);
    a.push_back(std::log(s / (1.0 - s)));
    return a;
}

std::vector<double> pair_std_errors(std::span<const double> u1, std::span<const double> u2, const DccParams& p) {
    const std::size_t m = p.c.size(), n = p.d.size(), k = m + n + 1;
    auto get = [&](const DccParams& q, std::size_t i) -> double {
        return i < m ? q.c[i] : (i < m + n ? q.d[i - m] : q.nu);
    };
    auto set = [&](DccParams& q, std::size_t i, double v) {
        if (i < m)
            q.c[i] = v;
        else if (i < m + n)
            q.d[i - m] = v;
        else
            q.nu = v;
    };
    const std::vector<double> nan(k, std::numeric_limits<double>::quiet_NaN());
    Eigen::MatrixXd H(k, k);
    std::vector<double> gp, gm;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = get(p, i);
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        DccParams plus = p, minus = p;
        set(plus, i, x + h);
        set(minus, i, x - h);
        const double fp = loglik_tcopula_dcc_gradient(u1, u2, plus, gp);
        const double fm = loglik_tcopula_dcc_gradient(u1, u2, minus, gm);
        if (!std::isfinite(fp) || !std::isfinite(fm)) return nan;
        for (std::size_t j = 0; j < k; ++j)
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[j] - gm[j]) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return nan;
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
    std::vector<double> se(k, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < k; ++i) {
        const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        if (v > 0.0 && std::isfinite(v)) se[i] = std::sqrt(v);
    }
    return se;
}

}  // namespace

DccFit fit_pair(std::span<const double> u1, std::span<const double> u2, const DccConfig& config) {
    if (u1.size() != u2.size()) throw DataError("PIT series lengths differ");
    if (u1.size() < 10) throw DataError("pair fit needs at least 10 observations");
    if (config.m < 0 || config.n < 0) throw ConfigError("DCC orders must be non-negative");
    const std::size_t m = static_cast<std::size_t>(config.m), n = static_cast<std::size_t>(config.n);
    if (m + n + 1 > kMaxCopulaParams) throw ConfigError("DCC order too large");
    for (std::size_t t = 0; t < u1.size(); ++t)
        if (!(u1[t] > 0.0 && u1[t] < 1.0 && u2[t] > 0.0 && u2[t] < 1.0))
            throw DataError("PIT values must lie strictly inside (0, 1)");

    DccParams start;
    start.c.assign(m, m > 0 ? 0.05 / static_cast<double>(m) : 0.0);
    start.d.assign(n, n > 0 ? 0.90 / static_cast<double>(n) : 0.0);
    start.nu = 8.0;
    const auto a0 = to_unconstrained(start);
    const std::size_t k = a0.size();
    const double inv_T = 1.0 / static_cast<double>(u1.size());

    optim::Objective objective = [&](const Eigen::VectorXd& a, Eigen::VectorXd& g) -> double {
        std::vector<CopulaDual> ad_a(k);
        for (std::size_t i = 0; i < k; ++i) ad_a[i] = CopulaDual::variable(a[static_cast<Eigen::Index>(i)], i);
        std::vector<CopulaDual> c, d;
        CopulaDual nu;
        to_natural<CopulaDual>(ad_a, m, n, c, d, nu);
        const CopulaDual ll = dcc_loglik<CopulaDual>(u1, u2, c, d, nu);
        if (!std::isfinite(ll.v)) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) g[static_cast<Eigen::Index>(i)] = -ll.d[i] * inv_T;
        return -ll.v * inv_T;
    };
    const auto res = optim::minimize_bfgs(
        objective, Eigen::Map<const Eigen::VectorXd>(a0.data(), static_cast<Eigen::Index>(k)), config.optimizer);

    std::vector<double> a_hat(res.x.data(), res.x.data() + k);
    DccParams best;
    to_natural<double>(a_hat, m, n, best.c, best.d, best.nu);

    DccFit fit = make_pair_fit(u1, u2, best);
    fit.std_errors = pair_std_errors(u1, u2, best);
    fit.diagnostics.converged = res.converged;
    fit.diagnostics.iterations = res.iterations;
    fit.diagnostics.evaluations = res.evaluations;
    fit.diagnostics.gradient_norm = res.gradient_norm;
    fit.diagnostics.message = res.message;
    if (!res.converged) throw PairConvergenceError("pair fit did not converge: " + res.message, std::move(fit));
    return fit;
}

namespace {

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
double number_or_nan(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

nlohmann::json to_json(const DccFit& fit) {
    nlohmann::json se = nlohmann::json::array();
    for (double x : fit.std_errors) se.push_back(number_or_null(x));
    const auto& d = fit.diagnostics;
    return {
        {"c", fit.params.c},
        {"d", fit.params.d},
        {"nu", fit.params.nu},
        {"qbar", {fit.qbar.q11, fit.qbar.q12, fit.qbar.q22}},
        {"loglik", number_or_null(fit.loglik)},
        {"std_errors", se},
        {"rho_path", fit.rho_path},
        {"diagnostics",
         {{"converged", d.converged},
          {"iterations", d.iterations},
          {"evaluations", d.evaluations},
          {"gradient_norm", number_or_null(d.gradient_norm)},
          {"message", d.message},
          {"effectively_gaussian", d.effectively_gaussian}}},
    };
}

DccFit dcc_fit_from_json(const nlohmann::json& j) {
    DccFit fit;
    fit.params.c = j.at("c").get<std::vector<double>>();
    fit.params.d = j.at("d").get<std::vector<double>>();
    fit.params.nu = j.at("nu").get<double>();
    const auto& q = j.at("qbar");
    fit.qbar = Sym2{q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>()};
    fit.loglik = number_or_nan(j.at("loglik"));
    for (const auto& x : j.at("std_errors")) fit.std_errors.push_back(number_or_nan(x));
    fit.rho_path = j.at("rho_path").get<std::vector<double>>();
    const auto& d = j.at("diagnostics");
    fit.diagnostics.converged = d.at("converged").get<bool>();
    fit.diagnostics.iterations = d.at("iterations").get<int>();
    fit.diagnostics.evaluations = d.at("evaluations").get<int>();
    fit.diagnostics.gradient_norm = number_or_nan(d.at("gradient_norm"));
    fit.diagnostics.message = d.at("message").get<std::string>();
    fit.diagnostics.effectively_gaussian = d.at("effectively_gaussian").get<bool>();
    return fit;
}

}  // namespace risknet::copula
