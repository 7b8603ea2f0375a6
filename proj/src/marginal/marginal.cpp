#include "marginal/marginal.hpp"

#include <algorithm>
#include <cfloat>
#include <numeric>

#include <Eigen/Dense>

#include "core/error.hpp"

namespace risknet::marginal {

std::string to_string(Family f) { return f == Family::normal ? "normal" : "skewt"; }

Family family_from_string(const std::string& s) {
    if (s == "normal") return Family::normal;
    if (s == "skewt" || s == "skew-t" || s == "sstd") return Family::skew_t;
    throw ConfigError("unknown innovation family '" + s + "' (expected normal or skewt)");
}

ParamLayout::ParamLayout(ModelOrders orders, Family family) : orders_(orders), family_(family) {
    if (orders.p < 0 || orders.q < 0 || orders.pv < 0 || orders.qv < 0)
        throw ConfigError("model orders must be non-negative");
    size_ = static_cast<std::size_t>(2 + orders.p + orders.q + 2 * orders.pv + orders.qv) +
            (family == Family::skew_t ? 2 : 0);
    if (size_ > kMaxMarginalParams)
        throw ConfigError("model has " + std::to_string(size_) + " parameters; at most " +
                          std::to_string(kMaxMarginalParams) + " are supported");
}

std::vector<double> ParamLayout::pack(const MarginalParams& p) const {
    const auto& o = orders_;
    if (p.arma.phi.size() != static_cast<std::size_t>(o.p) || p.arma.theta.size() != static_cast<std::size_t>(o.q) ||
        p.egarch.alpha.size() != static_cast<std::size_t>(o.pv) ||
        p.egarch.gamma.size() != static_cast<std::size_t>(o.pv) || p.egarch.beta.size() != static_cast<std::size_t>(o.qv))
        throw ConfigError("parameter vector lengths do not match the model orders");
    std::vector<double> th(size_);
    th[mu0()] = p.arma.mu0;
    for (int j = 0; j < o.p; ++j) th[phi(j)] = p.arma.phi[j];
    for (int j = 0; j < o.q; ++j) th[theta(j)] = p.arma.theta[j];
    th[omega()] = p.egarch.omega;
    for (int j = 0; j < o.pv; ++j) {
        th[alpha(j)] = p.egarch.alpha[j];
        th[gamma(j)] = p.egarch.gamma[j];
    }
    for (int j = 0; j < o.qv; ++j) th[beta(j)] = p.egarch.beta[j];
    if (family_ == Family::skew_t) {
        th[nu()] = p.dist.shape;
        th[xi()] = p.dist.skew;
    }
    return th;
}

MarginalParams ParamLayout::unpack(std::span<const double> th) const {
    const auto& o = orders_;
    MarginalParams p;
    p.arma.mu0 = th[mu0()];
    for (int j = 0; j < o.p; ++j) p.arma.phi.push_back(th[phi(j)]);
    for (int j = 0; j < o.q; ++j) p.arma.theta.push_back(th[theta(j)]);
    p.egarch.omega = th[omega()];
    for (int j = 0; j < o.pv; ++j) {
        p.egarch.alpha.push_back(th[alpha(j)]);
        p.egarch.gamma.push_back(th[gamma(j)]);
    }
    for (int j = 0; j < o.qv; ++j) p.egarch.beta.push_back(th[beta(j)]);
    p.dist.family = family_;
    if (family_ == Family::skew_t) {
        p.dist.shape = th[nu()];
        p.dist.skew = th[xi()];
    }
    return p;
}

std::vector<std::string> ParamLayout::names() const {
    std::vector<std::string> n(size_);
    const auto& o = orders_;
    n[mu0()] = "mu0";
    for (int j = 0; j < o.p; ++j) n[phi(j)] = "phi" + std::to_string(j + 1);
    for (int j = 0; j < o.q; ++j) n[theta(j)] = "theta" + std::to_string(j + 1);
    n[omega()] = "omega";
    for (int j = 0; j < o.pv; ++j) {
        n[alpha(j)] = "alpha" + std::to_string(j + 1);
        n[gamma(j)] = "gamma" + std::to_string(j + 1);
    }
    for (int j = 0; j < o.qv; ++j) n[beta(j)] = "beta" + std::to_string(j + 1);
    if (family_ == Family::skew_t) {
        n[nu()] = "nu";
        n[xi()] = "xi";
    }
    return n;
}

namespace detail {

std::vector<double> ar_to_pacf(std::vector<double> phi) {
    std::vector<double> r(phi.size());
    for (std::size_t k = phi.size(); k-- > 0;) {
        const double rk = phi[k];
        if (!(std::abs(rk) < 1.0)) throw DomainError("AR polynomial outside the stationary region");
        r[k] = rk;
        std::vector<double> prev(k);
        for (std::size_t j = 0; j < k; ++j) prev[j] = (phi[j] + rk * phi[k - 1 - j]) / (1.0 - rk * rk);
        phi = std::move(prev);
    }
    return r;
}

}  // namespace detail

std::vector<double> to_unconstrained(const ParamLayout& L, std::span<const double> natural) {
    const auto& o = L.orders();
    std::vector<double> u(natural.begin(), natural.end());
    auto atanh_block = [&](std::size_t first, int n, double sign) {
        std::vector<double> coef(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) coef[j] = sign * natural[first + j];
        const auto r = detail::ar_to_pacf(coef);
        for (int j = 0; j < n; ++j) u[first + j] = std::atanh(r[j]);
    };
    if (o.p > 0) atanh_block(L.phi(0), o.p, 1.0);
    if (o.q > 0) atanh_block(L.theta(0), o.q, -1.0);
    if (o.qv > 0) atanh_block(L.beta(0), o.qv, 1.0);
    if (L.family() == Family::skew_t) {
        const double nu = natural[L.nu()];
        const double xi = natural[L.xi()];
        if (!(nu > detail::kNuLower && nu < detail::kNuUpper))
            throw DomainError("nu outside (2.05, 100)");
        if (!(xi > 0.0)) throw DomainError("xi must be positive");
        const double s = (nu - detail::kNuLower) / (detail::kNuUpper - detail::kNuLower);
        u[L.nu()] = std::log(s / (1.0 - s));
        u[L.xi()] = std::log(xi);
    }
    return u;
}

double loglik_gradient(std::span<const double> r, const ParamLayout& L, std::span<const double> th,
                       std::vector<double>& grad) {
    std::vector<MarginalDual> x(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) x[i] = MarginalDual::variable(th[i], i);
    const MarginalDual ll = loglik<MarginalDual>(r, L, x);
    grad.assign(th.size(), 0.0);
    if (std::isfinite(ll.v))
        for (std::size_t i = 0; i < th.size(); ++i) grad[i] = ll.d[i];
    return ll.v;
}

namespace {

ModelOrders orders_of(const ArmaParams& arma, const EgarchParams& egarch) {
    if (egarch.alpha.size() != egarch.gamma.size())
        throw ConfigError("alpha and gamma must have the same number of lags");
    return ModelOrders{static_cast<int>(arma.phi.size()), static_cast<int>(arma.theta.size()),
                       static_cast<int>(egarch.alpha.size()), static_cast<int>(egarch.beta.size())};
}

void check_dist(const InnovationDist& dist) {
    if (dist.family == Family::skew_t) {
        if (!(dist.shape > 2.0)) throw DomainError("skew-t requires nu > 2");
        if (!(dist.skew > 0.0)) throw DomainError("skew-t requires xi > 0");
    }
}

}  // namespace

std::optional<FilterOutput> filter_arma_egarch(std::span<const double> returns, const ArmaParams& arma,
                                               const EgarchParams& egarch, const InnovationDist& dist) {
    check_dist(dist);
    const ParamLayout L(orders_of(arma, egarch), dist.family);
    const auto th = L.pack(MarginalParams{arma, egarch, dist});
    FilterSeries<double> fs;
    if (!run_filter<double>(returns, L, th, fs)) return std::nullopt;
    return FilterOutput{std::move(fs.cond_mean), std::move(fs.cond_var), std::move(fs.std_resid)};
}

double loglik_marginal(std::span<const double> returns, const MarginalParams& params) {
    check_dist(params.dist);
    const ParamLayout L(orders_of(params.arma, params.egarch), params.dist.family);
    const auto th = L.pack(params);
    return loglik<double>(returns, L, th);
}

double loglik_from_filtered(std::span<const double> cond_var, std::span<const double> std_resid,
                            const InnovationDist& dist) {
    check_dist(dist);
    if (cond_var.size() != std_resid.size()) throw DataError("series length mismatch");
    double total = 0.0;
    for (std::size_t t = 0; t < cond_var.size(); ++t)
        total += innovation_log_density(std_resid[t], dist) - 0.5 * std::log(cond_var[t]);
    return total;
}

double innovation_log_density(double eps, const InnovationDist& dist) {
    if (dist.family == Family::normal) return normal_log_density(eps);
    check_dist(dist);
    return skewt_log_density(eps, skewt_shape(dist.shape, dist.skew));
}

double skewt_cdf(double eps, double nu, double xi) {
    const SkewTShape<double> s = skewt_shape(nu, xi);
    const double z = s.mu + s.sigma * eps;
    const double xi2 = xi * xi;
    if (z < 0.0) return 2.0 / (1.0 + xi2) * detail::std_t_cdf(z * xi, nu);
    return 1.0 / (1.0 + xi2) + 2.0 * xi2 / (1.0 + xi2) * (detail::std_t_cdf(z / xi, nu) - 0.5);
}

double skewt_quantile(double p, double nu, double xi) {
    const SkewTShape<double> s = skewt_shape(nu, xi);
    const double xi2 = xi * xi;
    const double scale = std::sqrt(nu / (nu - 2.0));
    const double split = 1.0 / (1.0 + xi2);
    double z;
    if (p < split) {
        z = stats::t_quantile(p * (1.0 + xi2) / 2.0, nu) / scale / xi;
    } else {
        const double pg = 0.5 + (p - split) * (1.0 + xi2) / (2.0 * xi2);
        z = xi * stats::t_quantile(std::min(pg, 1.0), nu) / scale;
    }
    return (z - s.mu) / s.sigma;
}

double innovation_cdf(double eps, const InnovationDist& dist) {
    if (dist.family == Family::normal) return stats::normal_cdf(eps);
    check_dist(dist);
    return skewt_cdf(eps, dist.shape, dist.skew);
}

double innovation_quantile(double p, const InnovationDist& dist) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must be in (0,1)");
    if (dist.family == Family::normal) return stats::normal_quantile(p);
    check_dist(dist);
    return skewt_quantile(p, dist.shape, dist.skew);
}

double skewt_absmoment(const InnovationDist& dist) {
    if (dist.family == Family::normal) return normal_abs_moment();
    return skewt_abs_moment(dist.shape, dist.skew);
}

// ----------------------------------------------------------------------------

namespace {

Eigen::MatrixXd natural_hessian(std::span<const double> r, const ParamLayout& L, std::span<const double> th) {
    const std::size_t n = th.size();
    Eigen::MatrixXd H(n, n);
    std::vector<double> plus(th.begin(), th.end()), minus(th.begin(), th.end());
    std::vector<double> gp, gm;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(th[i]));
        plus[i] = th[i] + h;
        minus[i] = th[i] - h;
        const double fp = loglik_gradient(r, L, plus, gp);
        const double fm = loglik_gradient(r, L, minus, gm);
        plus[i] = minus[i] = th[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            H.setConstant(std::numeric_limits<double>::quiet_NaN());
            return H;
        }
        for (std::size_t j = 0; j < n; ++j) H(i, j) = (gp[j] - gm[j]) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

std::vector<double> std_errors_from_cov(const Eigen::MatrixXd& cov) {
    std::vector<double> se(static_cast<std::size_t>(cov.rows()), std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        if (cov(i, i) > 0.0 && std::isfinite(cov(i, i))) se[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
    return se;
}

std::optional<Eigen::MatrixXd> covariance_from_hessian(const Eigen::MatrixXd& H) {
    if (!H.allFinite()) return std::nullopt;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
    if (!cov.allFinite()) return std::nullopt;
    return cov;
}

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
    const double m = mean_of(x);
    double v = 0.0;
    for (double e : x) v += (e - m) * (e - m);
    return v / static_cast<double>(x.size());
}

}  // namespace

std::vector<double> standard_errors(std::span<const double> returns, const ParamLayout& L,
                                    std::span<const double> theta) {
    const auto cov = covariance_from_hessian(natural_hessian(returns, L, theta));
    if (!cov) return std::vector<double>(theta.size(), std::numeric_limits<double>::quiet_NaN());
    return std_errors_from_cov(*cov);
}

std::vector<double> pit_transform(const MarginalFit& fit) {
    std::vector<double> u(fit.std_resid.size());
    for (std::size_t t = 0; t < u.size(); ++t)
        u[t] = std::clamp(innovation_cdf(fit.std_resid[t], fit.params.dist), DBL_EPSILON, 1.0 - DBL_EPSILON);
    return u;
}

MarginalFit make_fit(std::span<const double> returns, const ModelOrders& orders, const MarginalParams& params) {
    const ParamLayout L(orders, params.dist.family);
    const auto th = L.pack(params);
    FilterSeries<double> fs;
    if (!run_filter<double>(returns, L, th, fs))
        throw EstimationError("marginal filter failed (log-variance overflow)");
    MarginalFit fit;
    fit.params = params;
    fit.orders = orders;
    fit.param_names = L.names();
    fit.std_errors.assign(L.size(), std::numeric_limits<double>::quiet_NaN());
    fit.loglik = loglik_terms<double>(fs, L, th);
    fit.cond_mean = std::move(fs.cond_mean);
    fit.cond_var = std::move(fs.cond_var);
    fit.std_resid = std::move(fs.std_resid);
    fit.pit = pit_transform(fit);
    return fit;
}

MarginalFit fit_marginal(std::span<const double> returns, const MarginalConfig& config) {
    const ParamLayout L(config.orders, config.family);
    const auto& o = config.orders;
    const std::size_t T = returns.size();
    if (T < 10) throw DataError("marginal fit needs at least 10 observations");
    for (double x : returns)
        if (!std::isfinite(x)) throw DataError("return series contains non-finite values");
    const double var = variance_of(returns);
    if (!(var > 0.0))
        throw EstimationError("degenerate return series: zero sample variance, variance targeting impossible");

    // Optimize on the series rescaled to unit variance; parameters are mapped
    // back exactly (mu0 scales with s, omega shifts by 2 ln s (1 - sum beta)).
    const double s = std::sqrt(var);
    std::vector<double> scaled(T);
    for (std::size_t t = 0; t < T; ++t) scaled[t] = returns[t] / s;

    MarginalParams start;
    start.arma.mu0 = mean_of(scaled);
    start.arma.phi.assign(static_cast<std::size_t>(o.p), 0.0);
    start.arma.theta.assign(static_cast<std::size_t>(o.q), 0.0);
    if (o.p > 0) start.arma.phi[0] = 0.1;
    if (o.q > 0) start.arma.theta[0] = 0.05;
    start.egarch.omega = 0.9 * std::log(variance_of(scaled));
    start.egarch.alpha.assign(static_cast<std::size_t>(o.pv), 0.0);
    start.egarch.gamma.assign(static_cast<std::size_t>(o.pv), 0.0);
    if (o.pv > 0) start.egarch.gamma[0] = 0.1;
    start.egarch.beta.assign(static_cast<std::size_t>(o.qv), 0.0);
    if (o.qv == 1) start.egarch.beta[0] = 0.9;
    if (o.qv >= 2) {
        start.egarch.beta[0] = 0.8;
        start.egarch.beta[1] = 0.1;
    }
    start.dist = InnovationDist{config.family, 8.0, 1.0};

    const auto u0 = to_unconstrained(L, L.pack(start));
    const std::size_t n = L.size();
    const double inv_T = 1.0 / static_cast<double>(T);
    optim::Objective objective = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) -> double {
        std::vector<MarginalDual> ud(n);
        for (std::size_t i = 0; i < n; ++i) ud[i] = MarginalDual::variable(u[static_cast<Eigen::Index>(i)], i);
        const auto th = to_natural<MarginalDual>(L, ud);
        const MarginalDual ll = loglik<MarginalDual>(scaled, L, th);
        if (!std::isfinite(ll.v)) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) g[static_cast<Eigen::Index>(i)] = -ll.d[i] * inv_T;
        return -ll.v * inv_T;
    };
    const auto res = optim::minimize_bfgs(
        objective, Eigen::Map<const Eigen::VectorXd>(u0.data(), static_cast<Eigen::Index>(n)), config.optimizer);

    std::vector<double> u_hat(res.x.data(), res.x.data() + n);
    const auto th_scaled = to_natural<double>(L, u_hat);

    std::vector<double> th_raw = th_scaled;
    const double log_s2 = 2.0 * std::log(s);
    double beta_sum = 0.0;
    for (int j = 0; j < o.qv; ++j) beta_sum += th_scaled[L.beta(j)];
    th_raw[L.mu0()] = s * th_scaled[L.mu0()];
    th_raw[L.omega()] = th_scaled[L.omega()] + log_s2 * (1.0 - beta_sum);

    MarginalFit fit = make_fit(returns, o, L.unpack(th_raw));

    // Covariance on the scaled problem, carried to raw units by the Jacobian.
    if (const auto cov = covariance_from_hessian(natural_hessian(scaled, L, th_scaled))) {
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        J(static_cast<Eigen::Index>(L.mu0()), static_cast<Eigen::Index>(L.mu0())) = s;
        for (int j = 0; j < o.qv; ++j)
            J(static_cast<Eigen::Index>(L.omega()), static_cast<Eigen::Index>(L.beta(j))) = -log_s2;
        fit.std_errors = std_errors_from_cov(J * (*cov) * J.transpose());
    }

    fit.diagnostics.converged = res.converged;
    fit.diagnostics.iterations = res.iterations;
    fit.diagnostics.evaluations = res.evaluations;
    fit.diagnostics.gradient_norm = res.gradient_norm;
    fit.diagnostics.message = res.message;
    fit.diagnostics.short_sample = T < 100;
    if (!res.converged)
        throw MarginalConvergenceError("marginal fit did not converge: " + res.message, std::move(fit));
    return fit;
}

// ----------------------------------------------------------------------------

namespace {

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
double number_or_nan(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

nlohmann::json to_json(const MarginalFit& fit) {
    const ParamLayout L(fit.orders, fit.params.dist.family);
    const auto th = L.pack(fit.params);
    const auto names = L.names();
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json se = nlohmann::json::object();
    for (std::size_t i = 0; i < th.size(); ++i) {
        params[names[i]] = th[i];
        se[names[i]] = number_or_null(i < fit.std_errors.size() ? fit.std_errors[i]
                                                                : std::numeric_limits<double>::quiet_NaN());
    }
    const auto& d = fit.diagnostics;
    return {
        {"family", to_string(fit.params.dist.family)},
        {"orders", {{"p", fit.orders.p}, {"q", fit.orders.q}, {"pv", fit.orders.pv}, {"qv", fit.orders.qv}}},
        {"params", params},
        {"std_errors", se},
        {"loglik", number_or_null(fit.loglik)},
        {"diagnostics",
         {{"converged", d.converged},
          {"iterations", d.iterations},
          {"evaluations", d.evaluations},
          {"gradient_norm", number_or_null(d.gradient_norm)},
          {"message", d.message},
          {"short_sample", d.short_sample}}},
    };
}

MarginalFit marginal_fit_from_json(const nlohmann::json& j, std::span<const double> returns) {
    const ModelOrders orders{j.at("orders").at("p").get<int>(), j.at("orders").at("q").get<int>(),
                             j.at("orders").at("pv").get<int>(), j.at("orders").at("qv").get<int>()};
    const ParamLayout L(orders, family_from_string(j.at("family").get<std::string>()));
    const auto names = L.names();
    std::vector<double> th(L.size()), se(L.size());
    for (std::size_t i = 0; i < th.size(); ++i) {
        th[i] = j.at("params").at(names[i]).get<double>();
        se[i] = number_or_nan(j.at("std_errors").at(names[i]));
    }
    MarginalFit fit = make_fit(returns, orders, L.unpack(th));
    fit.std_errors = std::move(se);
    const auto& d = j.at("diagnostics");
    fit.diagnostics.converged = d.at("converged").get<bool>();
    fit.diagnostics.iterations = d.at("iterations").get<int>();
    fit.diagnostics.evaluations = d.at("evaluations").get<int>();
    fit.diagnostics.gradient_norm = number_or_nan(d.at("gradient_norm"));
    fit.diagnostics.message = d.at("message").get<std::string>();
    fit.diagnostics.short_sample = d.at("short_sample").get<bool>();
    return fit;
}

}  // namespace risknet::marginal
