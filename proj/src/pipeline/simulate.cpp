#include "pipeline/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "core/error.hpp"
#include "core/student_t.hpp"

namespace risknet::sim {

using marginal::Family;

marginal::MarginalParams SimSpec::default_marginal_truth() {
    marginal::MarginalParams p;
    p.arma.mu0 = 0.001;
    p.arma.phi = {0.2};
    p.arma.theta = {-0.1};
    p.egarch.omega = -0.3;
    // Lag polynomials of alpha, gamma and beta have well separated roots, so the
    // eGARCH(2,2) split is identified.
    p.egarch.alpha = {-0.06, 0.03};
    p.egarch.gamma = {0.2, -0.12};
    p.egarch.beta = {0.8, 0.15};
    p.dist = {Family::skew_t, 7.0, 1.1};
    return p;
}

namespace {

void check_marginal(const marginal::MarginalParams& p, const marginal::ModelOrders& o) {
    if (p.arma.phi.size() != static_cast<std::size_t>(o.p) || p.arma.theta.size() != static_cast<std::size_t>(o.q) ||
        p.egarch.alpha.size() != static_cast<std::size_t>(o.pv) ||
        p.egarch.gamma.size() != static_cast<std::size_t>(o.pv) ||
        p.egarch.beta.size() != static_cast<std::size_t>(o.qv))
        throw ConfigError("marginal truth does not match the model orders");
    double sb = 0.0;
    for (double b : p.egarch.beta) sb += b;
    if (!(std::abs(sb) < 1.0)) throw ConfigError("marginal truth needs |sum beta| < 1");
    double sp = 0.0;
    for (double f : p.arma.phi) sp += std::abs(f);
    if (!(sp < 1.0)) throw ConfigError("marginal truth needs a stationary AR part");
    if (p.dist.family == Family::skew_t && !(p.dist.shape > 2.0 && p.dist.skew > 0.0))
        throw ConfigError("skew-t truth needs nu > 2 and xi > 0");
}

void check_dcc(double c, double d) {
    if (!(c >= 0.0 && d >= 0.0)) throw ConfigError("DCC truth needs c, d >= 0");
    if (!(c + d < 1.0)) throw ConfigError("DCC truth needs c + d < 1");
}

Eigen::MatrixXd base_matrix(const SimSpec& s) {
    const auto k = static_cast<Eigen::Index>(s.assets);
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            m(i, j) = i == j ? 1.0
                             : s.base_global + (1.0 - s.base_global) *
                                                   std::pow(s.base_chain, static_cast<double>(std::abs(i - j)));
    return m;
}

Eigen::MatrixXd stress_matrix(const SimSpec& s, const StressWindow& w) {
    const auto k = static_cast<Eigen::Index>(s.assets);
    Eigen::VectorXd lambda = Eigen::VectorXd::Constant(k, w.loading);
    lambda(static_cast<Eigen::Index>(w.hub)) = w.hub_loading;
    Eigen::MatrixXd m = lambda * lambda.transpose();
    m.diagonal().setOnes();
    return m;
}

// Conditional mean/variance recursion driven by given innovations.
class MarginalSimulator {
public:
    MarginalSimulator(const marginal::MarginalParams& p, const marginal::ModelOrders& o) : p_(p) {
        double sp = 0.0, sb = 0.0;
        for (double f : p.arma.phi) sp += f;
        for (double b : p.egarch.beta) sb += b;
        r_.assign(static_cast<std::size_t>(o.p), p.arma.mu0 / (1.0 - sp));
        y_.assign(static_cast<std::size_t>(o.q), 0.0);
        e_.assign(static_cast<std::size_t>(o.pv), 0.0);
        lh_.assign(static_cast<std::size_t>(o.qv), p.egarch.omega / (1.0 - sb));
        e_abs_ = marginal::skewt_absmoment(p.dist);
    }

    double step(double eps) {
        double m = p_.arma.mu0;
        for (std::size_t j = 0; j < r_.size(); ++j) m += p_.arma.phi[j] * r_[j];
        for (std::size_t j = 0; j < y_.size(); ++j) m += p_.arma.theta[j] * y_[j];
        double lh = p_.egarch.omega;
        for (std::size_t j = 0; j < e_.size(); ++j)
            lh += p_.egarch.alpha[j] * e_[j] + p_.egarch.gamma[j] * (std::abs(e_[j]) - e_abs_);
        for (std::size_t j = 0; j < lh_.size(); ++j) lh += p_.egarch.beta[j] * lh_[j];
        const double y = std::exp(0.5 * lh) * eps;
        const double r = m + y;
        push(r_, r);
        push(y_, y);
        push(e_, eps);
        push(lh_, lh);
        return r;
    }

private:
    static void push(std::vector<double>& lags, double x) {
        if (lags.empty()) return;
        std::rotate(lags.rbegin(), lags.rbegin() + 1, lags.rend());
        lags[0] = x;
    }

    const marginal::MarginalParams& p_;
    std::vector<double> r_, y_, e_, lh_;
    double e_abs_ = 0.0;
};

}  // namespace

void SimSpec::validate() const {
    if (assets < 2) throw ConfigError("simulation needs at least two assets");
    if (periods < 10) throw ConfigError("simulation needs at least 10 periods");
    if (step_days < 1) throw ConfigError("simulation step must be at least one day");
    if (!ingest::is_iso_period_label(start_date)) throw ConfigError("simulation start date must be YYYY-MM-DD");
    check_marginal(marginal, orders);
    check_dcc(dcc_c, dcc_d);
    if (copula_nu && !(*copula_nu > 2.0)) throw ConfigError("copula nu must exceed 2");
    if (!(base_global >= 0.0 && base_global < 1.0)) throw ConfigError("base_global must lie in [0, 1)");
    if (!(base_chain >= 0.0 && base_chain < 1.0)) throw ConfigError("base_chain must lie in [0, 1)");
    if (!(initial_price > 0.0)) throw ConfigError("initial price must be positive");
    if (stress) {
        const auto& w = *stress;
        if (w.start >= w.end || w.end > periods) throw ConfigError("stress window outside the sample");
        if (w.hub >= assets) throw ConfigError("stress hub index out of range");
        if (!(std::abs(w.hub_loading) < 1.0 && std::abs(w.loading) < 1.0))
            throw ConfigError("stress loadings must lie in (-1, 1)");
    }
}

std::vector<std::string> date_labels(const std::string& start, int step_days, std::size_t n) {
    using namespace std::chrono;
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw ConfigError("bad start date " + start);
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw ConfigError("bad start date " + start);
    sys_days day0{ymd};
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const year_month_day cur{day0 + days{static_cast<long>(i) * step_days}};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(cur.year()), static_cast<unsigned>(cur.month()),
                      static_cast<unsigned>(cur.day()));
        out.emplace_back(buf);
    }
    return out;
}

std::vector<double> simulate_marginal(const marginal::MarginalParams& params, const marginal::ModelOrders& orders,
                                      std::size_t T, Rng& rng, std::size_t burn_in) {
    check_marginal(params, orders);
    MarginalSimulator sim(params, orders);
    std::vector<double> out;
    out.reserve(T);
    for (std::size_t t = 0; t < burn_in + T; ++t) {
        const double r = sim.step(marginal::innovation_quantile(rng.uniform(), params.dist));
        if (t >= burn_in) out.push_back(r);
    }
    return out;
}

PairSample simulate_dcc_pair(double c, double d, double nu, double rho_bar, std::size_t T, Rng& rng,
                             std::size_t burn_in) {
    check_dcc(c, d);
    if (!(nu > 2.0)) throw ConfigError("copula nu must exceed 2");
    if (!(std::abs(rho_bar) < 1.0)) throw ConfigError("rho_bar must lie in (-1, 1)");
    const double scale = std::sqrt(nu / (nu - 2.0));
    const double w = 1.0 - c - d;
    double q11 = 1.0, q12 = rho_bar, q22 = 1.0;
    double e1 = 0.0, e2 = 0.0;
    bool first = true;
    PairSample s;
    s.u1.reserve(T);
    s.u2.reserve(T);
    s.rho.reserve(T);
    for (std::size_t t = 0; t < burn_in + T; ++t) {
        if (!first) {
            q11 = w + c * e1 * e1 + d * q11;
            q12 = w * rho_bar + c * e1 * e2 + d * q12;
            q22 = w + c * e2 * e2 + d * q22;
        }
        first = false;
        const double rho = q12 / std::sqrt(q11 * q22);
        const double z1 = rng.normal();
        const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
        const double g = std::sqrt(nu / rng.chi_squared(nu));
        const double x1 = z1 * g, x2 = z2 * g;
        e1 = x1 / scale;
        e2 = x2 / scale;
        if (t >= burn_in) {
            s.u1.push_back(std::clamp(stats::t_cdf(x1, nu), 1e-300, 1.0 - 1e-16));
            s.u2.push_back(std::clamp(stats::t_cdf(x2, nu), 1e-300, 1.0 - 1e-16));
            s.rho.push_back(rho);
        }
    }
    return s;
}

SimResult simulate_panel(const SimSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t k = spec.assets, T = spec.periods;
    const auto K = static_cast<Eigen::Index>(k);
    Rng rng(seed);

    const Eigen::MatrixXd base = base_matrix(spec);
    Eigen::MatrixXd stressed;
    if (spec.stress) stressed = stress_matrix(spec, *spec.stress);
    for (const Eigen::MatrixXd* m : std::initializer_list<const Eigen::MatrixXd*>{&base, spec.stress ? &stressed : nullptr}) {
        if (!m) continue;
        Eigen::LLT<Eigen::MatrixXd> llt(*m);
        if (llt.info() != Eigen::Success) throw ConfigError("target correlation matrix is not positive definite");
    }

    const double nu = spec.copula_nu.value_or(0.0);
    const double scale = spec.copula_nu ? std::sqrt(nu / (nu - 2.0)) : 1.0;
    const double w = 1.0 - spec.dcc_c - spec.dcc_d;
    Eigen::MatrixXd Q = base;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(K);
    bool first = true;

    std::vector<MarginalSimulator> margins;
    margins.reserve(k);
    for (std::size_t i = 0; i < k; ++i) margins.emplace_back(spec.marginal, spec.orders);

    SimResult out;
    out.true_rho.reserve(T * k * k);
    std::vector<double> returns;
    returns.reserve(T * k);
    for (std::size_t step = 0; step < spec.burn_in + T; ++step) {
        const bool in_sample = step >= spec.burn_in;
        const std::size_t t = step - (in_sample ? spec.burn_in : 0);
        const bool stressed_now = spec.stress && in_sample && t >= spec.stress->start && t < spec.stress->end;
        const Eigen::MatrixXd& target = stressed_now ? stressed : base;
        if (!first) Q = w * target + spec.dcc_c * (e * e.transpose()) + spec.dcc_d * Q;
        first = false;
        const Eigen::VectorXd inv_sd = Q.diagonal().cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd R = inv_sd.asDiagonal() * Q * inv_sd.asDiagonal();
        Eigen::LLT<Eigen::MatrixXd> llt(R);
        if (llt.info() != Eigen::Success) throw EstimationError("simulated correlation lost positive definiteness");
        Eigen::VectorXd z(K);
        for (Eigen::Index i = 0; i < K; ++i) z(i) = rng.normal();
        Eigen::VectorXd x = llt.matrixL() * z;
        if (spec.copula_nu) x *= std::sqrt(nu / rng.chi_squared(nu));
        e = x / scale;
        for (std::size_t i = 0; i < k; ++i) {
            const double xi = x(static_cast<Eigen::Index>(i));
            double u = spec.copula_nu ? stats::t_cdf(xi, nu) : stats::normal_cdf(xi);
            u = std::clamp(u, 1e-300, 1.0 - 1e-16);
            const double r = margins[i].step(marginal::innovation_quantile(u, spec.marginal.dist));
            if (in_sample) returns.push_back(r);
        }
        if (in_sample)
            for (Eigen::Index i = 0; i < K; ++i)
                for (Eigen::Index j = 0; j < K; ++j) out.true_rho.push_back(R(i, j));
    }

    ingest::ReturnPanel rp;
    for (std::size_t i = 0; i < k; ++i) {
        const std::string n = std::to_string(i + 1);
        rp.assets.push_back("A" + std::string(n.size() < 2 ? 2 - n.size() : 0, '0') + n);
    }
    const auto dates = date_labels(spec.start_date, spec.step_days, T + 1);
    rp.periods.assign(dates.begin() + 1, dates.end());
    rp.returns = std::move(returns);
    const std::vector<double> first_prices(k, spec.initial_price);
    out.prices = ingest::cumulate_returns(rp, first_prices, dates.front());
    out.prices.validate();

    out.truth = {{"seed", seed}, {"spec", to_json(spec)}};
    if (spec.stress)
        out.truth["stress_periods"] = {rp.periods[spec.stress->start], rp.periods[spec.stress->end - 1]};
    return out;
}

namespace {

nlohmann::json marginal_json(const marginal::MarginalParams& p) {
    return {{"family", marginal::to_string(p.dist.family)},
            {"mu0", p.arma.mu0},
            {"phi", p.arma.phi},
            {"theta", p.arma.theta},
            {"omega", p.egarch.omega},
            {"alpha", p.egarch.alpha},
            {"gamma", p.egarch.gamma},
            {"beta", p.egarch.beta},
            {"nu", p.dist.shape},
            {"xi", p.dist.skew}};
}

marginal::MarginalParams marginal_from_json(const nlohmann::json& j) {
    marginal::MarginalParams p;
    p.dist.family = marginal::family_from_string(j.at("family").get<std::string>());
    p.arma.mu0 = j.at("mu0").get<double>();
    p.arma.phi = j.at("phi").get<std::vector<double>>();
    p.arma.theta = j.at("theta").get<std::vector<double>>();
    p.egarch.omega = j.at("omega").get<double>();
    p.egarch.alpha = j.at("alpha").get<std::vector<double>>();
    p.egarch.gamma = j.at("gamma").get<std::vector<double>>();
    p.egarch.beta = j.at("beta").get<std::vector<double>>();
    p.dist.shape = j.at("nu").get<double>();
    p.dist.skew = j.at("xi").get<double>();
    return p;
}

}  // namespace

nlohmann::json to_json(const SimSpec& s) {
    nlohmann::json j = {
        {"assets", s.assets},
        {"periods", s.periods},
        {"start_date", s.start_date},
        {"step_days", s.step_days},
        {"orders", {s.orders.p, s.orders.q, s.orders.pv, s.orders.qv}},
        {"marginal", marginal_json(s.marginal)},
        {"copula_nu", s.copula_nu ? nlohmann::json(*s.copula_nu) : nlohmann::json(nullptr)},
        {"dcc_c", s.dcc_c},
        {"dcc_d", s.dcc_d},
        {"base_global", s.base_global},
        {"base_chain", s.base_chain},
        {"burn_in", s.burn_in},
        {"initial_price", s.initial_price},
    };
    if (s.stress)
        j["stress"] = {{"start", s.stress->start},
                       {"end", s.stress->end},
                       {"hub", s.stress->hub},
                       {"hub_loading", s.stress->hub_loading},
                       {"loading", s.stress->loading}};
    else
        j["stress"] = nullptr;
    return j;
}

SimSpec sim_spec_from_json(const nlohmann::json& j) {
    SimSpec s;
    try {
        s.assets = j.value("assets", s.assets);
        s.periods = j.value("periods", s.periods);
        s.start_date = j.value("start_date", s.start_date);
        s.step_days = j.value("step_days", s.step_days);
        if (j.contains("orders")) {
            const auto o = j.at("orders").get<std::vector<int>>();
            if (o.size() != 4) throw ConfigError("orders must list p, q, pv, qv");
            s.orders = {o[0], o[1], o[2], o[3]};
        }
        if (j.contains("marginal")) s.marginal = marginal_from_json(j.at("marginal"));
        if (j.contains("copula_nu"))
            s.copula_nu = j.at("copula_nu").is_null() ? std::nullopt : std::optional<double>(j.at("copula_nu").get<double>());
        s.dcc_c = j.value("dcc_c", s.dcc_c);
        s.dcc_d = j.value("dcc_d", s.dcc_d);
        s.base_global = j.value("base_global", s.base_global);
        s.base_chain = j.value("base_chain", s.base_chain);
        s.burn_in = j.value("burn_in", s.burn_in);
        s.initial_price = j.value("initial_price", s.initial_price);
        if (j.contains("stress") && !j.at("stress").is_null()) {
            const auto& w = j.at("stress");
            StressWindow sw;
            sw.start = w.at("start").get<std::size_t>();
            sw.end = w.at("end").get<std::size_t>();
            sw.hub = w.value("hub", sw.hub);
            sw.hub_loading = w.value("hub_loading", sw.hub_loading);
            sw.loading = w.value("loading", sw.loading);
            s.stress = sw;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed simulation spec: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace risknet::sim
