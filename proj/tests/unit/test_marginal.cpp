#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "core/hash.hpp"
#include "core/rng.hpp"
#include "marginal/marginal.hpp"
#include "oracles/oracles.hpp"
#include "pipeline/simulate.hpp"

using namespace risknet;
using namespace risknet::marginal;

namespace {

MarginalParams zero_params(Family family = Family::normal) {
    MarginalParams p;
    p.arma.phi = {0.0};
    p.arma.theta = {0.0};
    p.egarch.alpha = {0.0, 0.0};
    p.egarch.gamma = {0.0, 0.0};
    p.egarch.beta = {0.0, 0.0};
    p.dist.family = family;
    return p;
}

oracle::MarginalTruth to_oracle(const MarginalParams& p) {
    return {p.arma.mu0,
            p.arma.phi[0],
            p.arma.theta[0],
            p.egarch.omega,
            {p.egarch.alpha[0], p.egarch.alpha[1]},
            {p.egarch.gamma[0], p.egarch.gamma[1]},
            {p.egarch.beta[0], p.egarch.beta[1]},
            p.dist.family == Family::skew_t,
            p.dist.shape,
            p.dist.skew};
}

// E|eps| of the skew-t by adaptive quadrature of the oracle density.
double quadrature_abs_moment(double nu, double xi) {
    const oracle::SkewT st(nu, xi);
    auto f = [&](double e) { return std::abs(e) * st.pdf(e); };
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double inf = std::numeric_limits<double>::infinity();
    return Q::integrate(f, -inf, 0.0, 20, 1e-14) + Q::integrate(f, 0.0, inf, 20, 1e-14);
}

std::vector<double> simulated_returns(std::size_t T, std::uint64_t seed) {
    Rng rng(seed);
    return sim::simulate_marginal(sim::SimSpec::default_marginal_truth(), ModelOrders{}, T, rng);
}

// A random feasible parameter point around the simulation truth.
MarginalParams random_point(std::mt19937_64& eng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double a, double b) { return a + (b - a) * u(eng); };
    MarginalParams p;
    p.arma.mu0 = in(-0.005, 0.005);
    p.arma.phi = {in(-0.6, 0.6)};
    p.arma.theta = {in(-0.6, 0.6)};
    const double b1 = in(0.3, 0.85);
    const double b2 = in(-0.2, 0.93 - b1);
    p.egarch.beta = {b1, b2};
    p.egarch.omega = -6.0 * (1.0 - b1 - b2) + in(-0.2, 0.2);
    p.egarch.alpha = {in(-0.1, 0.1), in(-0.1, 0.1)};
    p.egarch.gamma = {in(-0.1, 0.3), in(-0.15, 0.15)};
    p.dist = {Family::skew_t, in(4.0, 20.0), in(0.7, 1.5)};
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Filter

TEST(MarginalFilter, IdentityCase) {
    const std::vector<double> r(50, 0.0);
    const auto p = zero_params();
    const auto out = filter_arma_egarch(r, p.arma, p.egarch, p.dist);
    ASSERT_TRUE(out);
    for (std::size_t t = 0; t < r.size(); ++t) {
        EXPECT_EQ(out->cond_var[t], 1.0);
        EXPECT_EQ(out->std_resid[t], 0.0);
    }
}

TEST(MarginalFilter, ConstantVariance) {
    std::vector<double> r(40);
    for (std::size_t t = 0; t < r.size(); ++t) r[t] = (t % 2 ? 1.0 : -1.0) * (0.5 + 0.01 * static_cast<double>(t));
    auto p = zero_params();
    p.egarch.omega = std::log(4.0);
    const auto out = filter_arma_egarch(r, p.arma, p.egarch, p.dist);
    ASSERT_TRUE(out);
    for (std::size_t t = 0; t < r.size(); ++t) {
        EXPECT_NEAR(out->cond_var[t], 4.0, 1e-14);
        EXPECT_NEAR(out->std_resid[t], r[t] / 2.0, 1e-15);
    }
}

TEST(MarginalFilter, MomentsAtTruth) {
    const auto truth = sim::SimSpec::default_marginal_truth();
    const auto r = simulated_returns(2000, 11);
    const auto out = filter_arma_egarch(r, truth.arma, truth.egarch, truth.dist);
    ASSERT_TRUE(out);
    double m = 0.0, v = 0.0;
    for (double e : out->std_resid) m += e;
    m /= 2000.0;
    for (double e : out->std_resid) v += (e - m) * (e - m);
    v /= 1999.0;
    EXPECT_GT(m, -0.1);
    EXPECT_LT(m, 0.1);
    EXPECT_GT(v, 0.9);
    EXPECT_LT(v, 1.1);
}

TEST(MarginalFilter, OverflowSignalsFailure) {
    auto p = zero_params();
    p.egarch.omega = 50.0;
    p.egarch.beta = {0.99, 0.0};
    const std::vector<double> r(200, 0.01);
    EXPECT_FALSE(filter_arma_egarch(r, p.arma, p.egarch, p.dist).has_value());
    EXPECT_EQ(loglik_marginal(r, p), -std::numeric_limits<double>::infinity());
}

TEST(MarginalFilter, BitIdenticalRepeat) {
    const auto truth = sim::SimSpec::default_marginal_truth();
    const auto r = simulated_returns(500, 3);
    const auto a = filter_arma_egarch(r, truth.arma, truth.egarch, truth.dist);
    const auto b = filter_arma_egarch(r, truth.arma, truth.egarch, truth.dist);
    ASSERT_TRUE(a && b);
    EXPECT_EQ(a->cond_var, b->cond_var);
    EXPECT_EQ(a->std_resid, b->std_resid);
}

// ---------------------------------------------------------------------------
// Likelihood

TEST(MarginalLoglik, SinglePointNormal) {
    const InnovationDist normal{Family::normal, 0.0, 0.0};
    const double c = -0.5 * std::log(2.0 * std::numbers::pi);
    EXPECT_NEAR(loglik_from_filtered(std::vector<double>{1.0}, std::vector<double>{0.0}, normal), c, 1e-15);
    EXPECT_NEAR(c, -0.9189385, 1e-7);
    EXPECT_NEAR(loglik_from_filtered(std::vector<double>{4.0}, std::vector<double>{0.0}, normal),
                c - 0.5 * std::log(4.0), 1e-15);
}

TEST(MarginalLoglik, MatchesNaiveOracleSkewT) {
    const auto truth = sim::SimSpec::default_marginal_truth();
    const auto r = simulated_returns(800, 5);
    std::mt19937_64 eng(99);
    for (int rep = 0; rep < 5; ++rep) {
        const auto p = rep == 0 ? truth : random_point(eng);
        const double e_abs = quadrature_abs_moment(p.dist.shape, p.dist.skew);
        const double expected = oracle::marginal_loglik(r, to_oracle(p), e_abs);
        EXPECT_NEAR(loglik_marginal(r, p), expected, 1e-10 * std::max(1.0, std::abs(expected))) << "rep " << rep;
    }
}

TEST(MarginalLoglik, MatchesNaiveOracleNormal) {
    auto p = sim::SimSpec::default_marginal_truth();
    p.dist = {Family::normal, 0.0, 0.0};
    const auto r = simulated_returns(600, 6);
    const double expected = oracle::marginal_loglik(r, to_oracle(p), oracle::abs_moment_normal());
    EXPECT_NEAR(loglik_marginal(r, p), expected, 1e-10 * std::abs(expected));
}

TEST(MarginalLoglik, NonFiniteShapeIsMinusInfinity) {
    const auto r = simulated_returns(200, 7);
    auto p = sim::SimSpec::default_marginal_truth();
    const double ninf = -std::numeric_limits<double>::infinity();
    p.dist.skew = std::numeric_limits<double>::infinity();
    EXPECT_EQ(loglik_marginal(r, p), ninf);
    p.dist.skew = 1e300;
    EXPECT_EQ(loglik_marginal(r, p), ninf);
    p = sim::SimSpec::default_marginal_truth();
    p.arma.phi[0] = std::nan("");
    EXPECT_EQ(loglik_marginal(r, p), ninf);
}

TEST(MarginalLoglik, GradientMatchesCentralDifferences) {
    const auto r = simulated_returns(1000, 8);
    const ParamLayout L(ModelOrders{}, Family::skew_t);
    std::mt19937_64 eng(2024);
    auto f = [&](const std::vector<double>& th) { return loglik_marginal(r, L.unpack(th)); };
    for (int point = 0; point < 20; ++point) {
        const auto th = L.pack(random_point(eng));
        std::vector<double> grad;
        loglik_gradient(r, L, th, grad);
        std::vector<double> fd(th.size());
        for (std::size_t i = 0; i < th.size(); ++i)
            fd[i] = oracle::central_difference(f, th, i, 1e-6 * std::max(std::abs(th[i]), 1e-3));
        EXPECT_LT(oracle::gradient_relative_error(grad, fd), 1e-4) << "point " << point;
    }
}

// ---------------------------------------------------------------------------
// Innovation law

TEST(SkewT, AbsMomentNormal) {
    EXPECT_NEAR(normal_abs_moment(), 0.7978846, 1e-7);
    EXPECT_NEAR(normal_abs_moment(), std::sqrt(2.0 / std::numbers::pi), 1e-16);
}

TEST(SkewT, AbsMomentSymmetricQuadrature) {
    const double q = quadrature_abs_moment(10.0, 1.0);
    EXPECT_NEAR(skewt_absmoment({Family::skew_t, 10.0, 1.0}), q, 1e-8);
}

TEST(SkewT, AbsMomentSkewedQuadrature) {
    for (double nu : {2.5, 4.0, 7.0, 30.0})
        for (double xi : {0.5, 0.9, 1.3, 2.0})
            EXPECT_NEAR(skewt_absmoment({Family::skew_t, nu, xi}), quadrature_abs_moment(nu, xi), 1e-8)
                << nu << " " << xi;
}

TEST(SkewT, AbsMomentMonteCarlo) {
    const oracle::SkewT st(5.0, 2.0);
    std::mt19937_64 eng(7);
    const int n = 10'000'000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = std::abs(st.draw(eng));
        s += a;
        s2 += a * a;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(skewt_absmoment({Family::skew_t, 5.0, 2.0}), mean, 3.0 * se);
}

TEST(SkewT, AbsMomentDomain) {
    EXPECT_THROW(skewt_absmoment({Family::skew_t, 2.0, 1.0}), DomainError);
    EXPECT_THROW(skewt_absmoment({Family::skew_t, 1.5, 1.0}), DomainError);
}

TEST(SkewT, DensityMatchesOracle) {
    for (double nu : {3.0, 6.0, 15.0})
        for (double xi : {0.6, 1.0, 1.7}) {
            const oracle::SkewT st(nu, xi);
            for (double e : {-4.0, -1.2, -0.1, 0.0, 0.3, 2.5, 6.0})
                EXPECT_NEAR(innovation_log_density(e, {Family::skew_t, nu, xi}), std::log(st.pdf(e)), 1e-12);
        }
}

TEST(SkewT, StandardizedMoments) {
    const oracle::SkewT st(6.0, 1.4);
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double inf = std::numeric_limits<double>::infinity();
    const double mean = Q::integrate([&](double e) { return e * st.pdf(e); }, -inf, inf, 20, 1e-13);
    const double var = Q::integrate([&](double e) { return e * e * st.pdf(e); }, -inf, inf, 20, 1e-13);
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-8);
}

TEST(SkewT, QuantileInvertsCdf) {
    const InnovationDist d{Family::skew_t, 5.0, 1.5};
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999})
        EXPECT_NEAR(innovation_cdf(innovation_quantile(p, d), d), p, 1e-10);
}

TEST(Pit, SymmetricCenter) {
    EXPECT_EQ(innovation_cdf(0.0, {Family::normal, 0.0, 0.0}), 0.5);
    EXPECT_NEAR(innovation_cdf(0.0, {Family::skew_t, 7.0, 1.0}), 0.5, 1e-15);
}

TEST(Pit, MedianOfSkewedLaw) {
    // Median of skew-t(5, 1.5) located on the oracle CDF (quadrature of the oracle density).
    const oracle::SkewT st(5.0, 1.5);
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto cdf = [&](double x) {
        return Q::integrate([&](double e) { return st.pdf(e); }, -std::numeric_limits<double>::infinity(), x, 20,
                            1e-14);
    };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 100;
    const auto [lo, hi] = boost::math::tools::toms748_solve([&](double x) { return cdf(x) - 0.5; }, -2.0, 2.0, tol, iters);
    const double median = 0.5 * (lo + hi);
    EXPECT_NEAR(innovation_cdf(median, {Family::skew_t, 5.0, 1.5}), 0.5, 1e-9);
}

TEST(Pit, ClampedAwayFromBounds) {
    const auto truth = sim::SimSpec::default_marginal_truth();
    auto r = simulated_returns(300, 4);
    r[150] = 50.0;
    r[200] = -50.0;
    const auto fit = make_fit(r, ModelOrders{}, truth);
    ASSERT_EQ(fit.pit.size(), r.size());
    for (double u : fit.pit) {
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    EXPECT_GT(fit.pit[150], 0.999999);
    EXPECT_LT(fit.pit[200], 1e-6);
}

TEST(Pit, UniformOnCorrectlySpecifiedData) {
    // Fitted PITs of simulated series, T = 5000. One-sample KS at the 1% level
    // (asymptotic critical value 1.6276 / sqrt(T)).
    const std::size_t T = 5000;
    const double critical = 1.6276 / std::sqrt(static_cast<double>(T));
    int accepted = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
        const auto r = simulated_returns(T, mix_seed(314, static_cast<std::uint64_t>(rep)));
        MarginalFit fit;
        try {
            fit = fit_marginal(r, {});
        } catch (const MarginalConvergenceError& e) {
            fit = e.best();
        }
        auto u = fit.pit;
        std::sort(u.begin(), u.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < T; ++i) {
            const double n = static_cast<double>(T);
            ks = std::max({ks, (static_cast<double>(i) + 1.0) / n - u[i], u[i] - static_cast<double>(i) / n});
        }
        accepted += ks < critical;
    }
    EXPECT_GE(accepted, 95);
}

// ---------------------------------------------------------------------------
// Fitting

TEST(MarginalFit, WhiteNoiseNormal) {
    std::mt19937_64 eng(17);
    std::normal_distribution<double> z;
    std::vector<double> r(2000);
    for (auto& x : r) x = z(eng);
    MarginalFit fit;
    try {
        fit = fit_marginal(r, {});
    } catch (const MarginalConvergenceError& e) {
        FAIL() << e.what();
    }
    const auto& b = fit.egarch().beta;
    const double beta_sum = b[0] + b[1];
    EXPECT_LT(beta_sum, 0.99);
    const double uncond = std::exp(fit.egarch().omega / (1.0 - beta_sum));
    EXPECT_NEAR(uncond, 1.0, 0.15);
}

TEST(MarginalFit, ZeroReturnsRejected) {
    const std::vector<double> r(300, 0.0);
    EXPECT_THROW(fit_marginal(r, {}), EstimationError);
}

TEST(MarginalFit, ShortSeriesRejected) {
    const std::vector<double> r{0.1, -0.2, 0.3};
    EXPECT_THROW(fit_marginal(r, {}), DataError);
}

TEST(MarginalFit, DeterministicAndFlagsShortSample) {
    const auto r = simulated_returns(1500, 21);
    const auto a = fit_marginal(r, {});
    const auto b = fit_marginal(r, {});
    const ParamLayout L(ModelOrders{}, Family::skew_t);
    EXPECT_EQ(L.pack(a.params), L.pack(b.params));
    EXPECT_EQ(a.cond_var, b.cond_var);
    EXPECT_TRUE(a.diagnostics.converged);
    EXPECT_LT(a.diagnostics.gradient_norm, 1e-6);
    EXPECT_FALSE(a.diagnostics.short_sample);
}

TEST(MarginalFit, FitIsAtLeastAsGoodAsTruth) {
    const auto r = simulated_returns(3000, 22);
    const auto fit = fit_marginal(r, {});
    EXPECT_GE(fit.loglik, loglik_marginal(r, sim::SimSpec::default_marginal_truth()) - 1e-8);
    EXPECT_NEAR(fit.loglik, loglik_marginal(r, fit.params), 1e-9 * std::abs(fit.loglik));
    for (double v : fit.cond_var) ASSERT_GT(v, 0.0);
    EXPECT_EQ(fit.std_resid.size(), r.size());
}

TEST(MarginalFit, ScaleEquivariance) {
    // Fitting 10 r must give mu0 * 10 and omega shifted by 2 ln 10 (1 - sum beta).
    const auto r = simulated_returns(2000, 23);
    std::vector<double> r10(r);
    for (auto& x : r10) x *= 10.0;
    const auto a = fit_marginal(r, {});
    const auto b = fit_marginal(r10, {});
    EXPECT_NEAR(b.arma().mu0, 10.0 * a.arma().mu0, 1e-6);
    const double sb = a.egarch().beta[0] + a.egarch().beta[1];
    EXPECT_NEAR(b.egarch().omega, a.egarch().omega + 2.0 * std::log(10.0) * (1.0 - sb), 1e-5);
    EXPECT_NEAR(b.dist().shape, a.dist().shape, 1e-4);
}

TEST(MarginalFit, LowerOrderModel) {
    MarginalParams truth;
    truth.arma = {0.0005, {0.1}, {0.05}};
    truth.egarch = {-0.2, {-0.05}, {0.15}, {0.97}};
    truth.dist = {Family::skew_t, 8.0, 1.05};
    const ModelOrders orders{1, 1, 1, 1};
    Rng rng(5);
    const auto r = sim::simulate_marginal(truth, orders, 3000, rng);
    MarginalConfig config;
    config.orders = orders;
    const auto fit = fit_marginal(r, config);
    EXPECT_TRUE(fit.diagnostics.converged);
    EXPECT_NEAR(fit.egarch().beta[0], 0.97, 0.05);
    ASSERT_EQ(fit.std_errors.size(), 9u);
    for (double se : fit.std_errors) EXPECT_TRUE(std::isfinite(se));
}

TEST(MarginalFit, NormalFamily) {
    auto truth = sim::SimSpec::default_marginal_truth();
    truth.dist = {Family::normal, 0.0, 0.0};
    Rng rng(44);
    const auto r = sim::simulate_marginal(truth, ModelOrders{}, 2000, rng);
    MarginalConfig config;
    config.family = Family::normal;
    const auto fit = fit_marginal(r, config);
    EXPECT_EQ(fit.param_names.size(), 10u);
    EXPECT_EQ(fit.dist().family, Family::normal);
    EXPECT_EQ(fit.std_errors.size(), 10u);
}

TEST(MarginalFit, JsonRoundTrip) {
    const auto r = simulated_returns(1200, 24);
    const auto fit = fit_marginal(r, {});
    const auto back = marginal_fit_from_json(to_json(fit), r);
    const ParamLayout L(ModelOrders{}, Family::skew_t);
    EXPECT_EQ(L.pack(back.params), L.pack(fit.params));
    EXPECT_EQ(back.pit, fit.pit);
    EXPECT_EQ(back.loglik, fit.loglik);
    EXPECT_EQ(back.diagnostics.message, fit.diagnostics.message);
    EXPECT_EQ(to_json(back).dump(), to_json(fit).dump());
}

TEST(MarginalTransform, RoundTrip) {
    const ParamLayout L(ModelOrders{}, Family::skew_t);
    const auto th = L.pack(sim::SimSpec::default_marginal_truth());
    const auto u = to_unconstrained(L, th);
    const auto back = to_natural<double>(L, u);
    for (std::size_t i = 0; i < th.size(); ++i) EXPECT_NEAR(back[i], th[i], 1e-12) << L.names()[i];
}
