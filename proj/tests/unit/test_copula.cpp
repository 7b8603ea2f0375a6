#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "copula/copula_dcc.hpp"
#include "copula/cube.hpp"
#include "core/hash.hpp"
#include "core/rng.hpp"
#include "oracles/oracles.hpp"
#include "pipeline/simulate.hpp"
#include "support.hpp"

namespace rt = risknet::testing;

using namespace risknet;
using namespace risknet::copula;
using ::testing::HasSubstr;

namespace {

std::vector<double> uniforms(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& x : out) {
        do x = u(eng);
        while (x == 0.0);
    }
    return out;
}

DccParams params(double c, double d, double nu) { return {{c}, {d}, nu}; }

}  // namespace

// ---------------------------------------------------------------------------
// Shocks

TEST(CopulaShocks, MedianMapsToZero) {
    const std::vector<double> u{0.5, 0.5};
    const auto s = copula_shocks(u, u, 5.0);
    EXPECT_EQ(s.first[0], 0.0);
    EXPECT_EQ(s.second[1], 0.0);
}

TEST(CopulaShocks, GaussianLimit) {
    const std::vector<double> u{0.001, 0.1, 0.3, 0.6, 0.9, 0.999};
    const auto s = copula_shocks(u, u, 1e6);
    boost::math::normal_distribution<double> n;
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(s.first[i], boost::math::quantile(n, u[i]), 1e-4);
}

TEST(CopulaShocks, WorkedQuantile) {
    const std::vector<double> u{0.975};
    const auto s = copula_shocks(u, u, 5.0);
    const double t = boost::math::quantile(boost::math::students_t_distribution<double>(5.0), 0.975);
    EXPECT_NEAR(t, 2.5706, 1e-4);
    EXPECT_NEAR(s.first[0], t / std::sqrt(5.0 / 3.0), 1e-12);
    EXPECT_NEAR(s.first[0], 1.9912, 1e-4);
}

TEST(CopulaShocks, DomainError) {
    const std::vector<double> u{0.3};
    EXPECT_THROW(copula_shocks(u, u, 2.0), DomainError);
}

// ---------------------------------------------------------------------------
// DCC recursion

TEST(DccFilter, StaticCollapsesToQbar) {
    const auto u1 = uniforms(200, 1), u2 = uniforms(200, 2);
    const auto s = copula_shocks(u1, u2, 6.0);
    const Sym2 qbar{1.3, 0.4, 0.8};
    const auto rho = dcc_filter(s, params(0.0, 0.0, 6.0), qbar);
    const double expected = 0.4 / std::sqrt(1.3 * 0.8);
    for (double r : rho) ASSERT_EQ(r, expected);
}

TEST(DccFilter, IdentityQbarGivesZero) {
    const auto u1 = uniforms(100, 3), u2 = uniforms(100, 4);
    const auto s = copula_shocks(u1, u2, 6.0);
    for (double r : dcc_filter(s, params(0.0, 0.0, 6.0), Sym2{1.0, 0.0, 1.0})) ASSERT_EQ(r, 0.0);
}

TEST(DccFilter, MatchesSpreadsheetOracle) {
    const std::vector<double> e1{0.3, -1.2, 0.8, 2.1, -0.4, 0.0, 1.1, -2.3, 0.6, 0.9};
    const std::vector<double> e2{0.5, -0.7, 1.4, 1.6, 0.2, -0.3, 0.4, -1.9, -0.1, 1.2};
    const Sym2 qbar{1.05, 0.45, 0.95};
    const auto rho = dcc_filter(ShockPair{e1, e2}, params(0.05, 0.9, 6.0), qbar);
    const auto expected = oracle::dcc_sheet(e1, e2, 0.05, 0.9, qbar.q11, qbar.q12, qbar.q22);
    ASSERT_EQ(rho.size(), 10u);
    for (std::size_t t = 0; t < 10; ++t) EXPECT_NEAR(rho[t], expected[t], 1e-12) << t;
}

TEST(DccFilter, RejectsInfeasible) {
    const ShockPair s{{0.1, 0.2}, {0.3, 0.4}};
    EXPECT_THROW(dcc_filter(s, params(0.5, 0.5, 6.0), Sym2{}), DomainError);
    EXPECT_THROW(dcc_filter(s, params(-0.1, 0.5, 6.0), Sym2{}), DomainError);
    EXPECT_THROW(dcc_filter(s, params(0.1, 0.5, 6.0), Sym2{1.0, 1.5, 1.0}), DomainError);
}

TEST(DccFilter, TargetIsUncenteredSecondMoment) {
    const ShockPair s{{1.0, -1.0, 2.0}, {0.5, 0.5, -1.0}};
    const auto q = target_qbar(s);
    EXPECT_NEAR(q.q11, 2.0, 1e-15);
    EXPECT_NEAR(q.q12, (0.5 - 0.5 - 2.0) / 3.0, 1e-15);
    EXPECT_NEAR(q.q22, 0.5, 1e-15);
}

// ---------------------------------------------------------------------------
// Density and likelihood

TEST(TCopulaDensity, CenterConstant) {
    const double nu = 5.0;
    const double expected =
        std::log(std::tgamma(0.5 * (nu + 2.0)) * std::tgamma(0.5 * nu) / std::pow(std::tgamma(0.5 * (nu + 1.0)), 2));
    EXPECT_NEAR(tcopula_log_density(0.5, 0.5, 0.0, nu), expected, 1e-10);
    EXPECT_NEAR(oracle::tcopula_log_density(0.5, 0.5, 0.0, nu), expected, 1e-10);
}

TEST(TCopulaDensity, MatchesDirectFormula) {
    for (double nu : {2.5, 4.0, 9.0, 40.0})
        for (double rho : {-0.8, -0.2, 0.0, 0.35, 0.9})
            for (auto [u1, u2] : {std::pair{0.1, 0.7}, {0.5, 0.5}, {0.93, 0.96}, {0.02, 0.995}})
                EXPECT_NEAR(tcopula_log_density(u1, u2, rho, nu), oracle::tcopula_log_density(u1, u2, rho, nu), 1e-10)
                    << nu << " " << rho << " " << u1 << " " << u2;
}

TEST(TCopulaDensity, IndependenceLimit) {
    const auto u1 = uniforms(10000, 5), u2 = uniforms(10000, 6);
    double mean = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i) mean += tcopula_log_density(u1[i], u2[i], 0.0, 1e6);
    mean /= static_cast<double>(u1.size());
    EXPECT_LT(std::abs(mean), 0.01);
}

TEST(TCopulaDensity, ComonotoneOrdering) {
    const auto u = uniforms(500, 7);
    auto total = [&](double rho) {
        double s = 0.0;
        for (double x : u) s += tcopula_log_density(x, x, rho, 6.0);
        return s;
    };
    EXPECT_LT(total(0.0), total(0.5));
    EXPECT_LT(total(0.5), total(0.9));
}

TEST(CopulaLoglik, EqualsSumOfDensities) {
    Rng rng(8);
    const auto s = sim::simulate_dcc_pair(0.05, 0.9, 6.0, 0.4, 300, rng);
    const auto p = params(0.04, 0.92, 7.0);
    const auto fit = make_pair_fit(s.u1, s.u2, p);
    double expected = 0.0;
    for (std::size_t t = 0; t < s.u1.size(); ++t)
        expected += oracle::tcopula_log_density(s.u1[t], s.u2[t], fit.rho_path[t], 7.0);
    EXPECT_NEAR(loglik_tcopula_dcc(s.u1, s.u2, p), expected, 1e-8 * std::abs(expected));
    EXPECT_EQ(fit.loglik, loglik_tcopula_dcc(s.u1, s.u2, p));
}

TEST(CopulaLoglik, InfeasibleIsMinusInfinity) {
    const auto u1 = uniforms(50, 9), u2 = uniforms(50, 10);
    const double ninf = -std::numeric_limits<double>::infinity();
    EXPECT_EQ(loglik_tcopula_dcc(u1, u2, params(0.6, 0.5, 6.0)), ninf);
    EXPECT_EQ(loglik_tcopula_dcc(u1, u2, params(0.1, 0.5, 1.9)), ninf);
}

TEST(CopulaLoglik, GradientMatchesCentralDifferences) {
    Rng rng(11);
    const auto s = sim::simulate_dcc_pair(0.05, 0.9, 6.0, 0.5, 1000, rng);
    std::mt19937_64 eng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto f = [&](const std::vector<double>& x) { return loglik_tcopula_dcc(s.u1, s.u2, params(x[0], x[1], x[2])); };
    for (int point = 0; point < 20; ++point) {
        const double c = 0.01 + 0.14 * u(eng);
        const double d = (0.97 - c) * u(eng);
        const std::vector<double> x{c, d, 2.5 + 30.0 * u(eng)};
        std::vector<double> grad;
        loglik_tcopula_dcc_gradient(s.u1, s.u2, params(x[0], x[1], x[2]), grad);
        std::vector<double> fd(3);
        for (std::size_t i = 0; i < 3; ++i) fd[i] = oracle::central_difference(f, x, i, 1e-6 * std::abs(x[i]));
        EXPECT_LT(oracle::gradient_relative_error(grad, fd), 1e-4) << "point " << point;
    }
}

// ---------------------------------------------------------------------------
// Pair fits

TEST(FitPair, ConstantCorrelationRecovered) {
    int ok = 0;
    const int reps = 50;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(mix_seed(600, static_cast<std::uint64_t>(rep)));
        const auto s = sim::simulate_dcc_pair(0.0, 0.0, 6.0, 0.6, 3000, rng);
        DccFit fit;
        try {
            fit = fit_pair(s.u1, s.u2, {});
        } catch (const PairConvergenceError& e) {
            fit = e.best();
        }
        ok += fit.params.c[0] <= 0.05 && std::abs(fit.qbar.correlation() - 0.6) < 0.05;
    }
    EXPECT_GE(ok, 45);
}

TEST(FitPair, IndependentUniformsNullCase) {
    const auto u1 = uniforms(2000, 13), u2 = uniforms(2000, 14);
    DccFit fit;
    try {
        fit = fit_pair(u1, u2, {});
    } catch (const PairConvergenceError& e) {
        fit = e.best();
    }
    double m = 0.0;
    for (double r : fit.rho_path) m += std::abs(r);
    EXPECT_LT(m / static_cast<double>(fit.rho_path.size()), 0.1);
}

TEST(FitPair, ExchangeableInMargins) {
    Rng rng(15);
    const auto s = sim::simulate_dcc_pair(0.05, 0.9, 6.0, 0.5, 1500, rng);
    const auto ab = fit_pair(s.u1, s.u2, {});
    const auto ba = fit_pair(s.u2, s.u1, {});
    EXPECT_EQ(ab.rho_path, ba.rho_path);
    EXPECT_EQ(ab.params.nu, ba.params.nu);
}

TEST(FitPair, FeasibleAndDeterministic) {
    Rng rng(16);
    const auto s = sim::simulate_dcc_pair(0.08, 0.85, 5.0, -0.3, 1500, rng);
    const auto a = fit_pair(s.u1, s.u2, {});
    const auto b = fit_pair(s.u1, s.u2, {});
    EXPECT_EQ(a.rho_path, b.rho_path);
    EXPECT_LT(a.params.c[0] + a.params.d[0], 1.0);
    EXPECT_GE(a.params.c[0], 0.0);
    EXPECT_GE(a.params.d[0], 0.0);
    for (double r : a.rho_path) ASSERT_LT(std::abs(r), 1.0);
    EXPECT_TRUE(a.diagnostics.converged);
    ASSERT_EQ(a.std_errors.size(), 3u);
    for (double se : a.std_errors) EXPECT_GT(se, 0.0);
}

TEST(FitPair, NearGaussianFlagged) {
    // A Gaussian copula pushes nu to the upper search bound.
    Rng rng(17);
    const auto s = sim::simulate_dcc_pair(0.0, 0.0, 1e9, 0.3, 3000, rng);
    DccFit fit;
    try {
        fit = fit_pair(s.u1, s.u2, {});
    } catch (const PairConvergenceError& e) {
        fit = e.best();
    }
    EXPECT_GT(fit.params.nu, 30.0);
    EXPECT_EQ(fit.diagnostics.effectively_gaussian, fit.params.nu > 99.0);
}

TEST(FitPair, InputValidation) {
    const std::vector<double> a{0.1, 0.2, 0.3}, b{0.1, 0.2};
    EXPECT_THROW(fit_pair(a, b, {}), DataError);
    auto u = uniforms(50, 18);
    auto v = uniforms(50, 19);
    v[3] = 1.0;
    EXPECT_THROW(fit_pair(u, v, {}), DataError);
}

TEST(FitPair, JsonRoundTrip) {
    Rng rng(20);
    const auto s = sim::simulate_dcc_pair(0.05, 0.9, 6.0, 0.5, 500, rng);
    DccFit fit;
    try {
        fit = fit_pair(s.u1, s.u2, {});
    } catch (const PairConvergenceError& e) {
        fit = e.best();
    }
    const auto back = dcc_fit_from_json(to_json(fit));
    EXPECT_EQ(back.params.c, fit.params.c);
    EXPECT_EQ(back.params.d, fit.params.d);
    EXPECT_EQ(back.params.nu, fit.params.nu);
    EXPECT_EQ(back.rho_path, fit.rho_path);
    EXPECT_EQ(to_json(back).dump(), to_json(fit).dump());
}

// ---------------------------------------------------------------------------
// Cube

TEST(Cube, TwoAssets) {
    const std::vector<double> path{0.1, 0.2, -0.3};
    const auto cube = assemble_cube({"A", "B"}, {"p1", "p2", "p3"}, {{0, 1, path}});
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_EQ(cube.at(t, 0, 1), path[t]);
        EXPECT_EQ(cube.at(t, 1, 0), path[t]);
        EXPECT_EQ(cube.at(t, 0, 0), 1.0);
    }
}

TEST(Cube, ZeroPathsGiveIdentity) {
    const std::vector<double> z(4, 0.0);
    const auto cube = assemble_cube({"A", "B", "C"}, {"1", "2", "3", "4"}, {{0, 1, z}, {0, 2, z}, {1, 2, z}});
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(cube.at(t, i, j), i == j ? 1.0 : 0.0);
}

TEST(Cube, MissingPairListed) {
    const std::vector<double> z(2, 0.0);
    try {
        assemble_cube({"A", "B", "C"}, {"1", "2"}, {{0, 1, z}});
        FAIL();
    } catch (const DataError& e) {
        EXPECT_THAT(e.what(), HasSubstr("(A, C)"));
        EXPECT_THAT(e.what(), HasSubstr("(B, C)"));
    }
}

TEST(Cube, RejectsBadPaths) {
    const std::vector<double> z(2, 0.0);
    EXPECT_THROW(assemble_cube({"A", "B"}, {"1", "2"}, {{0, 1, z}, {1, 0, z}}), DataError);
    EXPECT_THROW(assemble_cube({"A", "B"}, {"1", "2"}, {{0, 1, {0.1}}}), DataError);
    EXPECT_THROW(assemble_cube({"A", "B"}, {"1", "2"}, {{0, 1, {0.1, 1.0}}}), DataError);
}

TEST(Cube, JsonAndCsv) {
    const auto cube = assemble_cube({"A", "B", "C"}, {"2020-01-03", "2020-01-10"},
                                    {{0, 1, {0.1, 0.2}}, {0, 2, {0.3, -0.4}}, {1, 2, {0.5, 0.6}}});
    const auto back = cube_from_json(to_json(cube));
    EXPECT_EQ(back.rho, cube.rho);
    EXPECT_EQ(back.periods, cube.periods);
    rt::TempDir dir;
    const auto files = write_cube_csv(cube, dir.path());
    ASSERT_EQ(files.size(), 2u);
    EXPECT_EQ(files[0].filename(), "00000_2020-01-03.csv");
    const auto text = rt::read_text(files[1]);
    EXPECT_THAT(text, HasSubstr(",A,B,C"));
    EXPECT_THAT(text, HasSubstr("-0.4"));
}
