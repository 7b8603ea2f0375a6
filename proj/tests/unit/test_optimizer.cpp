#include <cmath>

#include <gtest/gtest.h>

#include "core/optimizer.hpp"

using namespace risknet::optim;

TEST(Bfgs, Rosenbrock) {
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    const auto r = minimize_bfgs(f, Eigen::Vector2d(-1.2, 1.0), {});
    EXPECT_TRUE(r.converged);
    EXPECT_FALSE(r.nonsmooth);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 1.0, 1e-6);
    EXPECT_LT(r.gradient_norm, 1e-6);
}

TEST(Bfgs, Quadratic) {
    Eigen::Matrix3d A;
    A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Eigen::Vector3d b(1, -2, 0.5);
    const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = A * x - b;
        return 0.5 * x.dot(A * x) - b.dot(x);
    };
    const auto r = minimize_bfgs(f, Eigen::Vector3d::Zero(), {});
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.x - A.ldlt().solve(b)).norm(), 1e-6);
}

TEST(Bfgs, InfeasibleRegionAvoided) {
    // -log barrier: infinite outside x > 0.
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        if (x[0] <= 0.0) return std::numeric_limits<double>::infinity();
        g[0] = 1.0 - 1.0 / x[0];
        return x[0] - std::log(x[0]);
    };
    const auto r = minimize_bfgs(f, Eigen::VectorXd::Constant(1, 5.0), {});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
}

TEST(Bfgs, KinkedMinimumReportedAsNonsmooth) {
    // Minimum sits on the kink of |x0|; the gradient never vanishes there.
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g[0] = (x[0] >= 0.0 ? 1.0 : -1.0) + 0.2 * x[0];
        g[1] = 2.0 * (x[1] - 1.0);
        return std::abs(x[0]) + 0.1 * x[0] * x[0] + (x[1] - 1.0) * (x[1] - 1.0);
    };
    const auto r = minimize_bfgs(f, Eigen::Vector2d(0.7, -2.0), {});
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.nonsmooth);
    EXPECT_NEAR(r.x[0], 0.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
    EXPECT_LT(r.gradient_norm, 1e-6);
}

TEST(Bfgs, UnboundedHitsLimit) {
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g[0] = -1.0;
        return -x[0];
    };
    Settings s;
    s.max_iterations = 30;
    const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(1), s);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.message.empty());
}

TEST(Bfgs, NonFiniteStart) {
    const Objective f = [](const Eigen::VectorXd&, Eigen::VectorXd&) { return std::nan(""); };
    const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(2), {});
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.message, "objective not finite at starting point");
}
