#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

namespace risknet::optim {
namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr int kMaxLineSearchSteps = 60;

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd g;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), safeguarded
// into the interior of [a, b].
double interpolate(const Probe& a, const Probe& b) {
    const double lo = std::min(a.alpha, b.alpha);
    const double hi = std::max(a.alpha, b.alpha);
    double trial = 0.5 * (lo + hi);
    if (std::isfinite(b.f) && std::isfinite(b.slope)) {
        const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
        const double disc = d1 * d1 - a.slope * b.slope;
        if (disc >= 0.0) {
            const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
            const double c = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) /
                                           (b.slope - a.slope + 2.0 * d2);
            if (std::isfinite(c)) trial = c;
        }
    }
    const double margin = 0.1 * (hi - lo);
    return std::clamp(trial, lo + margin, hi - margin);
}

class LineSearch {
public:
    LineSearch(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& p,
               double f0, double slope0, int& evaluations)
        : f_(f), x_(x), p_(p), f0_(f0), slope0_(slope0), evaluations_(evaluations) {}

    bool run(double alpha, Probe& out) {
        Probe prev{0.0, f0_, slope0_, x_, {}};
        for (int i = 0; i < kMaxLineSearchSteps; ++i) {
            Probe cur = probe(alpha);
            if (!std::isfinite(cur.f)) {
                // Infeasible: retreat toward the last feasible point.
                alpha = prev.alpha + 0.25 * (alpha - prev.alpha);
                continue;
            }
            if (cur.f > f0_ + kC1 * alpha * slope0_ || (i > 0 && cur.f >= prev.f))
                return zoom(prev, cur, out);
            if (std::abs(cur.slope) <= -kC2 * slope0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope >= 0.0) return zoom(cur, prev, out);
            prev = std::move(cur);
            alpha *= 2.0;
        }
        return false;
    }

private:
    Probe probe(double alpha) {
        Probe pr;
        pr.alpha = alpha;
        pr.x = x_ + alpha * p_;
        pr.g = Eigen::VectorXd::Zero(x_.size());
        pr.f = f_(pr.x, pr.g);
        ++evaluations_;
        if (!std::isfinite(pr.f)) pr.f = std::numeric_limits<double>::infinity();
        pr.slope = std::isfinite(pr.f) ? pr.g.dot(p_) : std::numeric_limits<double>::quiet_NaN();
        return pr;
    }

    bool zoom(Probe lo, Probe hi, Probe& out) {
        for (int i = 0; i < kMaxLineSearchSteps; ++i) {
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
            Probe cur = probe(interpolate(lo, hi));
            if (!std::isfinite(cur.f) || cur.f > f0_ + kC1 * cur.alpha * slope0_ || cur.f >= lo.f) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -kC2 * slope0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(cur);
        }
        // Accept a point with sufficient decrease even if curvature failed.
        if (lo.alpha > 0.0 && lo.f < f0_) {
            out = std::move(lo);
            return true;
        }
        return false;
    }

    const Objective& f_;
    const Eigen::VectorXd& x_;
    const Eigen::VectorXd& p_;
    double f0_;
    double slope0_;
    int& evaluations_;
};

// Smallest-norm point of the convex hull of the columns of G (accelerated
// projected gradient on the simplex).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    Eigen::VectorXd u = v;
    std::sort(u.data(), u.data() + u.size(), std::greater<double>());
    double cumulative = 0.0, theta = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        cumulative += u[i];
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

Eigen::VectorXd min_norm_hull(const Eigen::MatrixXd& G) {
    const Eigen::Index m = G.cols();
    const Eigen::MatrixXd Q = G.transpose() * G;
    const double L = std::max(Q.diagonal().sum(), std::numeric_limits<double>::min());
    Eigen::VectorXd lambda = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    Eigen::VectorXd z = lambda;
    double t = 1.0;
    for (int it = 0; it < 5000; ++it) {
        const Eigen::VectorXd next = project_simplex(z - Q * z / L);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / t_next) * (next - lambda);
        if ((next - lambda).lpNorm<Eigen::Infinity>() < 1e-15) {
            lambda = next;
            break;
        }
        lambda = next;
        t = t_next;
    }
    return G * lambda;
}

// Deterministic points in the unit ball.
Eigen::VectorXd ball_point(Eigen::Index n, std::uint64_t& state) {
    auto next = [&] {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    };
    Eigen::VectorXd v(n);
    for (;;) {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * next() - 1.0;
        const double r = v.norm();
        if (r > 0.0 && r <= 1.0) return v;
    }
}

enum class SamplingOutcome { stationary, stepped, stuck };

SamplingOutcome gradient_sampling_step(const Objective& f, Result& res, const Settings& settings,
                                       std::uint64_t& state) {
    const Eigen::Index n = res.x.size();
    const Eigen::Index m = 2 * n + 1;
    Eigen::MatrixXd G(n, m);
    G.col(0) = res.gradient;
    Eigen::VectorXd g(n);
    for (Eigen::Index j = 1; j < m; ++j) {
        Eigen::VectorXd y = res.x;
        for (;;) {
            y = res.x + settings.sampling_radius * ball_point(n, state);
            g.setZero();
            const double fy = f(y, g);
            ++res.evaluations;
            if (std::isfinite(fy)) break;
        }
        G.col(j) = g;
    }
    const Eigen::VectorXd d = min_norm_hull(G);
    const double dn = d.norm();
    if (dn < settings.gradient_tolerance) {
        res.gradient_norm = dn;
        return SamplingOutcome::stationary;
    }
    // Armijo backtracking along -d.
    for (double step = 1.0; step > 1e-14; step *= 0.5) {
        Eigen::VectorXd y = res.x - step * d;
        g.setZero();
        const double fy = f(y, g);
        ++res.evaluations;
        if (std::isfinite(fy) && fy < res.value - 1e-6 * step * dn * dn) {
            res.x = std::move(y);
            res.value = fy;
            res.gradient = g;
            return SamplingOutcome::stepped;
        }
    }
    res.gradient_norm = dn;
    return SamplingOutcome::stuck;
}

}  // namespace

Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const Settings& settings) {
    const auto n = x0.size();
    Result res;
    res.x = std::move(x0);
    res.gradient = Eigen::VectorXd::Zero(n);
    res.value = f(res.x, res.gradient);
    res.evaluations = 1;
    if (!std::isfinite(res.value)) {
        res.message = "objective not finite at starting point";
        return res;
    }

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool fresh_metric = true;
    std::uint64_t sample_state = 0;
    for (res.iterations = 0; res.iterations < settings.max_iterations; ++res.iterations) {
        res.gradient_norm = res.gradient.norm();
        if (res.gradient_norm < settings.gradient_tolerance) {
            res.converged = true;
            res.message = "gradient norm below tolerance";
            return res;
        }
        Eigen::VectorXd p = -H * res.gradient;
        double slope = res.gradient.dot(p);
        if (!(slope < 0.0)) {
            H.setIdentity();
            fresh_metric = true;
            p = -res.gradient;
            slope = -res.gradient.squaredNorm();
        }
        const double alpha0 = fresh_metric ? std::min(1.0, 1.0 / p.lpNorm<Eigen::Infinity>()) : 1.0;

        Probe next;
        LineSearch ls(f, res.x, p, res.value, slope, res.evaluations);
        if (!ls.run(alpha0, next)) {
            if (!fresh_metric) {
                H.setIdentity();
                fresh_metric = true;
                continue;
            }
            switch (gradient_sampling_step(f, res, settings, sample_state)) {
                case SamplingOutcome::stationary:
                    res.converged = true;
                    res.nonsmooth = true;
                    res.message = "sampled subgradient norm below tolerance";
                    return res;
                case SamplingOutcome::stepped:
                    continue;
                case SamplingOutcome::stuck:
                    res.message = "line search failed to find an acceptable step";
                    return res;
            }
        }

        const Eigen::VectorXd s = next.x - res.x;
        const Eigen::VectorXd y = next.g - res.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh_metric) H *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = H * y;
            const double yHy = y.dot(Hy);
            H += (rho * rho * yHy + rho) * (s * s.transpose()) -
                 rho * (Hy * s.transpose() + s * Hy.transpose());
            fresh_metric = false;
        }
        res.x = std::move(next.x);
        res.value = next.f;
        res.gradient = std::move(next.g);
    }
    res.gradient_norm = res.gradient.norm();
    res.converged = res.gradient_norm < settings.gradient_tolerance;
    res.message = res.converged ? "gradient norm below tolerance" : "iteration limit reached";
    return res;
}

}  // namespace risknet::optim
