#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace risknet::optim {

struct Settings {
    double gradient_tolerance = 1e-6;  // Euclidean norm of the gradient
    int max_iterations = 500;
    double sampling_radius = 1e-6;     // neighbourhood for gradient sampling at kinks
};

struct Result {
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    double gradient_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool nonsmooth = false;  // stopped by the sampled-gradient test
    std::string message;
};

/// Objective returning f(x) and writing the gradient. Infeasible points return
/// +inf (the gradient is then ignored).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Unconstrained BFGS minimizer with a strong-Wolfe line search. Constraints are
/// expected to be handled by the caller through a parameter transform.
///
/// For piecewise-smooth objectives BFGS can stall on a kink where the gradient
/// does not vanish. When the line search fails from a fresh metric, gradients
/// are sampled in a ball of radius `sampling_radius` around x and the
/// smallest-norm element d of their convex hull is formed. If |d| is below
/// the tolerance the point is reported as converged (gradient_norm = |d|,
/// nonsmooth = true); otherwise a step along -d is taken and BFGS resumes.
/// At smooth points |d| reduces to the gradient norm.
Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const Settings& settings);

}  // namespace risknet::optim
