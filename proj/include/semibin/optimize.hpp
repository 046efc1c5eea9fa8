#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace semibin {

// Objective to be maximized. When `gradient` is non-null it must be filled
// with the gradient at `x`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* gradient)>;

struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct InnerOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;
};

enum class InnerStatus {
    stationary,        // projected gradient below tolerance
    budget_exhausted,  // iteration limit reached, best point returned
    no_progress,       // no ascent point found, start (or best) returned
};

struct InnerResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;  // max-norm of the projected gradient at x
    int iterations = 0;
    int nonfinite_evaluations = 0;
    bool hit_bound = false;  // x sits on the box with the gradient pushing outward
    InnerStatus status = InnerStatus::no_progress;
};

// Quasi-Newton (BFGS) ascent with Armijo backtracking, projected onto the box
// when one is given. Falls back to steepest ascent and then to a compass
// search when a quasi-Newton step fails to improve. The returned value is
// never below objective(start). Throws OptimizerFailure if the objective is
// not finite at the start.
InnerResult inner_optimize(const Objective& objective, const Eigen::VectorXd& start,
                           const InnerOptions& options = {},
                           const std::optional<Box>& box = std::nullopt);

const char* to_string(InnerStatus s);

}  // namespace semibin
