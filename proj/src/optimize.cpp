#include "semibin/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "semibin/errors.hpp"

namespace semibin {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

Eigen::VectorXd project(const Eigen::VectorXd& x, const std::optional<Box>& box) {
    if (!box) return x;
    return x.cwiseMax(box->lower).cwiseMin(box->upper);
}

// Coordinates pinned at a bound whose gradient points out of the box.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const std::optional<Box>& box, bool* pinned = nullptr) {
    Eigen::VectorXd pg = g;
    bool any = false;
    if (box) {
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            if ((x[k] <= box->lower[k] && g[k] < 0.0) || (x[k] >= box->upper[k] && g[k] > 0.0)) {
                pg[k] = 0.0;
                any = true;
            }
        }
    }
    if (pinned) *pinned = any;
    return pg;
}

class Evaluator {
public:
    Evaluator(const Objective& f, int& nonfinite) : f_(f), nonfinite_(nonfinite) {}

    // Returns false when the value or gradient is not finite.
    bool operator()(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad) {
        grad.resize(x.size());
        value = f_(x, &grad);
        if (!std::isfinite(value) || !grad.allFinite()) {
            ++nonfinite_;
            return false;
        }
        return true;
    }

    bool value_only(const Eigen::VectorXd& x, double& value) {
        value = f_(x, nullptr);
        if (!std::isfinite(value)) {
            ++nonfinite_;
            return false;
        }
        return true;
    }

private:
    const Objective& f_;
    int& nonfinite_;
};

struct LineSearchResult {
    bool ok = false;
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd grad;
};

LineSearchResult backtrack(Evaluator& eval, const Eigen::VectorXd& x, double fx,
                           const Eigen::VectorXd& gx, const Eigen::VectorXd& dir,
                           double step, const std::optional<Box>& box) {
    LineSearchResult out;
    for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
        const Eigen::VectorXd trial = project(x + step * dir, box);
        const Eigen::VectorXd moved = trial - x;
        if (moved.lpNorm<Eigen::Infinity>() == 0.0) break;
        double ft;
        Eigen::VectorXd gt;
        if (!eval(trial, ft, gt)) continue;
        const double predicted = gx.dot(moved);
        if (ft > fx && ft - fx >= kArmijo * std::max(predicted, 0.0)) {
            out.ok = true;
            out.x = trial;
            out.value = ft;
            out.grad = std::move(gt);
            return out;
        }
    }
    return out;
}

// Derivative-free compass search; used when gradient steps stop improving.
bool compass_search(Evaluator& eval, Eigen::VectorXd& x, double& fx,
                    const std::optional<Box>& box, double initial_step) {
    bool improved = false;
    double step = initial_step;
    while (step > 1e-12 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
        bool moved = false;
        for (Eigen::Index k = 0; k < x.size() && !moved; ++k) {
            for (double sign : {1.0, -1.0}) {
                Eigen::VectorXd trial = x;
                trial[k] += sign * step;
                trial = project(trial, box);
                double ft;
                if (eval.value_only(trial, ft) && ft > fx) {
                    x = trial;
                    fx = ft;
                    moved = improved = true;
                    break;
                }
            }
        }
        if (!moved) step *= 0.25;
    }
    return improved;
}

}  // namespace

const char* to_string(InnerStatus s) {
    switch (s) {
        case InnerStatus::stationary: return "stationary";
        case InnerStatus::budget_exhausted: return "budget_exhausted";
        case InnerStatus::no_progress: return "no_progress";
    }
    return "unknown";
}

InnerResult inner_optimize(const Objective& objective, const Eigen::VectorXd& start,
                           const InnerOptions& options, const std::optional<Box>& box) {
    InnerResult res;
    Evaluator eval(objective, res.nonfinite_evaluations);

    Eigen::VectorXd x = project(start, box);
    double fx;
    Eigen::VectorXd gx;
    if (!eval(x, fx, gx)) throw OptimizerFailure("objective is not finite at the starting point");

    const Eigen::Index d = x.size();
    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(d, d);
    bool fresh_hessian = true;
    bool pinned = false;
    Eigen::VectorXd pg = projected_gradient(x, gx, box, &pinned);

    res.status = InnerStatus::budget_exhausted;
    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            res.status = InnerStatus::stationary;
            break;
        }

        // Pinned coordinates are frozen for this step.
        Eigen::VectorXd dir = inv_hessian * pg;
        for (Eigen::Index k = 0; k < d; ++k)
            if (pg[k] == 0.0) dir[k] = 0.0;
        if (dir.dot(pg) <= 0.0) {
            inv_hessian.setIdentity();
            fresh_hessian = true;
            dir = pg;
        }
        double step = 1.0;
        if (fresh_hessian) step = std::min(1.0, 1.0 / dir.lpNorm<Eigen::Infinity>());

        LineSearchResult ls = backtrack(eval, x, fx, gx, dir, step, box);
        if (!ls.ok && !fresh_hessian) {
            inv_hessian.setIdentity();
            fresh_hessian = true;
            ls = backtrack(eval, x, fx, gx, pg, std::min(1.0, 1.0 / pg.lpNorm<Eigen::Infinity>()), box);
        }
        if (!ls.ok) {
            // Gradient below what the objective's rounding can resolve.
            if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance * std::max(1.0, std::abs(fx))) {
                res.status = InnerStatus::stationary;
                break;
            }
            const double scale = std::max(1e-3, 1e-3 * x.lpNorm<Eigen::Infinity>());
            if (compass_search(eval, x, fx, box, scale) && eval(x, fx, gx)) {
                pg = projected_gradient(x, gx, box, &pinned);
                inv_hessian.setIdentity();
                fresh_hessian = true;
                continue;
            }
            res.status = InnerStatus::no_progress;
            break;
        }

        const Eigen::VectorXd s = ls.x - x;
        const Eigen::VectorXd yv = gx - ls.grad;  // negated gradient change: ascent form
        x = ls.x;
        fx = ls.value;
        gx = ls.grad;
        pg = projected_gradient(x, gx, box, &pinned);

        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            if (fresh_hessian) inv_hessian *= sy / yv.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(d, d) - rho * s * yv.transpose();
            inv_hessian = left * inv_hessian * left.transpose() + rho * s * s.transpose();
            fresh_hessian = false;
        }
    }

    res.x = x;
    res.value = fx;
    res.gradient_norm = pg.lpNorm<Eigen::Infinity>();
    projected_gradient(x, gx, box, &res.hit_bound);
    if (res.status == InnerStatus::no_progress && res.gradient_norm <= options.gradient_tolerance)
        res.status = InnerStatus::stationary;
    return res;
}

}  // namespace semibin
