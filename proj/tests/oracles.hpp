#pragma once

// Reference computations for the tests. Nothing here calls into the library
// numerics: densities are evaluated from the raw formula in long double,
// maximizers come from golden-section or grid search.

#include <cmath>
#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "semibin/ecm.hpp"
#include "semibin/model.hpp"

namespace oracle {

inline long double logistic(long double t) { return 1.0L / (1.0L + std::exp(-t)); }

// Raw Poisson(lambda p(t)) probability of y, no log-space tricks.
inline long double density(long long y, long double lambda, long double t) {
    const long double mu = lambda * logistic(t);
    long double f = std::exp(-mu);
    for (long long k = 1; k <= y; ++k) f *= mu / static_cast<long double>(k);
    return f;
}

inline long double loglik(const semibin::Dataset& d, const semibin::ModelParams& p) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        long double eta = 0.0L;
        for (Eigen::Index c = 0; c < d.x.cols(); ++c) eta += d.x(static_cast<Eigen::Index>(i), c) * p.beta[c];
        long double f = 0.0L;
        for (std::size_t j = 0; j < p.k1(); ++j)
            for (std::size_t m = 0; m < p.k2(); ++m)
                f += static_cast<long double>(p.g.weights()[j]) * p.h.weights()[m] *
                     density(d.y[i], p.g.support()[j], p.h.support()[m] + eta);
        total += std::log(f);
    }
    return total;
}

// e[i][j][m] from the definition.
inline std::vector<std::vector<std::vector<long double>>> responsibilities(const semibin::Dataset& d,
                                                                           const semibin::ModelParams& p) {
    std::vector<std::vector<std::vector<long double>>> e(
        d.rows(), std::vector<std::vector<long double>>(p.k1(), std::vector<long double>(p.k2())));
    for (std::size_t i = 0; i < d.rows(); ++i) {
        long double eta = 0.0L;
        for (Eigen::Index c = 0; c < d.x.cols(); ++c) eta += d.x(static_cast<Eigen::Index>(i), c) * p.beta[c];
        long double total = 0.0L;
        for (std::size_t j = 0; j < p.k1(); ++j)
            for (std::size_t m = 0; m < p.k2(); ++m) {
                e[i][j][m] = static_cast<long double>(p.g.weights()[j]) * p.h.weights()[m] *
                             density(d.y[i], p.g.support()[j], p.h.support()[m] + eta);
                total += e[i][j][m];
            }
        for (auto& row : e[i])
            for (auto& v : row) v /= total;
    }
    return e;
}

// Maximizer of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Grid search on [lo, hi] with n points, then golden section around the best.
inline double grid_then_golden(const std::function<double(double)>& f, double lo, double hi, int n = 2001) {
    double best = lo, best_f = f(lo);
    const double h = (hi - lo) / (n - 1);
    for (int k = 1; k < n; ++k) {
        const double t = lo + h * k;
        const double v = f(t);
        if (v > best_f) {
            best_f = v;
            best = t;
        }
    }
    return golden_section(f, std::max(lo, best - h), std::min(hi, best + h));
}

// Cyclic coordinate golden-section on softmax logits: maximizer of
// sum_k c_k log w_k over the simplex, found without the closed form.
inline std::vector<double> simplex_argmax(const std::vector<double>& c) {
    const std::size_t k = c.size();
    std::vector<double> theta(k, 0.0);
    auto objective = [&](const std::vector<double>& th) {
        double mx = *std::max_element(th.begin(), th.end()), s = 0.0;
        for (double t : th) s += std::exp(t - mx);
        double v = 0.0;
        for (std::size_t j = 0; j < k; ++j) v += c[j] * (th[j] - mx - std::log(s));
        return v;
    };
    for (int sweep = 0; sweep < 400; ++sweep)
        for (std::size_t j = 0; j + 1 < k; ++j)
            theta[j] = golden_section(
                [&](double t) {
                    auto th = theta;
                    th[j] = t;
                    return objective(th);
                },
                -40.0, 40.0, 1e-14);
    double mx = *std::max_element(theta.begin(), theta.end()), s = 0.0;
    for (double t : theta) s += std::exp(t - mx);
    std::vector<double> w(k);
    for (std::size_t j = 0; j < k; ++j) w[j] = std::exp(theta[j] - mx) / s;
    return w;
}

inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd a = x, b = x;
        a[k] += h;
        b[k] -= h;
        g[k] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

// T3 written out term by term from its definition.
inline double t3(const semibin::Dataset& d, const semibin::PosteriorWeights& e, const std::vector<double>& lambda,
                 const std::vector<double>& alpha, const Eigen::VectorXd& beta) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const double eta = d.x.row(static_cast<Eigen::Index>(i)).dot(beta);
        for (std::size_t j = 0; j < lambda.size(); ++j)
            for (std::size_t m = 0; m < alpha.size(); ++m) {
                const long double p = logistic(alpha[m] + eta);
                total += e(i, j, m) * (d.y[i] * std::log(static_cast<long double>(lambda[j])) + d.y[i] * std::log(p) -
                                       lambda[j] * p);
            }
    }
    return static_cast<double>(total);
}

// Small random instance: r rows, p covariates in [-1, 1], counts drawn
// from the model at random parameters.
struct Instance {
    semibin::Dataset data;
    semibin::ModelParams params;
};

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> w(k);
    double s = 0.0;
    for (double& v : w) s += v = 0.2 + ex(rng);
    for (double& v : w) v /= s;
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < k; ++i) rest -= w[i];
    w.back() = rest;
    return w;
}

inline Instance random_instance(std::mt19937_64& rng, std::size_t r, std::size_t p, std::size_t k1, std::size_t k2) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> lam(2.0, 40.0);
    std::vector<double> ls(k1), as(k2);
    for (double& v : ls) v = lam(rng);
    for (double& v : as) v = 1.5 * u(rng);
    Eigen::VectorXd beta(static_cast<Eigen::Index>(p));
    for (Eigen::Index c = 0; c < beta.size(); ++c) beta[c] = 1.5 * u(rng);
    semibin::ModelParams params(beta, semibin::MixingDistribution(ls, random_simplex(rng, k1), semibin::Domain::positive),
                                semibin::MixingDistribution(as, random_simplex(rng, k2), semibin::Domain::unrestricted));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = u(rng);
    std::vector<semibin::Count> y(r);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (std::size_t i = 0; i < r; ++i) {
        auto pick = [&](const std::vector<double>& w) {
            double acc = 0.0, v = u01(rng);
            for (std::size_t k = 0; k < w.size(); ++k)
                if (v < (acc += w[k])) return k;
            return w.size() - 1;
        };
        const double l = params.g.support()[pick(params.g.weights())];
        const double a = params.h.support()[pick(params.h.weights())];
        std::poisson_distribution<long long> pois(l * static_cast<double>(logistic(a + x.row(static_cast<Eigen::Index>(i)).dot(beta))));
        y[i] = pois(rng);
    }
    return {semibin::Dataset(std::move(y), std::move(x)), std::move(params)};
}

}  // namespace oracle
