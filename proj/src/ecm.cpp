#include "semibin/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semibin/errors.hpp"
#include "semibin/random.hpp"
#include "semibin/selection.hpp"
#include "semibin/stats.hpp"

namespace semibin {

namespace {

constexpr double kWeightFloor = 1e-12;
constexpr int kEscapeGrid = 121;
constexpr std::size_t kEscapePeaks = 3;
constexpr double kEscapeGain = 1e-2;  // ignore creeping along a flat ridge
constexpr double kDenominatorFloor = 1e-300;

// Responsibility sums over the G index: ey(i, m) = y_i sum_j e_ijm and
// lam(i, m) = sum_j e_ijm lambda_j.
struct SliceWeights {
    Eigen::MatrixXd ey;
    Eigen::MatrixXd lam;
};

SliceWeights slice_weights(const Dataset& data, const PosteriorWeights& e,
                           std::span<const double> lambda) {
    const std::size_t r = e.rows(), k1 = e.k1(), k2 = e.k2();
    SliceWeights s{Eigen::MatrixXd::Zero(r, k2), Eigen::MatrixXd::Zero(r, k2)};
    for (std::size_t i = 0; i < r; ++i) {
        const double yi = static_cast<double>(data.y[i]);
        for (std::size_t j = 0; j < k1; ++j) {
            for (std::size_t m = 0; m < k2; ++m) {
                const double w = e(i, j, m);
                s.ey(i, m) += w * yi;
                s.lam(i, m) += w * lambda[j];
            }
        }
    }
    return s;
}

// sum_i [ey(i,m) log p(a + eta_i) - lam(i,m) p(a + eta_i)] for one m, and
// its derivative in a.
double alpha_slice(const SliceWeights& s, const Eigen::VectorXd& eta, Eigen::Index m, double a,
                   double* deriv) {
    double f = 0.0, g = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double t = a + eta[i];
        const double p = logistic(t);
        const double ey = s.ey(i, m);
        const double lam = s.lam(i, m);
        if (ey != 0.0) f += ey * log_logistic(t);
        f -= lam * p;
        g += (ey - lam * p) * (1.0 - p);
    }
    if (deriv) *deriv = g;
    return f;
}

double beta_slice(const Dataset& data, const SliceWeights& s, std::span<const double> alpha,
                  const Eigen::VectorXd& beta, Eigen::VectorXd* grad) {
    const Eigen::VectorXd eta = data.x * beta;
    Eigen::VectorXd dt(eta.size());
    double f = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double gi = 0.0;
        for (std::size_t m = 0; m < alpha.size(); ++m) {
            const auto mi = static_cast<Eigen::Index>(m);
            const double t = alpha[m] + eta[i];
            const double p = logistic(t);
            const double ey = s.ey(i, mi);
            const double lam = s.lam(i, mi);
            if (ey != 0.0) f += ey * log_logistic(t);
            f -= lam * p;
            gi += (ey - lam * p) * (1.0 - p);
        }
        dt[i] = gi;
    }
    if (grad) *grad = data.x.transpose() * dt;
    return f;
}

std::vector<double> normalized(std::vector<double> w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    return w;
}

template <typename T>
void erase_indices(std::vector<T>& v, const std::vector<std::size_t>& drop) {
    std::vector<T> kept;
    kept.reserve(v.size());
    for (std::size_t k = 0; k < v.size(); ++k)
        if (std::find(drop.begin(), drop.end(), k) == drop.end()) kept.push_back(v[k]);
    v = std::move(kept);
}

// Sorts support points ascending (carrying weights) and merges ties.
void canonicalize(std::vector<double>& support, std::vector<double>& weights) {
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    std::vector<double> s, w;
    for (std::size_t k : order) {
        if (!s.empty() && s.back() == support[k]) {
            w.back() += weights[k];
        } else {
            s.push_back(support[k]);
            w.push_back(weights[k]);
        }
    }
    support = std::move(s);
    weights = std::move(w);
}

struct State {
    Eigen::VectorXd beta;
    std::vector<double> lambda, rho, alpha, pi;

    MixtureView view() const { return {lambda, rho, alpha, pi}; }

    std::vector<double> packed() const {
        std::vector<double> v(beta.data(), beta.data() + beta.size());
        for (const auto* part : {&lambda, &rho, &alpha, &pi}) v.insert(v.end(), part->begin(), part->end());
        return v;
    }
};

}  // namespace

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::tolerance_met: return "tolerance_met";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::degenerate: return "degenerate";
    }
    return "unknown";
}

void FitConfig::validate() const {
    if (max_iterations < 1) throw InputError("max_iterations must be at least 1");
    if (!(loglik_tolerance > 0.0) || !(param_tolerance > 0.0))
        throw InputError("convergence tolerances must be positive");
    if (inner.max_iterations < 1 || !(inner.gradient_tolerance > 0.0))
        throw InputError("inner optimizer settings must be positive");
    if (!(alpha_bound > 0.0)) throw InputError("alpha bound must be positive");
    if (n_starts < 1 || short_run_iterations < 1) throw InputError("multi-start settings must be positive");
    if (escape_rounds < 0) throw InputError("escape_rounds must be nonnegative");
    if (!(init.beta_scale_max >= 1.0)) throw InputError("beta_scale_max must be at least 1");
}

PosteriorWeights e_step(const Dataset& data, const Eigen::VectorXd& beta, const MixtureView& mix) {
    const std::size_t r = data.rows(), k1 = mix.lambda.size(), k2 = mix.alpha.size();
    PosteriorWeights e(r, k1, k2);
    const Eigen::VectorXd eta = data.x * beta;

    std::vector<double> log_rho(k1), log_lambda(k1), log_pi(k2), terms(k1 * k2);
    for (std::size_t j = 0; j < k1; ++j) {
        log_rho[j] = std::log(mix.rho[j]);
        log_lambda[j] = std::log(mix.lambda[j]);
    }
    for (std::size_t m = 0; m < k2; ++m) log_pi[m] = std::log(mix.pi[m]);

    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        const double yi = static_cast<double>(data.y[i]);
        for (std::size_t m = 0; m < k2; ++m) {
            const double t = mix.alpha[m] + eta[i];
            const double p = logistic(t);
            const double y_log_p = data.y[i] == 0 ? 0.0 : yi * log_logistic(t);
            for (std::size_t j = 0; j < k1; ++j) {
                const double y_log_lambda = data.y[i] == 0 ? 0.0 : yi * log_lambda[j];
                terms[j * k2 + m] = log_rho[j] + log_pi[m] + y_log_lambda + y_log_p - mix.lambda[j] * p;
            }
        }
        const double norm = log_sum_exp(terms);
        if (!std::isfinite(norm))
            throw DegenerateLikelihood("every component density is zero for observation " +
                                       std::to_string(i + 1));
        for (std::size_t j = 0; j < k1; ++j)
            for (std::size_t m = 0; m < k2; ++m) e(i, j, m) = std::exp(terms[j * k2 + m] - norm);
        total += norm - log_factorial(data.y[i]);
    }
    e.loglik = total;
    return e;
}

PosteriorWeights e_step(const Dataset& data, const ModelParams& params) {
    return e_step(data, params.beta, view_of(params));
}

std::vector<double> cm_step_rho(const PosteriorWeights& e) {
    std::vector<double> rho(e.k1(), 0.0);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.k1(); ++j)
            for (std::size_t m = 0; m < e.k2(); ++m) rho[j] += e(i, j, m);
    for (double& v : rho) v /= static_cast<double>(e.rows());
    return normalized(std::move(rho));
}

std::vector<double> cm_step_pi(const PosteriorWeights& e) {
    std::vector<double> pi(e.k2(), 0.0);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.k1(); ++j)
            for (std::size_t m = 0; m < e.k2(); ++m) pi[m] += e(i, j, m);
    for (double& v : pi) v /= static_cast<double>(e.rows());
    return normalized(std::move(pi));
}

LambdaStep cm_step_lambda(const Dataset& data, const PosteriorWeights& e,
                          std::span<const double> alpha_prev, const Eigen::VectorXd& beta_prev) {
    const Eigen::VectorXd eta = data.x * beta_prev;
    std::vector<double> num(e.k1(), 0.0), den(e.k1(), 0.0);
    for (std::size_t i = 0; i < e.rows(); ++i) {
        const double yi = static_cast<double>(data.y[i]);
        for (std::size_t m = 0; m < e.k2(); ++m) {
            const double p = logistic(alpha_prev[m] + eta[i]);
            for (std::size_t j = 0; j < e.k1(); ++j) {
                num[j] += e(i, j, m) * yi;
                den[j] += e(i, j, m) * p;
            }
        }
    }
    LambdaStep out;
    out.lambda.assign(e.k1(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < e.k1(); ++j) {
        if (den[j] < kDenominatorFloor) {
            out.degenerate.push_back(j);
        } else if (num[j] <= 0.0) {
            out.zero.push_back(j);
            out.lambda[j] = 0.0;
        } else {
            out.lambda[j] = num[j] / den[j];
        }
    }
    return out;
}

AlphaStep cm_step_alpha(const Dataset& data, const PosteriorWeights& e,
                        std::span<const double> lambda_new, std::span<const double> alpha_prev,
                        const Eigen::VectorXd& beta_prev, const InnerOptions& options,
                        double alpha_bound) {
    const SliceWeights s = slice_weights(data, e, lambda_new);
    const Eigen::VectorXd eta = data.x * beta_prev;
    const Box box{Eigen::VectorXd::Constant(1, -alpha_bound), Eigen::VectorXd::Constant(1, alpha_bound)};

    AlphaStep out;
    for (std::size_t m = 0; m < e.k2(); ++m) {
        const auto mi = static_cast<Eigen::Index>(m);
        const Objective obj = [&](const Eigen::VectorXd& a, Eigen::VectorXd* grad) {
            double d;
            const double f = alpha_slice(s, eta, mi, a[0], grad ? &d : nullptr);
            if (grad) (*grad)[0] = d;
            return f;
        };
        InnerResult res;
        if (s.ey.col(mi).sum() == 0.0 && s.lam.col(mi).sum() > 0.0) {
            // No counts assigned: the slice is strictly decreasing, so its
            // maximizer is the lower bound (the optimizer would stall on a
            // vanishing gradient well before reaching it).
            res.x = box.lower;
            res.value = obj(res.x, nullptr);
            res.hit_bound = true;
            res.status = InnerStatus::stationary;
        } else {
            res = inner_optimize(obj, Eigen::VectorXd::Constant(1, alpha_prev[m]), options, box);
        }
        out.alpha.push_back(res.x[0]);
        out.inner.push_back(std::move(res));
    }
    return out;
}

InnerResult cm_step_beta(const Dataset& data, const PosteriorWeights& e,
                         std::span<const double> lambda_new, std::span<const double> alpha_new,
                         const Eigen::VectorXd& beta_prev, const InnerOptions& options) {
    const SliceWeights s = slice_weights(data, e, lambda_new);
    const Objective obj = [&](const Eigen::VectorXd& b, Eigen::VectorXd* grad) {
        return beta_slice(data, s, alpha_new, b, grad);
    };
    return inner_optimize(obj, beta_prev, options);
}

double t3_objective(const Dataset& data, const PosteriorWeights& e, std::span<const double> lambda,
                    std::span<const double> alpha, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = data.x * beta;
    double f = 0.0;
    for (std::size_t i = 0; i < e.rows(); ++i) {
        const double yi = static_cast<double>(data.y[i]);
        for (std::size_t j = 0; j < e.k1(); ++j) {
            for (std::size_t m = 0; m < e.k2(); ++m) {
                const double w = e(i, j, m);
                if (w == 0.0) continue;
                const double t = alpha[m] + eta[i];
                double term = -lambda[j] * logistic(t);
                if (data.y[i] != 0) term += yi * (std::log(lambda[j]) + log_logistic(t));
                f += w * term;
            }
        }
    }
    return f;
}

Eigen::VectorXd t3_beta_gradient(const Dataset& data, const PosteriorWeights& e,
                                 std::span<const double> lambda, std::span<const double> alpha,
                                 const Eigen::VectorXd& beta) {
    const SliceWeights s = slice_weights(data, e, lambda);
    Eigen::VectorXd grad;
    beta_slice(data, s, alpha, beta, &grad);
    return grad;
}

PoissonRegression poisson_regression(const Dataset& data, int max_iterations) {
    const Eigen::Index r = data.x.rows(), p = data.x.cols();
    bool has_constant = false;
    for (Eigen::Index c = 0; c < p && !has_constant; ++c)
        has_constant = (data.x.col(c).array() == data.x(0, c)).all() && data.x(0, c) != 0.0;

    const Eigen::Index q = has_constant ? p : p + 1;
    Eigen::MatrixXd design(r, q);
    design.leftCols(p) = data.x;
    if (!has_constant) design.col(p).setOnes();

    Eigen::VectorXd y(r);
    for (Eigen::Index i = 0; i < r; ++i) y[i] = static_cast<double>(data.y[static_cast<std::size_t>(i)]);

    PoissonRegression out;
    Eigen::VectorXd mu = (y.array() + 0.1).matrix();
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
    double deviance_prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd z = (mu.array().log() + (y - mu).array() / mu.array()).matrix();
        const Eigen::MatrixXd xtw = design.transpose() * mu.asDiagonal();
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtw * design);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        const Eigen::VectorXd next = ldlt.solve(xtw * z);
        if (!next.allFinite()) break;
        coef = next;
        mu = (design * coef).array().exp().matrix();
        if (!mu.allFinite()) break;
        double deviance = 0.0;
        for (Eigen::Index i = 0; i < r; ++i) {
            if (y[i] > 0) deviance += 2.0 * (y[i] * std::log(y[i] / mu[i]) - (y[i] - mu[i]));
            else deviance += 2.0 * mu[i];
        }
        if (std::abs(deviance - deviance_prev) <= 1e-8 * (std::abs(deviance) + 0.1)) {
            out.converged = true;
            break;
        }
        deviance_prev = deviance;
    }
    out.coefficients = coef.head(p);
    out.intercept = has_constant ? 0.0 : coef[p];
    return out;
}

ModelParams initialize(const Dataset& data, std::size_t k1, std::size_t k2, std::uint64_t seed,
                       const InitSpec& spec, int start_index) {
    if (k1 < 1 || k2 < 1) throw ContractViolation("k1 and k2 must be at least 1");
    const PoissonRegression pr = poisson_regression(data, spec.poisson_max_iterations);
    Eigen::VectorXd beta = pr.converged && pr.coefficients.allFinite()
                               ? pr.coefficients
                               : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.dim()));

    Rng rng(derive_seed(seed, SeedStream::initialization, static_cast<std::uint64_t>(start_index)));
    auto jitter = [&] { return spec.jitter * (2.0 * uniform01(rng) - 1.0); };
    const double w = spec.alpha_half_width;
    // Mixing over alpha flattens the marginal dose response, so the log-link
    // slopes understate beta; later starts stretch them.
    if (start_index != 0) beta *= std::exp(uniform01(rng) * std::log(spec.beta_scale_max));

    const Eigen::VectorXd eta = data.x * beta;
    std::vector<double> scaled(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i)
        scaled[i] = static_cast<double>(data.y[i]) / logistic(eta[static_cast<Eigen::Index>(i)]);
    std::sort(scaled.begin(), scaled.end());

    std::vector<double> lambda(k1), alpha(k2);
    for (std::size_t j = 0; j < k1; ++j) {
        const double prob = start_index == 0
                                ? (static_cast<double>(j) + 0.5) / static_cast<double>(k1)
                                : uniform01(rng);
        lambda[j] = std::max(quantile_type7(scaled, prob), 0.5);
    }
    for (std::size_t m = 0; m < k2; ++m) {
        if (start_index != 0) {
            alpha[m] = -w + 2.0 * w * uniform01(rng);
        } else {
            alpha[m] = k2 == 1 ? 0.0
                               : -w + 2.0 * w * static_cast<double>(m) / static_cast<double>(k2 - 1);
        }
    }
    for (double& l : lambda) l *= 1.0 + jitter();
    for (double& a : alpha) a += w * jitter();

    return ModelParams(std::move(beta),
                       MixingDistribution(lambda, std::vector<double>(k1, 1.0 / static_cast<double>(k1)),
                                          Domain::positive),
                       MixingDistribution(alpha, std::vector<double>(k2, 1.0 / static_cast<double>(k2)),
                                          Domain::unrestricted));
}

namespace {

FitResult run_ecm(const Dataset& data, const ModelParams& start, const FitConfig& config,
                  int max_iterations) {
    if (static_cast<std::size_t>(start.beta.size()) != data.dim())
        throw InputError("starting beta length does not match the design");

    State st{start.beta, start.g.support(), start.g.weights(), start.h.support(), start.h.weights()};
    for (double& a : st.alpha) a = std::clamp(a, -config.alpha_bound, config.alpha_bound);

    FitResult res;
    std::vector<double> prev_theta;
    double prev_ll = -std::numeric_limits<double>::infinity();
    double last_ascent = std::numeric_limits<double>::infinity();

    for (int it = 0;; ++it) {
        const PosteriorWeights e = e_step(data, st.beta, st.view());
        const double ll = e.loglik;
        res.trace.push_back(ll);
        const std::vector<double> theta = st.packed();

        if (!prev_theta.empty() && prev_theta.size() == theta.size()) {
            last_ascent = ll - prev_ll;
            double change = 0.0;
            for (std::size_t k = 0; k < theta.size(); ++k)
                change = std::max(change, std::abs(theta[k] - prev_theta[k]));
            if (std::abs(last_ascent) < config.loglik_tolerance && change < config.param_tolerance) {
                res.converged = true;
                res.reason = StopReason::tolerance_met;
                res.n_iterations = it;
                res.loglik = ll;
                break;
            }
        } else {
            last_ascent = std::numeric_limits<double>::infinity();
        }
        if (it >= max_iterations) {
            res.reason = StopReason::max_iterations;
            res.n_iterations = it;
            res.loglik = ll;
            res.ridge = std::abs(last_ascent) < config.loglik_tolerance;
            break;
        }
        prev_ll = ll;
        prev_theta = theta;

        std::vector<double> rho = cm_step_rho(e);
        std::vector<double> pi = cm_step_pi(e);
        std::vector<std::size_t> drop_g, drop_h;
        for (std::size_t j = 0; j < rho.size(); ++j)
            if (rho[j] < kWeightFloor) drop_g.push_back(j);
        for (std::size_t m = 0; m < pi.size(); ++m)
            if (pi[m] < kWeightFloor) drop_h.push_back(m);
        if (drop_g.size() == rho.size() || drop_h.size() == pi.size())
            throw DegenerateComponent("every component of a mixing distribution lost its weight");
        if (!drop_g.empty() || !drop_h.empty()) {
            erase_indices(rho, drop_g);
            erase_indices(st.lambda, drop_g);
            erase_indices(pi, drop_h);
            erase_indices(st.alpha, drop_h);
            st.rho = normalized(std::move(rho));
            st.pi = normalized(std::move(pi));
            res.dropped_components += static_cast<int>(drop_g.size() + drop_h.size());
            prev_theta.clear();
            continue;
        }
        st.rho = std::move(rho);
        st.pi = std::move(pi);

        LambdaStep lam = cm_step_lambda(data, e, st.alpha, st.beta);
        if (!lam.degenerate.empty() || !lam.zero.empty()) {
            std::vector<std::size_t> drop = lam.degenerate;
            drop.insert(drop.end(), lam.zero.begin(), lam.zero.end());
            if (drop.size() == st.lambda.size())
                throw DegenerateComponent("every size component lost its responsibility");
            for (std::size_t j = 0; j < st.lambda.size(); ++j)
                if (std::find(drop.begin(), drop.end(), j) == drop.end()) st.lambda[j] = lam.lambda[j];
            erase_indices(st.lambda, drop);
            erase_indices(st.rho, drop);
            st.rho = normalized(std::move(st.rho));
            res.dropped_components += static_cast<int>(drop.size());
            prev_theta.clear();
            continue;
        }
        st.lambda = std::move(lam.lambda);

        AlphaStep alpha = cm_step_alpha(data, e, st.lambda, st.alpha, st.beta, config.inner, config.alpha_bound);
        for (const InnerResult& ir : alpha.inner)
            if (ir.status == InnerStatus::no_progress) ++res.inner_failures;
        st.alpha = std::move(alpha.alpha);

        InnerResult beta = cm_step_beta(data, e, st.lambda, st.alpha, st.beta, config.inner);
        if (beta.status == InnerStatus::no_progress) ++res.inner_failures;
        st.beta = std::move(beta.x);

        const std::size_t k1_before = st.lambda.size(), k2_before = st.alpha.size();
        canonicalize(st.lambda, st.rho);
        canonicalize(st.alpha, st.pi);
        if (st.lambda.size() != k1_before || st.alpha.size() != k2_before) prev_theta.clear();
    }

    res.params = ModelParams(st.beta, MixingDistribution(st.lambda, st.rho, Domain::positive),
                             MixingDistribution(st.alpha, st.pi, Domain::unrestricted));
    res.bic = bic(res.loglik, res.params.k1(), res.params.k2(), data.rows(), data.dim());
    return res;
}

// Gradient function of the likelihood in the direction of a point mass at
// each candidate: sum_i f(y_i | candidate) / f(y_i) - r.
std::vector<double> mixture_gradient(const Dataset& data, const ModelParams& params, bool size_mixture,
                                     const std::vector<double>& candidates) {
    const Eigen::VectorXd eta = data.x * params.beta;
    const MixingDistribution& other = size_mixture ? params.h : params.g;
    std::vector<double> log_f(data.rows());
    const MixtureView view = view_of(params);
    std::vector<double> terms;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        terms.clear();
        for (std::size_t j = 0; j < view.lambda.size(); ++j)
            for (std::size_t m = 0; m < view.alpha.size(); ++m)
                terms.push_back(std::log(view.rho[j]) + std::log(view.pi[m]) +
                                poisson_logit_log_density(data.y[i], view.lambda[j], view.alpha[m] + eta[ii]));
        log_f[i] = log_sum_exp(terms);
    }
    std::vector<double> out;
    out.reserve(candidates.size());
    for (double c : candidates) {
        double d = -static_cast<double>(data.rows());
        for (std::size_t i = 0; i < data.rows(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            terms.clear();
            for (std::size_t k = 0; k < other.size(); ++k) {
                const double lambda = size_mixture ? c : other.support()[k];
                const double alpha = size_mixture ? other.support()[k] : c;
                terms.push_back(std::log(other.weights()[k]) +
                                poisson_logit_log_density(data.y[i], lambda, alpha + eta[ii]));
            }
            d += std::exp(log_sum_exp(terms) - log_f[i]);
        }
        out.push_back(d);
    }
    return out;
}

// One escape move: where the gradient function shows that a new support
// point would raise the likelihood, try moving each existing point there,
// or add the point outright if the mixture has fewer points than requested.
// Returns the refitted result if some move ends above `current`.
std::optional<FitResult> escape_move(const Dataset& data, const FitResult& current, std::size_t k1,
                                     std::size_t k2, const FitConfig& config) {
    const ModelParams& p = current.params;
    const double y_max = static_cast<double>(*std::max_element(data.y.begin(), data.y.end()));
    std::optional<FitResult> best;
    for (bool size_mixture : {true, false}) {
        const MixingDistribution& mix = size_mixture ? p.g : p.h;
        std::vector<double> grid;
        if (size_mixture) {
            const double lo = 0.5;
            const double hi = std::max(2.0 * y_max, 2.0 * mix.support().back()) + 1.0;
            for (int k = 0; k < kEscapeGrid; ++k)
                grid.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (kEscapeGrid - 1)));
        } else {
            const double lo = std::max(mix.support().front() - 6.0, -config.alpha_bound);
            const double hi = std::min(mix.support().back() + 6.0, config.alpha_bound);
            for (int k = 0; k < kEscapeGrid; ++k)
                grid.push_back(lo + (hi - lo) * static_cast<double>(k) / (kEscapeGrid - 1));
        }
        const std::vector<double> d = mixture_gradient(data, p, size_mixture, grid);
        std::vector<std::size_t> peaks;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const bool left = k == 0 || d[k] >= d[k - 1];
            const bool right = k + 1 == grid.size() || d[k] >= d[k + 1];
            if (left && right && d[k] > kEscapeGain) peaks.push_back(k);
        }
        std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
        if (peaks.size() > kEscapePeaks) peaks.resize(kEscapePeaks);
        const bool short_of_points = mix.size() < (size_mixture ? k1 : k2);
        for (std::size_t k : peaks) {
            // at == mix.size() stands for adding a point
            for (std::size_t at = 0; at < mix.size() + (short_of_points ? 1 : 0); ++at) {
                std::vector<double> support = mix.support();
                std::vector<double> weights = mix.weights();
                if (at < mix.size()) {
                    support[at] = grid[k];
                } else {
                    const double w_new = 1.0 / static_cast<double>(mix.size() + 1);
                    for (double& w : weights) w *= 1.0 - w_new;
                    support.push_back(grid[k]);
                    weights.push_back(w_new);
                }
                try {
                    MixingDistribution moved(support, weights, mix.domain());
                    if (moved.size() != support.size()) continue;
                    const ModelParams start = size_mixture ? ModelParams(p.beta, std::move(moved), p.h)
                                                           : ModelParams(p.beta, p.g, std::move(moved));
                    FitResult r = run_ecm(data, start, config, config.short_run_iterations);
                    if (r.loglik > current.loglik + kEscapeGain && (!best || r.loglik > best->loglik))
                        best = std::move(r);
                } catch (const Error&) {
                    // a move that degenerates is simply not taken
                }
            }
        }
    }
    if (!best) return std::nullopt;
    FitResult full = run_ecm(data, best->params, config, config.max_iterations);
    if (!(full.loglik > current.loglik + kEscapeGain)) return std::nullopt;
    return full;
}

}  // namespace

FitResult fit(const Dataset& data, std::size_t k1, std::size_t k2, const FitConfig& config) {
    config.validate();
    if (k1 < 1 || k2 < 1) throw ContractViolation("k1 and k2 must be at least 1");

    std::vector<ModelParams> starts;
    if (config.warm_start) {
        starts.push_back(*config.warm_start);
    } else {
        for (int s = 0; s < std::max(config.n_starts, 1); ++s)
            starts.push_back(initialize(data, k1, k2, config.seed, config.init, s));
        starts.insert(starts.end(), config.extra_starts.begin(), config.extra_starts.end());
    }

    ModelParams chosen = starts.front();
    if (starts.size() > 1) {
        // Short-run competition; starts that fail outright are skipped.
        std::optional<FitResult> best;
        std::string last_error;
        for (const ModelParams& s : starts) {
            try {
                FitResult r = run_ecm(data, s, config, config.short_run_iterations);
                if (!best || r.loglik > best->loglik) best = std::move(r);
            } catch (const Error& err) {
                last_error = err.what();
            }
        }
        if (!best) throw DegenerateLikelihood("no starting point could be fitted: " + last_error);
        chosen = best->params;
    }

    FitResult res = run_ecm(data, chosen, config, config.max_iterations);
    for (int round = 0; round < config.escape_rounds; ++round) {
        std::optional<FitResult> moved = escape_move(data, res, k1, k2, config);
        if (!moved) break;
        const int escapes = res.escapes + 1;
        const int dropped = res.dropped_components + moved->dropped_components;
        const int failures = res.inner_failures + moved->inner_failures;
        res = std::move(*moved);
        res.escapes = escapes;
        res.dropped_components = dropped;
        res.inner_failures = failures;
    }
    res.requested_k1 = k1;
    res.requested_k2 = k2;
    return res;
}

}  // namespace semibin
