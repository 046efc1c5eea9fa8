#pragma once

// ECM fitting of the semiparametric model: one E-step followed by five
// conditional maximization steps over rho, pi, lambda, alpha and beta, in
// that order, per iteration.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semibin/model.hpp"
#include "semibin/optimize.hpp"

namespace semibin {

// Responsibilities e(i, j, m), stored i-major.
class PosteriorWeights {
public:
    PosteriorWeights() = default;
    PosteriorWeights(std::size_t r, std::size_t k1, std::size_t k2)
        : r_(r), k1_(k1), k2_(k2), e_(r * k1 * k2, 0.0) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t m) {
        return e_[(i * k1_ + j) * k2_ + m];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t m) const {
        return e_[(i * k1_ + j) * k2_ + m];
    }

    std::size_t rows() const { return r_; }
    std::size_t k1() const { return k1_; }
    std::size_t k2() const { return k2_; }

    // Observed-data log-likelihood at the parameters the weights came from.
    double loglik = 0.0;

private:
    std::size_t r_ = 0, k1_ = 0, k2_ = 0;
    std::vector<double> e_;
};

struct InitSpec {
    double alpha_half_width = 1.5;  // alpha support spread over [-w, w]
    double jitter = 0.05;           // relative jitter on support points
    int poisson_max_iterations = 25;
    double beta_scale_max = 8.0;  // starts after the first scale beta0 by up to this
};

struct FitConfig {
    int max_iterations = 2000;
    double loglik_tolerance = 1e-8;
    double param_tolerance = 1e-7;
    InnerOptions inner{};
    double alpha_bound = 50.0;
    InitSpec init{};
    std::uint64_t seed = 20240101;
    // When set, fitting starts here and nothing else is tried.
    std::optional<ModelParams> warm_start;
    // Otherwise initialize() starts 0..n_starts-1 and every extra start each
    // run short_run_iterations sweeps; the best one is then run to the end.
    int n_starts = 1;
    int short_run_iterations = 50;
    std::vector<ModelParams> extra_starts;
    // After the run, up to this many relocation moves: a support point is
    // moved to where the mixture gradient function is largest and the fit
    // rerun, kept only if the likelihood rises.
    int escape_rounds = 10;

    void validate() const;
};

enum class StopReason { tolerance_met, max_iterations, degenerate };

const char* to_string(StopReason r);

struct FitResult {
    ModelParams params;
    double loglik = 0.0;
    double bic = 0.0;
    int n_iterations = 0;
    bool converged = false;
    StopReason reason = StopReason::max_iterations;
    std::string message;  // detail for degenerate stops
    std::vector<double> trace;
    // Likelihood stopped improving while parameters kept moving: the
    // lambda / alpha scale confounding leaves a flat ridge.
    bool ridge = false;
    std::size_t requested_k1 = 0, requested_k2 = 0;
    int dropped_components = 0;
    int inner_failures = 0;  // CM steps where the optimizer could not ascend
    int escapes = 0;         // accepted relocation moves; trace covers the last run only

    std::size_t k1() const { return params.k1(); }
    std::size_t k2() const { return params.k2(); }
};

PosteriorWeights e_step(const Dataset& data, const ModelParams& params);
PosteriorWeights e_step(const Dataset& data, const Eigen::VectorXd& beta, const MixtureView& mix);

std::vector<double> cm_step_rho(const PosteriorWeights& e);
std::vector<double> cm_step_pi(const PosteriorWeights& e);

struct LambdaStep {
    std::vector<double> lambda;  // NaN where the update was skipped
    std::vector<std::size_t> degenerate;  // denominator below 1e-300
    std::vector<std::size_t> zero;        // numerator zero: lambda would be 0
};

LambdaStep cm_step_lambda(const Dataset& data, const PosteriorWeights& e,
                          std::span<const double> alpha_prev, const Eigen::VectorXd& beta_prev);

struct AlphaStep {
    std::vector<double> alpha;
    std::vector<InnerResult> inner;  // one per component of H
};

AlphaStep cm_step_alpha(const Dataset& data, const PosteriorWeights& e,
                        std::span<const double> lambda_new, std::span<const double> alpha_prev,
                        const Eigen::VectorXd& beta_prev, const InnerOptions& options = {},
                        double alpha_bound = 50.0);

InnerResult cm_step_beta(const Dataset& data, const PosteriorWeights& e,
                         std::span<const double> lambda_new, std::span<const double> alpha_new,
                         const Eigen::VectorXd& beta_prev, const InnerOptions& options = {});

// The lambda/alpha/beta block of the expected complete-data log-likelihood:
// sum_ijm e_ijm { y_i log lambda_j + y_i log p(alpha_m + x_i'beta)
//                 - lambda_j p(alpha_m + x_i'beta) }.
double t3_objective(const Dataset& data, const PosteriorWeights& e, std::span<const double> lambda,
                    std::span<const double> alpha, const Eigen::VectorXd& beta);

// Gradient of t3_objective with respect to beta.
Eigen::VectorXd t3_beta_gradient(const Dataset& data, const PosteriorWeights& e,
                                 std::span<const double> lambda, std::span<const double> alpha,
                                 const Eigen::VectorXd& beta);

struct PoissonRegression {
    Eigen::VectorXd coefficients;  // slopes only, intercept excluded
    double intercept = 0.0;
    bool converged = false;
};

// Log-link Poisson regression by IRLS. An intercept is always estimated
// unless the design already contains a constant column.
PoissonRegression poisson_regression(const Dataset& data, int max_iterations = 25);

// Start 0 places lambda at the (j - 0.5) / k1 quantiles of y_i / p(x_i'beta0)
// and alpha evenly over [-w, w]; later starts multiply beta0 by a
// log-uniform factor in [1, beta_scale_max] and draw the quantile levels and
// the alpha points uniformly. beta0 comes from poisson_regression
// (zero if it fails to converge). Support points get a seeded jitter.
ModelParams initialize(const Dataset& data, std::size_t k1, std::size_t k2, std::uint64_t seed,
                       const InitSpec& spec = {}, int start_index = 0);

FitResult fit(const Dataset& data, std::size_t k1, std::size_t k2, const FitConfig& config = {});

}  // namespace semibin
