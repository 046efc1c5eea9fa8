#include "semibin/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "semibin/errors.hpp"

namespace semibin {

namespace {
constexpr double kWeightSumTolerance = 1e-10;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

Dataset::Dataset(std::vector<Count> counts, Eigen::MatrixXd covariates,
                 std::vector<std::string> names, std::vector<std::string> labels)
    : y(std::move(counts)), x(std::move(covariates)),
      covariate_names(std::move(names)), row_labels(std::move(labels)) {
    if (y.empty()) throw InputError("dataset has no observations");
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw InputError("covariate matrix has " + std::to_string(x.rows()) +
                         " rows but there are " + std::to_string(y.size()) + " responses");
    if (x.cols() < 1) throw InputError("dataset needs at least one covariate column");
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0) throw InputError("negative count at row " + std::to_string(i + 1));
    if (!x.allFinite()) throw InputError("covariates contain missing or non-finite entries");
    if (covariate_names.empty()) {
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            covariate_names.push_back("x" + std::to_string(c + 1));
    } else if (covariate_names.size() != dim()) {
        throw InputError("covariate name count does not match covariate columns");
    }
    if (!row_labels.empty() && row_labels.size() != y.size())
        throw InputError("row label count does not match observations");
}

MixingDistribution::MixingDistribution(std::vector<double> support,
                                       std::vector<double> weights, Domain domain)
    : domain_(domain) {
    if (support.empty()) throw InputError("mixing distribution needs at least one support point");
    if (support.size() != weights.size())
        throw InputError("mixing distribution support and weights differ in length");
    double total = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (!std::isfinite(support[k])) throw InputError("non-finite support point");
        if (!std::isfinite(weights[k]) || weights[k] < 0.0)
            throw InputError("mixing weights must be finite and nonnegative");
        if (domain == Domain::positive && !(support[k] > 0.0))
            throw InputError("support points of a positive-domain mixing distribution must be > 0");
        total += weights[k];
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance)
        throw InputError("mixing weights sum to " + std::to_string(total) + ", expected 1");

    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    for (std::size_t k : order) {
        if (!support_.empty() && support_.back() == support[k]) {
            weights_.back() += weights[k];
        } else {
            support_.push_back(support[k]);
            weights_.push_back(weights[k]);
        }
    }
}

double MixingDistribution::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < support_.size(); ++k) m += weights_[k] * support_[k];
    return m;
}

ModelParams::ModelParams(Eigen::VectorXd b, MixingDistribution size_mix,
                         MixingDistribution intercept_mix)
    : beta(std::move(b)), g(std::move(size_mix)), h(std::move(intercept_mix)) {
    if (!beta.allFinite()) throw InputError("regression coefficients must be finite");
    if (g.domain() != Domain::positive) throw InputError("G must have the positive domain");
    if (h.domain() != Domain::unrestricted) throw InputError("H must have the unrestricted domain");
}

double logistic(double t) {
    if (t < 0.0) {
        const double e = std::exp(t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(-t));
}

double log_logistic(double t) {
    if (t < 0.0) return t - std::log1p(std::exp(t));
    return -std::log1p(std::exp(-t));
}

double log_factorial(Count y) { return std::lgamma(static_cast<double>(y) + 1.0); }

double poisson_logit_log_density(Count y, double lambda, double t) {
    if (!(lambda > 0.0)) throw ContractViolation("lambda must be positive");
    const double mu = lambda * logistic(t);
    if (y == 0) return -mu;
    const double log_mu = std::log(lambda) + log_logistic(t);
    return -mu + static_cast<double>(y) * log_mu - log_factorial(y);
}

double component_log_density(Count y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                             const Eigen::VectorXd& beta, double lambda, double alpha) {
    if (x.size() != beta.size()) throw ContractViolation("covariate row and beta differ in length");
    if (y < 0) throw ContractViolation("count must be nonnegative");
    return poisson_logit_log_density(y, lambda, alpha + x.dot(beta.transpose()));
}

double log_sum_exp(std::span<const double> v) {
    double top = kNegInf;
    for (double a : v) top = std::max(top, a);
    if (top == kNegInf) return kNegInf;
    double s = 0.0;
    for (double a : v) s += std::exp(a - top);
    return top + std::log(s);
}

double mixture_log_likelihood(const Dataset& data, const Eigen::VectorXd& beta,
                              const MixtureView& mix) {
    const std::size_t k1 = mix.lambda.size();
    const std::size_t k2 = mix.alpha.size();
    const Eigen::VectorXd eta = data.x * beta;

    std::vector<double> log_rho(k1), log_pi(k2), log_lambda(k1);
    for (std::size_t j = 0; j < k1; ++j) {
        if (!(mix.lambda[j] > 0.0)) throw ContractViolation("lambda must be positive");
        log_rho[j] = std::log(mix.rho[j]);
        log_lambda[j] = std::log(mix.lambda[j]);
    }
    for (std::size_t m = 0; m < k2; ++m) log_pi[m] = std::log(mix.pi[m]);

    std::vector<double> terms(k1 * k2);
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double yi = static_cast<double>(data.y[i]);
        for (std::size_t m = 0; m < k2; ++m) {
            const double t = mix.alpha[m] + eta[i];
            const double p = logistic(t);
            const double y_log_p = data.y[i] == 0 ? 0.0 : yi * log_logistic(t);
            for (std::size_t j = 0; j < k1; ++j) {
                const double y_log_lambda = data.y[i] == 0 ? 0.0 : yi * log_lambda[j];
                terms[j * k2 + m] =
                    log_rho[j] + log_pi[m] - mix.lambda[j] * p + y_log_lambda + y_log_p;
            }
        }
        const double li = log_sum_exp(terms);
        if (!std::isfinite(li))
            throw DegenerateLikelihood("every component density is zero for observation " +
                                       std::to_string(i + 1));
        total += li - log_factorial(data.y[i]);
    }
    return total;
}

double mixture_log_likelihood(const Dataset& data, const ModelParams& params) {
    if (params.beta.size() != data.x.cols())
        throw ContractViolation("beta length does not match covariate columns");
    return mixture_log_likelihood(data, params.beta, view_of(params));
}

std::vector<double> fitted_values(const Dataset& data, const ModelParams& params) {
    const Eigen::VectorXd eta = data.x * params.beta;
    const double size_mean = params.g.mean();
    const auto& alpha = params.h.support();
    const auto& pi = params.h.weights();
    std::vector<double> out(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        double p = 0.0;
        for (std::size_t m = 0; m < alpha.size(); ++m) p += pi[m] * logistic(alpha[m] + eta[i]);
        out[i] = size_mean * p;
    }
    return out;
}

}  // namespace semibin
