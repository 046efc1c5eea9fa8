#pragma once

// Probability model for binomial counts with unobserved sizes.
//
// An observation y with covariate row x is Poisson with mean
// lambda * p(alpha + x'beta), where p is the logistic function, lambda is
// drawn from a discrete mixing distribution G over (0, inf) and alpha from a
// discrete mixing distribution H over the real line. All density work is
// done in log space.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace semibin {

using Count = std::int64_t;

struct Dataset {
    std::vector<Count> y;
    Eigen::MatrixXd x;  // r rows, one column per covariate
    std::vector<std::string> covariate_names;
    std::vector<std::string> row_labels;  // optional, empty or size r

    Dataset() = default;
    // Validates the invariants and throws InputError on violation. Missing
    // covariate names are filled in as x1..xp.
    Dataset(std::vector<Count> counts, Eigen::MatrixXd covariates,
            std::vector<std::string> names = {},
            std::vector<std::string> labels = {});

    std::size_t rows() const { return y.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(x.cols()); }
};

enum class Domain { positive, unrestricted };

// Discrete distribution sum_k w_k delta(s_k). Support is kept strictly
// ascending; equal points are merged by summing their weights.
class MixingDistribution {
public:
    MixingDistribution() = default;
    MixingDistribution(std::vector<double> support, std::vector<double> weights,
                       Domain domain);

    static MixingDistribution point_mass(double at, Domain domain) {
        return MixingDistribution({at}, {1.0}, domain);
    }

    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& weights() const { return weights_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return support_.size(); }

    double mean() const;

private:
    std::vector<double> support_;
    std::vector<double> weights_;
    Domain domain_ = Domain::unrestricted;
};

struct ModelParams {
    Eigen::VectorXd beta;
    MixingDistribution g;  // over lambda, positive domain
    MixingDistribution h;  // over alpha, unrestricted domain

    ModelParams() = default;
    ModelParams(Eigen::VectorXd b, MixingDistribution size_mix,
                MixingDistribution intercept_mix);

    std::size_t k1() const { return g.size(); }
    std::size_t k2() const { return h.size(); }
};

// Non-owning view of the mixture parameters. The support points need not be
// sorted; this is the form the inner loops of the fitter work on.
struct MixtureView {
    std::span<const double> lambda;
    std::span<const double> rho;
    std::span<const double> alpha;
    std::span<const double> pi;
};

inline MixtureView view_of(const ModelParams& p) {
    return {p.g.support(), p.g.weights(), p.h.support(), p.h.weights()};
}

double logistic(double t);
// log p(t), finite for every finite t.
double log_logistic(double t);

double log_factorial(Count y);

double component_log_density(Count y, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                             const Eigen::VectorXd& beta, double lambda, double alpha);

// Same density given the linear predictor t = alpha + x'beta.
double poisson_logit_log_density(Count y, double lambda, double t);

double mixture_log_likelihood(const Dataset& data, const ModelParams& params);
double mixture_log_likelihood(const Dataset& data, const Eigen::VectorXd& beta,
                              const MixtureView& mix);

std::vector<double> fitted_values(const Dataset& data, const ModelParams& params);

// max + log(sum(exp(v - max))); -inf if every entry is -inf.
double log_sum_exp(std::span<const double> v);

}  // namespace semibin
