#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "semibin/errors.hpp"
#include "semibin/model.hpp"
#include "semibin/random.hpp"
#include "semibin/stats.hpp"

using namespace semibin;
using Catch::Approx;

namespace {

// y = (0, 3, 7, 12), x = (-1, 0, 0.5, 2), beta = 0.8,
// G = 0.3 d(5) + 0.7 d(15), H = 0.6 d(-0.5) + 0.4 d(1).
Dataset toy_data() {
    Eigen::MatrixXd x(4, 1);
    x << -1.0, 0.0, 0.5, 2.0;
    return Dataset({0, 3, 7, 12}, x);
}

ModelParams toy_params() {
    return ModelParams(Eigen::VectorXd::Constant(1, 0.8),
                       MixingDistribution({5.0, 15.0}, {0.3, 0.7}, Domain::positive),
                       MixingDistribution({-0.5, 1.0}, {0.6, 0.4}, Domain::unrestricted));
}

}  // namespace

TEST_CASE("logistic is stable in both tails") {
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(800.0) == 1.0);
    CHECK(logistic(-800.0) >= 0.0);
    CHECK(std::isfinite(log_logistic(-800.0)));
    CHECK(log_logistic(-800.0) == Approx(-800.0));
    CHECK(log_logistic(40.0) == Approx(-std::exp(-40.0)).epsilon(1e-12));
    for (double t = -30.0; t <= 30.0; t += 0.37) {
        CHECK(logistic(t) + logistic(-t) == Approx(1.0).epsilon(1e-15));
        CHECK(log_logistic(t) == Approx(static_cast<double>(-std::log1p(std::exp(-static_cast<long double>(t))))).epsilon(1e-13));
    }
}

TEST_CASE("poisson_logit_log_density matches the raw formula") {
    // mpmath at 50 digits: log Poisson(5; 40 p(-3))
    CHECK(poisson_logit_log_density(5, 40.0, -3.0) == Approx(-3.4830661571837460089).epsilon(1e-14));
    for (long long y : {0LL, 1LL, 4LL, 17LL, 60LL})
        for (double lambda : {0.3, 5.0, 80.0})
            for (double t : {-4.0, -0.5, 0.0, 2.5}) {
                const double expected = static_cast<double>(std::log(oracle::density(y, lambda, t)));
                CHECK(poisson_logit_log_density(y, lambda, t) == Approx(expected).epsilon(1e-12));
            }
    CHECK(poisson_logit_log_density(0, 10.0, 0.0) == Approx(-5.0));
    CHECK_THROWS_AS(poisson_logit_log_density(1, 0.0, 0.0), ContractViolation);
    CHECK_THROWS_AS(poisson_logit_log_density(1, -1.0, 0.0), ContractViolation);
}

TEST_CASE("component_log_density uses alpha + x'beta") {
    Eigen::RowVectorXd x(2);
    x << 0.5, -2.0;
    Eigen::VectorXd beta(2);
    beta << 1.0, 0.25;
    CHECK(component_log_density(3, x, beta, 12.0, 0.2) == Approx(poisson_logit_log_density(3, 12.0, 0.2)));
}

TEST_CASE("mixture log-likelihood on the toy instance") {
    // Frozen from a 50-digit mpmath evaluation of the definition.
    CHECK(mixture_log_likelihood(toy_data(), toy_params()) == Approx(-9.8199892968713874305).epsilon(1e-13));
}

TEST_CASE("mixture log-likelihood agrees with the long double oracle on random instances") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        const auto inst = oracle::random_instance(rng, 3 + rep % 8, 1 + rep % 3, 1 + rep % 3, 1 + (rep / 3) % 3);
        const double got = mixture_log_likelihood(inst.data, inst.params);
        CHECK(got == Approx(static_cast<double>(oracle::loglik(inst.data, inst.params))).epsilon(1e-12));
    }
}

TEST_CASE("mixture log-likelihood survives extreme counts") {
    Eigen::MatrixXd x(2, 1);
    x << -30.0, 30.0;
    const Dataset d({0, 5000}, x);
    const ModelParams p(Eigen::VectorXd::Constant(1, 1.0), MixingDistribution::point_mass(5000.0, Domain::positive),
                        MixingDistribution::point_mass(0.0, Domain::unrestricted));
    CHECK(std::isfinite(mixture_log_likelihood(d, p)));
}

TEST_CASE("fitted values are the mixture expectation") {
    const auto f = fitted_values(toy_data(), toy_params());
    REQUIRE(f.size() == 4);
    CHECK(f[0] == Approx(4.1811913091934719503).epsilon(1e-13));
    CHECK(f[1] == Approx(6.227373992770670555).epsilon(1e-13));
    CHECK(f[2] == Approx(7.2706325152328244912).epsilon(1e-13));
    CHECK(f[3] == Approx(9.8700083426367820246).epsilon(1e-13));
}

TEST_CASE("log_sum_exp") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> v{-inf, -inf};
    CHECK(log_sum_exp(v) == -inf);
    v = {1000.0, 1000.0};
    CHECK(log_sum_exp(v) == Approx(1000.0 + std::log(2.0)));
    v = {-1000.0, 0.0};
    CHECK(log_sum_exp(v) == Approx(0.0));
}

TEST_CASE("MixingDistribution validation and canonical order") {
    CHECK_THROWS_AS(MixingDistribution({}, {}, Domain::unrestricted), InputError);
    CHECK_THROWS_AS(MixingDistribution({1.0, 2.0}, {0.5}, Domain::unrestricted), InputError);
    CHECK_THROWS_AS(MixingDistribution({1.0, 2.0}, {0.5, 0.6}, Domain::unrestricted), InputError);
    CHECK_THROWS_AS(MixingDistribution({1.0, 2.0}, {1.5, -0.5}, Domain::unrestricted), InputError);
    CHECK_THROWS_AS(MixingDistribution({0.0, 2.0}, {0.5, 0.5}, Domain::positive), InputError);
    CHECK_THROWS_AS(MixingDistribution({std::nan(""), 2.0}, {0.5, 0.5}, Domain::unrestricted), InputError);

    const MixingDistribution m({3.0, -1.0, 3.0}, {0.2, 0.5, 0.3}, Domain::unrestricted);
    REQUIRE(m.size() == 2);
    CHECK(m.support() == std::vector<double>{-1.0, 3.0});
    CHECK(m.weights()[0] == Approx(0.5));
    CHECK(m.weights()[1] == Approx(0.5));
    CHECK(m.mean() == Approx(1.0));
}

TEST_CASE("Dataset validation") {
    Eigen::MatrixXd x(2, 1);
    x << 0.0, 1.0;
    CHECK_THROWS_AS(Dataset({}, Eigen::MatrixXd(0, 1)), InputError);
    CHECK_THROWS_AS(Dataset({1, -1}, x), InputError);
    CHECK_THROWS_AS(Dataset({1, 2, 3}, x), InputError);
    CHECK_THROWS_AS(Dataset({1, 2}, Eigen::MatrixXd(2, 0)), InputError);
    Eigen::MatrixXd bad = x;
    bad(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(Dataset({1, 2}, bad), InputError);
    const Dataset ok({1, 2}, x);
    CHECK(ok.covariate_names == std::vector<std::string>{"x1"});
}

TEST_CASE("ModelParams rejects non-finite beta") {
    CHECK_THROWS_AS(ModelParams(Eigen::VectorXd::Constant(1, std::nan("")),
                                MixingDistribution::point_mass(1.0, Domain::positive),
                                MixingDistribution::point_mass(0.0, Domain::unrestricted)),
                    InputError);
}

TEST_CASE("type-7 quantiles") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // R: quantile(1:10, c(0.025, 0.5, 0.975), type = 7)
    CHECK(quantile_type7(v, 0.025) == Approx(1.225));
    CHECK(quantile_type7(v, 0.5) == Approx(5.5));
    CHECK(quantile_type7(v, 0.975) == Approx(9.775));
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 1.0) == 10.0);
    std::vector<double> one{4.0};
    CHECK(quantile_type7(one, 0.3) == 4.0);
    CHECK_THROWS(quantile_type7(std::vector<double>{}, 0.5));
    CHECK_THROWS(quantile_type7(v, 1.5));
}

TEST_CASE("sample standard deviation") {
    std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(sample_sd(v) == Approx(std::sqrt(32.0 / 7.0)));
    CHECK(sample_sd(std::vector<double>{3.0}) == 0.0);
    CHECK(mean(v) == Approx(5.0));
}

TEST_CASE("seed derivation and draws") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));

    Rng rng(99);
    std::vector<double> w{0.2, 0.5, 0.3};
    std::vector<int> counts(3, 0);
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double u = uniform01(rng);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        ++counts[draw_categorical(rng, w)];
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const double se = std::sqrt(w[k] * (1 - w[k]) / n);
        CHECK(std::abs(counts[k] / double(n) - w[k]) < 4 * se);
    }
    CHECK(draw_poisson(rng, 0.0) == 0);
}
