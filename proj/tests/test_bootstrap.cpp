#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "semibin/bootstrap.hpp"
#include "semibin/errors.hpp"
#include "semibin/random.hpp"

using namespace semibin;
using Catch::Approx;

namespace {

// r rows at x in [-4, 4], one size and one intercept point. The wide x
// range lets p saturate so lambda is pinned down and the fit converges fast.
Dataset single_point_sample(std::uint64_t seed, std::size_t r, double beta) {
    Rng rng(seed);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(r), 1);
    std::vector<Count> y(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double xi = -4.0 + 8.0 * static_cast<double>(i) / static_cast<double>(r - 1);
        x(static_cast<Eigen::Index>(i), 0) = xi;
        y[i] = draw_poisson(rng, 30.0 * logistic(beta * xi));
    }
    return Dataset(std::move(y), std::move(x));
}

FitConfig quick_config() {
    FitConfig c;
    c.max_iterations = 300;
    c.escape_rounds = 0;
    return c;
}

FitResult fitted_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto inst = oracle::random_instance(rng, 40, 2, 2, 1);
    FitResult f;
    f.params = inst.params;
    f.converged = true;
    f.reason = StopReason::tolerance_met;
    return f;
}

}  // namespace

TEST_CASE("scheme names") {
    CHECK(parse_scheme("parametric") == BootstrapScheme::parametric);
    CHECK(parse_scheme("nonparametric") == BootstrapScheme::nonparametric);
    CHECK(std::string(to_string(BootstrapScheme::nonparametric)) == "nonparametric");
    CHECK_THROWS_AS(parse_scheme("wild"), InputError);
}

TEST_CASE("parametric resample is deterministic and nonnegative") {
    std::mt19937_64 rng(3);
    const auto inst = oracle::random_instance(rng, 25, 2, 2, 2);
    FitResult f;
    f.params = inst.params;
    const Dataset a = parametric_resample(inst.data, f, 17);
    const Dataset b = parametric_resample(inst.data, f, 17);
    const Dataset c = parametric_resample(inst.data, f, 18);
    CHECK(a.y == b.y);
    CHECK(a.y != c.y);
    CHECK(a.x == inst.data.x);
    for (Count v : a.y) CHECK(v >= 0);
}

TEST_CASE("parametric resample averages to the fitted mean") {
    std::mt19937_64 rng(4);
    const auto inst = oracle::random_instance(rng, 12, 1, 3, 2);
    FitResult f;
    f.params = inst.params;
    const std::vector<double> mu = fitted_values(inst.data, inst.params);
    const int n = 10000;
    std::vector<double> sum(12, 0.0), sum2(12, 0.0);
    for (int k = 0; k < n; ++k) {
        const Dataset d = parametric_resample(inst.data, f, derive_seed(1, SeedStream::parametric_bootstrap, k));
        for (std::size_t i = 0; i < 12; ++i) {
            sum[i] += static_cast<double>(d.y[i]);
            sum2[i] += static_cast<double>(d.y[i] * d.y[i]);
        }
    }
    for (std::size_t i = 0; i < 12; ++i) {
        const double m = sum[i] / n;
        const double sd = std::sqrt(sum2[i] / n - m * m);
        CHECK(std::abs(m - mu[i]) < 4.5 * sd / std::sqrt(double(n)));
    }
}

TEST_CASE("nonparametric resample draws rows with replacement") {
    std::mt19937_64 rng(8);
    const auto inst = oracle::random_instance(rng, 1, 1, 1, 1);
    const Dataset one = nonparametric_resample(inst.data, 5);
    CHECK(one.y == inst.data.y);
    CHECK(one.x == inst.data.x);

    // Row i of the source gets a distinct x so the draws can be traced.
    const std::size_t r = 50;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(r), 1);
    std::vector<Count> y(r);
    for (std::size_t i = 0; i < r; ++i) {
        x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
        y[i] = static_cast<Count>(i % 7);
    }
    const Dataset src(y, x);
    const int n = 1000;
    double fraction = 0.0;
    for (std::uint64_t s = 0; s < n; ++s) {
        const Dataset d = nonparametric_resample(src, derive_seed(3, SeedStream::nonparametric_bootstrap, s));
        std::set<long> rows;
        for (std::size_t i = 0; i < r; ++i) {
            const long k = std::lround(d.x(static_cast<Eigen::Index>(i), 0));
            REQUIRE(d.y[i] == src.y[static_cast<std::size_t>(k)]);
            rows.insert(k);
        }
        fraction += static_cast<double>(rows.size()) / r / n;
    }
    // Each row is missed with probability (1 - 1/r)^r.
    CHECK(fraction == Approx(1.0 - std::pow(1.0 - 1.0 / r, double(r))).margin(0.02));
    CHECK(nonparametric_resample(src, 4).y == nonparametric_resample(src, 4).y);
}

TEST_CASE("bootstrap_ci rejects bad input") {
    const FitResult f = fitted_instance(1);
    std::mt19937_64 rng(1);
    const auto inst = oracle::random_instance(rng, 40, 2, 2, 1);
    CHECK_THROWS_AS(bootstrap_ci(inst.data, f, BootstrapScheme::parametric, 1, quick_config(), 1), InputError);
    FitResult bad = f;
    bad.converged = false;
    bad.reason = StopReason::degenerate;
    CHECK_THROWS_AS(bootstrap_ci(inst.data, bad, BootstrapScheme::parametric, 5, quick_config(), 1),
                    ContractViolation);
}

TEST_CASE("bootstrap is reproducible and independent of the thread count") {
    const Dataset d = single_point_sample(11, 40, 0.8);
    const FitResult f = fit(d, 1, 2, quick_config());
    for (BootstrapScheme scheme : {BootstrapScheme::parametric, BootstrapScheme::nonparametric}) {
        BootstrapOptions one, three;
        three.threads = 3;
        const BootstrapResult a = bootstrap_ci(d, f, scheme, 12, quick_config(), 99, one);
        const BootstrapResult b = bootstrap_ci(d, f, scheme, 12, quick_config(), 99, three);
        const BootstrapResult c = bootstrap_ci(d, f, scheme, 12, quick_config(), 100, one);
        CHECK(a.replicates == b.replicates);
        CHECK(a.se == b.se);
        CHECK(a.replicates != c.replicates);
        CHECK(a.B == 12);
        CHECK(a.failures + a.replicates.rows() == 12);
        CHECK(a.scheme == scheme);
    }
}

TEST_CASE("se and percentile interval are the type-7 summaries of the replicates") {
    const Dataset d = single_point_sample(12, 40, -0.6);
    const FitResult f = fit(d, 1, 1, quick_config());
    const BootstrapResult b = bootstrap_ci(d, f, BootstrapScheme::parametric, 40, quick_config(), 5);
    REQUIRE(b.replicates.rows() == 40 - b.failures);
    std::vector<double> col(b.replicates.col(0).data(), b.replicates.col(0).data() + b.replicates.rows());
    std::sort(col.begin(), col.end());
    const double n = static_cast<double>(col.size());
    double m = 0.0, ss = 0.0;
    for (double v : col) m += v / n;
    for (double v : col) ss += (v - m) * (v - m);
    CHECK(b.se[0] == Approx(std::sqrt(ss / (n - 1.0))).epsilon(1e-12));
    auto q = [&](double p) {
        const double h = (n - 1.0) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        return col[lo] + (h - std::floor(h)) * (col[std::min(lo + 1, col.size() - 1)] - col[lo]);
    };
    CHECK(b.ci[0].first == Approx(q(0.025)).epsilon(1e-12));
    CHECK(b.ci[0].second == Approx(q(0.975)).epsilon(1e-12));
    CHECK(b.ci[0].first <= b.ci[0].second);
}

TEST_CASE("colliding replicate seeds give zero spread") {
    const Dataset d = single_point_sample(13, 30, 0.5);
    const FitResult f = fit(d, 1, 1, quick_config());
    BootstrapOptions o;
    o.seed_index = [](std::uint64_t) -> std::uint64_t { return 0; };
    const BootstrapResult b = bootstrap_ci(d, f, BootstrapScheme::parametric, 2, quick_config(), 7, o);
    REQUIRE(b.replicates.rows() == 2);
    CHECK(b.se[0] == 0.0);
    CHECK(b.ci[0].first == b.ci[0].second);
}

TEST_CASE("parametric percentile intervals cover the truth") {
    // 100 samples from a single-point model, each with its own interval.
    const double beta = 1.0;
    int covered = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Dataset d = single_point_sample(1000 + s, 50, beta);
        const FitResult f = fit(d, 1, 1, quick_config());
        const BootstrapResult b = bootstrap_ci(d, f, BootstrapScheme::parametric, 100, quick_config(), s);
        if (b.ci[0].first <= beta && beta <= b.ci[0].second) ++covered;
    }
    CHECK(covered >= 90);
}
