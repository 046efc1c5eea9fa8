#include "semibin/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <optional>
#include <thread>

#include "semibin/errors.hpp"
#include "semibin/random.hpp"
#include "semibin/stats.hpp"

namespace semibin {

const char* to_string(BootstrapScheme s) {
    return s == BootstrapScheme::parametric ? "parametric" : "nonparametric";
}

BootstrapScheme parse_scheme(const std::string& s) {
    if (s == "parametric") return BootstrapScheme::parametric;
    if (s == "nonparametric") return BootstrapScheme::nonparametric;
    throw InputError("unknown bootstrap scheme '" + s + "'");
}

Dataset parametric_resample(const Dataset& data, const FitResult& fit, std::uint64_t seed) {
    Rng rng(seed);
    const ModelParams& p = fit.params;
    const Eigen::VectorXd eta = data.x * p.beta;
    std::vector<Count> y(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double lambda = p.g.support()[draw_categorical(rng, p.g.weights())];
        const double alpha = p.h.support()[draw_categorical(rng, p.h.weights())];
        y[i] = draw_poisson(rng, lambda * logistic(alpha + eta[static_cast<Eigen::Index>(i)]));
    }
    return Dataset(std::move(y), data.x, data.covariate_names, data.row_labels);
}

Dataset nonparametric_resample(const Dataset& data, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t r = data.rows();
    std::vector<Count> y(r);
    Eigen::MatrixXd x(data.x.rows(), data.x.cols());
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < r; ++i) {
        const auto k = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(r)), r - 1);
        y[i] = data.y[k];
        x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(k));
        if (!data.row_labels.empty()) labels.push_back(data.row_labels[k]);
    }
    return Dataset(std::move(y), std::move(x), data.covariate_names, std::move(labels));
}

BootstrapResult bootstrap_ci(const Dataset& data, const FitResult& fit, BootstrapScheme scheme,
                             int B, const FitConfig& config, std::uint64_t seed,
                             const BootstrapOptions& options) {
    if (B < 2) throw InputError("bootstrap needs B >= 2");
    if (scheme == BootstrapScheme::parametric && !fit.converged && fit.reason == StopReason::degenerate)
        throw ContractViolation("parametric bootstrap needs a usable fit");

    const SeedStream stream = scheme == BootstrapScheme::parametric ? SeedStream::parametric_bootstrap
                                                                    : SeedStream::nonparametric_bootstrap;
    FitConfig refit = config;
    refit.warm_start = fit.params;
    refit.extra_starts.clear();
    const std::size_t k1 = fit.k1(), k2 = fit.k2();

    std::vector<std::optional<Eigen::VectorXd>> betas(static_cast<std::size_t>(B));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int b = next++; b < B; b = next++) {
            const auto idx = static_cast<std::uint64_t>(b);
            const std::uint64_t s = derive_seed(seed, stream, options.seed_index ? options.seed_index(idx) : idx);
            try {
                const Dataset resampled = scheme == BootstrapScheme::parametric
                                              ? parametric_resample(data, fit, s)
                                              : nonparametric_resample(data, s);
                betas[static_cast<std::size_t>(b)] = semibin::fit(resampled, k1, k2, refit).params.beta;
            } catch (const Error&) {
                // recorded as a failure below
            }
        }
    };
    const int n_threads = std::clamp(options.threads, 1, B);
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    BootstrapResult out;
    out.B = B;
    out.scheme = scheme;
    const auto p = static_cast<Eigen::Index>(data.dim());
    std::vector<Eigen::VectorXd> ok;
    for (auto& b : betas)
        if (b) ok.push_back(std::move(*b));
    out.failures = B - static_cast<int>(ok.size());
    out.unreliable = out.failures * 4 > B;
    out.replicates.resize(static_cast<Eigen::Index>(ok.size()), p);
    for (std::size_t b = 0; b < ok.size(); ++b) out.replicates.row(static_cast<Eigen::Index>(b)) = ok[b].transpose();

    for (Eigen::Index c = 0; c < p; ++c) {
        std::vector<double> col(ok.size());
        for (std::size_t b = 0; b < ok.size(); ++b) col[b] = ok[b][c];
        out.se.push_back(sample_sd(col));
        std::sort(col.begin(), col.end());
        if (col.empty()) {
            out.ci.emplace_back(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
        } else {
            out.ci.emplace_back(quantile_type7(col, 0.025), quantile_type7(col, 0.975));
        }
    }
    return out;
}

}  // namespace semibin
