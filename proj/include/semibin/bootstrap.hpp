#pragma once

// Bootstrap standard errors and percentile intervals for beta.
//
// Replicate b (0-based) draws its resample with the seed
// derive_seed(seed, stream, b), where stream is SeedStream::parametric_bootstrap
// or SeedStream::nonparametric_bootstrap. Results therefore do not depend on
// the thread count.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semibin/ecm.hpp"

namespace semibin {

enum class BootstrapScheme { parametric, nonparametric };

const char* to_string(BootstrapScheme s);
BootstrapScheme parse_scheme(const std::string& s);

struct BootstrapResult {
    Eigen::MatrixXd replicates;  // (B - failures) x p, in replicate order
    std::vector<double> se;
    std::vector<std::pair<double, double>> ci;  // 2.5% and 97.5% percentiles
    int B = 0;
    int failures = 0;
    bool unreliable = false;  // failures > B / 4
    BootstrapScheme scheme = BootstrapScheme::parametric;
};

// y_i* ~ Poisson(lambda_i p(alpha_i + x_i'beta)) with lambda_i ~ G and
// alpha_i ~ H drawn independently per row.
Dataset parametric_resample(const Dataset& data, const FitResult& fit, std::uint64_t seed);

// r rows drawn with replacement.
Dataset nonparametric_resample(const Dataset& data, std::uint64_t seed);

struct BootstrapOptions {
    int threads = 1;
    // Test hook: replicate b uses seed index seed_index(b) instead of b.
    std::uint64_t (*seed_index)(std::uint64_t) = nullptr;
};

BootstrapResult bootstrap_ci(const Dataset& data, const FitResult& fit, BootstrapScheme scheme,
                             int B, const FitConfig& config, std::uint64_t seed,
                             const BootstrapOptions& options = {});

}  // namespace semibin
