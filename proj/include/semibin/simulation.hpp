#pragma once

// Monte Carlo study of the beta estimator over a 2 x 2 x 2 design of
// beta in {-2, 3}, size mixture G1/G2 and intercept mixture H1/H2.
//
// Sample s of setting k is generated from derive_seed(master,
// SeedStream::simulation, k * 2^32 + s) and fitted with the same seed.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semibin/ecm.hpp"

namespace semibin {

struct SimulationSetting {
    int id = 0;  // 1..8
    double beta = 0.0;
    std::string g_name, h_name;
    MixingDistribution g, h;
};

// Settings 1..8: beta outermost, then G, then H.
std::vector<SimulationSetting> simulation_design();
const SimulationSetting& simulation_setting(int id);

// x runs over -5..5; each x gets `replicates` draws (x outer loop).
Dataset generate_sample(const SimulationSetting& setting, std::uint64_t seed, int replicates = 10);

struct SettingSummary {
    int setting = 0;
    double beta = 0.0;
    std::string g_name, h_name;
    int n_samples = 0;
    int failures = 0;
    bool flagged = false;  // failures > 10% of n_samples
    double bias = 0.0, sd = 0.0, mse = 0.0;
    std::pair<double, double> qi{0.0, 0.0};  // 2.5% and 97.5% quantiles of beta-hat
    std::vector<double> estimates;           // by sample index, failures excluded
};

struct SimulationOptions {
    int n_samples = 200;
    std::vector<int> settings;  // empty: all eight
    // Fit every sample at its generating (K1, K2) unless set, in which case
    // (K1, K2) is chosen by forward search up to this bound.
    std::optional<std::size_t> select_k_max;
    int threads = 1;
    // Starts per fit at the true (K1, K2): n_starts initializations plus
    // one stagewise grown start.
    int n_starts = 10;
    bool grown_start = true;
};

std::uint64_t simulation_seed(std::uint64_t master, int setting, int sample);

SettingSummary summarize(const SimulationSetting& setting, int n_samples,
                         const std::vector<std::optional<double>>& estimates);

std::vector<SettingSummary> run_design(const SimulationOptions& options, const FitConfig& config,
                                       std::uint64_t master_seed);

}  // namespace semibin
