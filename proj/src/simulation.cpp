#include "semibin/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

#include "semibin/errors.hpp"
#include "semibin/random.hpp"
#include "semibin/selection.hpp"
#include "semibin/stats.hpp"

namespace semibin {

std::vector<SimulationSetting> simulation_design() {
    const MixingDistribution g1({100.0, 200.0, 300.0}, {0.1, 0.8, 0.1}, Domain::positive);
    const MixingDistribution g2({10.0, 50.0}, {0.5, 0.5}, Domain::positive);
    const MixingDistribution h1({-2.0, 0.4, 3.0}, {0.3, 0.3, 0.4}, Domain::unrestricted);
    const MixingDistribution h2({-2.0, 1.5}, {0.25, 0.75}, Domain::unrestricted);
    std::vector<SimulationSetting> out;
    int id = 1;
    for (double beta : {-2.0, 3.0})
        for (int g = 1; g <= 2; ++g)
            for (int h = 1; h <= 2; ++h)
                out.push_back({id++, beta, "G" + std::to_string(g), "H" + std::to_string(h), g == 1 ? g1 : g2,
                               h == 1 ? h1 : h2});
    return out;
}

const SimulationSetting& simulation_setting(int id) {
    static const std::vector<SimulationSetting> design = simulation_design();
    if (id < 1 || id > static_cast<int>(design.size()))
        throw InputError("simulation setting must be in 1..8, got " + std::to_string(id));
    return design[static_cast<std::size_t>(id - 1)];
}

Dataset generate_sample(const SimulationSetting& setting, std::uint64_t seed, int replicates) {
    if (replicates < 1) throw InputError("replicates must be at least 1");
    Rng rng(seed);
    const auto r = static_cast<Eigen::Index>(11 * replicates);
    std::vector<Count> y;
    y.reserve(static_cast<std::size_t>(r));
    Eigen::MatrixXd x(r, 1);
    Eigen::Index i = 0;
    for (int xv = -5; xv <= 5; ++xv) {
        for (int rep = 0; rep < replicates; ++rep, ++i) {
            const double lambda = setting.g.support()[draw_categorical(rng, setting.g.weights())];
            const double alpha = setting.h.support()[draw_categorical(rng, setting.h.weights())];
            x(i, 0) = xv;
            y.push_back(draw_poisson(rng, lambda * logistic(alpha + xv * setting.beta)));
        }
    }
    return Dataset(std::move(y), std::move(x), {"x"});
}

std::uint64_t simulation_seed(std::uint64_t master, int setting, int sample) {
    return derive_seed(master, SeedStream::simulation,
                       (static_cast<std::uint64_t>(setting) << 32) + static_cast<std::uint64_t>(sample));
}

SettingSummary summarize(const SimulationSetting& setting, int n_samples,
                         const std::vector<std::optional<double>>& estimates) {
    SettingSummary s;
    s.setting = setting.id;
    s.beta = setting.beta;
    s.g_name = setting.g_name;
    s.h_name = setting.h_name;
    s.n_samples = n_samples;
    for (const auto& e : estimates)
        if (e) s.estimates.push_back(*e);
    s.failures = n_samples - static_cast<int>(s.estimates.size());
    s.flagged = s.failures * 10 > n_samples;
    if (s.estimates.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.bias = s.sd = s.mse = nan;
        s.qi = {nan, nan};
        return s;
    }
    s.bias = mean(s.estimates) - setting.beta;
    s.sd = sample_sd(s.estimates);
    double sq = 0.0;
    for (double b : s.estimates) sq += (b - setting.beta) * (b - setting.beta);
    s.mse = sq / static_cast<double>(s.estimates.size());
    std::vector<double> sorted = s.estimates;
    std::sort(sorted.begin(), sorted.end());
    s.qi = {quantile_type7(sorted, 0.025), quantile_type7(sorted, 0.975)};
    return s;
}

std::vector<SettingSummary> run_design(const SimulationOptions& options, const FitConfig& config,
                                       std::uint64_t master_seed) {
    if (options.n_samples < 2) throw InputError("simulation needs at least 2 samples per setting");
    if (options.n_starts < 1) throw InputError("n_starts must be at least 1");
    config.validate();
    std::vector<int> ids = options.settings;
    if (ids.empty())
        for (int k = 1; k <= 8; ++k) ids.push_back(k);
    for (int id : ids) simulation_setting(id);

    const std::size_t n = static_cast<std::size_t>(options.n_samples);
    std::vector<std::vector<std::optional<double>>> estimates(ids.size(), std::vector<std::optional<double>>(n));
    const std::size_t total = ids.size() * n;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t k = job / n, s = job % n;
            const SimulationSetting& setting = simulation_setting(ids[k]);
            const std::uint64_t seed = simulation_seed(master_seed, setting.id, static_cast<int>(s));
            try {
                const Dataset data = generate_sample(setting, seed);
                FitConfig cfg = config;
                cfg.seed = seed;
                cfg.n_starts = options.n_starts;
                if (options.select_k_max) {
                    SelectionOptions sel;
                    sel.k_max = *options.select_k_max;
                    sel.n_starts = options.n_starts;
                    estimates[k][s] = forward_search(data, cfg, sel).selected_fit.params.beta[0];
                } else {
                    const std::size_t k1 = setting.g.size(), k2 = setting.h.size();
                    if (options.grown_start) cfg.extra_starts.push_back(grown_start(data, k1, k2, cfg));
                    estimates[k][s] = fit(data, k1, k2, cfg).params.beta[0];
                }
            } catch (const Error&) {
                // counted as a failure in summarize
            }
        }
    };
    const int n_threads = std::clamp(options.threads, 1, static_cast<int>(std::min<std::size_t>(total, 1024)));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<SettingSummary> out;
    for (std::size_t k = 0; k < ids.size(); ++k)
        out.push_back(summarize(simulation_setting(ids[k]), options.n_samples, estimates[k]));
    return out;
}

}  // namespace semibin
