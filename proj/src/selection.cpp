#include "semibin/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semibin/errors.hpp"

namespace semibin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool better(const Cell& a, double bic_a, const Cell& b, double bic_b) {
    if (bic_a != bic_b) return bic_a < bic_b;
    if (a.first + a.second != b.first + b.second) return a.first + a.second < b.first + b.second;
    return a.first < b.first;
}

ModelParams grow_to(ModelParams p, std::size_t k1, std::size_t k2) {
    while (p.k1() < k1) p = split_support_point(p, true);
    while (p.k2() < k2) p = split_support_point(p, false);
    return p;
}

}  // namespace

double bic(double loglik, std::size_t k1, std::size_t k2, std::size_t r, std::size_t p_dim) {
    if (r < 1 || k1 < 1 || k2 < 1) throw ContractViolation("bic needs r, k1, k2 >= 1");
    const double n_params = 2.0 * static_cast<double>(k1 + k2) - 2.0 + static_cast<double>(p_dim);
    return -2.0 * loglik + std::log(static_cast<double>(r)) * n_params;
}

ModelParams split_support_point(const ModelParams& from, bool split_size_mixture) {
    const auto& w = (split_size_mixture ? from.g : from.h).weights();
    const auto at = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    return split_support_point(from, split_size_mixture, at, 0.1);
}

ModelParams split_support_point(const ModelParams& from, bool split_size_mixture, std::size_t at,
                                double fraction) {
    const MixingDistribution& mix = split_size_mixture ? from.g : from.h;
    if (at >= mix.size()) throw ContractViolation("split index out of range");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ContractViolation("split fraction must be in (0, 1)");
    std::vector<double> support = mix.support();
    std::vector<double> weights = mix.weights();
    const double s = support[at];
    // G splits multiplicatively; H points can sit at 0, so use an absolute
    // offset of at least `fraction` there.
    const double offset = split_size_mixture ? fraction * s : fraction * std::max(std::abs(s), 1.0);
    support[at] = s - offset;
    weights[at] /= 2.0;
    support.push_back(s + offset);
    weights.push_back(weights[at]);
    MixingDistribution split(std::move(support), std::move(weights), mix.domain());
    return split_size_mixture ? ModelParams(from.beta, std::move(split), from.h)
                              : ModelParams(from.beta, from.g, std::move(split));
}

ModelParams grown_start(const Dataset& data, std::size_t k1, std::size_t k2, const FitConfig& config) {
    if (k1 < 1 || k2 < 1) throw ContractViolation("k1 and k2 must be at least 1");
    FitConfig base = config;
    base.warm_start.reset();
    base.extra_starts.clear();
    base.escape_rounds = 0;
    FitResult cur = fit(data, 1, 1, base);

    FitConfig step = base;
    step.max_iterations = config.short_run_iterations;
    while (cur.k1() < k1 || cur.k2() < k2) {
        std::optional<FitResult> best;
        for (bool size_mixture : {true, false}) {
            if ((size_mixture ? cur.k1() : cur.k2()) >= (size_mixture ? k1 : k2)) continue;
            const std::size_t n = size_mixture ? cur.k1() : cur.k2();
            for (std::size_t at = 0; at < n; ++at) {
                for (double fraction : {0.1, 0.5}) {
                    step.warm_start = split_support_point(cur.params, size_mixture, at, fraction);
                    const std::size_t want1 = step.warm_start->k1(), want2 = step.warm_start->k2();
                    try {
                        FitResult r = fit(data, want1, want2, step);
                        if (r.k1() == want1 && r.k2() == want2 && (!best || r.loglik > best->loglik))
                            best = std::move(r);
                    } catch (const Error&) {
                        // skip splits that degenerate
                    }
                }
            }
        }
        if (!best) break;
        cur = std::move(*best);
    }
    // Pad with split points if some stage could not keep its components.
    ModelParams out = cur.params;
    while (out.k1() < k1) out = split_support_point(out, true);
    while (out.k2() < k2) out = split_support_point(out, false);
    return out;
}

SelectionResult forward_search(const Dataset& data, const FitConfig& config,
                               const SelectionOptions& options) {
    if (options.k_max < 1) throw InputError("k_max must be at least 1");
    SelectionResult out;

    auto lookup = [&](std::size_t k1, std::size_t k2) -> const CellSummary* {
        auto it = out.grid.find({k1, k2});
        return it == out.grid.end() ? nullptr : &it->second;
    };

    auto visit = [&](std::size_t k1, std::size_t k2) -> double {
        CellSummary cell;
        FitConfig cfg = config;
        cfg.warm_start.reset();
        cfg.n_starts = options.n_starts;
        if (options.warm_start) {
            const CellSummary* up = k1 > 1 ? lookup(k1 - 1, k2) : nullptr;
            const CellSummary* left = k2 > 1 ? lookup(k1, k2 - 1) : nullptr;
            for (const CellSummary* c : {up, left})
                if (c && c->fit) cfg.extra_starts.push_back(grow_to(c->fit->params, k1, k2));
        }
        std::string last_error;
        try {
            cell.fit = fit(data, k1, k2, cfg);
        } catch (const Error& err) {
            last_error = err.what();
        }
        if (cell.fit) {
            const FitResult& f = *cell.fit;
            cell.loglik = f.loglik;
            cell.bic = f.bic;
            cell.n_iterations = f.n_iterations;
            cell.converged = f.converged;
            cell.reason = f.reason;
            cell.effective_k1 = f.k1();
            cell.effective_k2 = f.k2();
        } else {
            cell.failed = true;
            cell.error = last_error;
            cell.bic = kInf;
            cell.loglik = -kInf;
            cell.reason = StopReason::degenerate;
        }
        out.visit_order.push_back({k1, k2});
        const double b = cell.bic;
        out.grid.emplace(Cell{k1, k2}, std::move(cell));
        return b;
    };

    std::vector<bool> column_stopped(options.k_max + 1, false);
    double previous_row_best = kInf;
    int rises = 0;
    for (std::size_t k1 = 1; k1 <= options.k_max; ++k1) {
        double row_best = kInf;
        for (std::size_t k2 = 1; k2 <= options.k_max; ++k2) {
            if (column_stopped[k2]) break;
            const double b = visit(k1, k2);
            row_best = std::min(row_best, b);
            if (const CellSummary* above = k1 > 1 ? lookup(k1 - 1, k2) : nullptr; above && b >= above->bic)
                column_stopped[k2] = true;
            if (const CellSummary* left = k2 > 1 ? lookup(k1, k2 - 1) : nullptr; left && b >= left->bic)
                break;
        }
        rises = (k1 > 1 && row_best > previous_row_best) ? rises + 1 : 0;
        previous_row_best = row_best;
        if (rises >= 2) break;
    }

    const CellSummary* best = nullptr;
    for (const auto& [cell, summary] : out.grid) {
        if (summary.failed) continue;
        if (!best || better(cell, summary.bic, out.selected, best->bic)) {
            best = &summary;
            out.selected = cell;
        }
    }
    if (!best) throw DegenerateLikelihood("every model in the forward search failed to fit");
    out.selected_fit = *best->fit;
    return out;
}

}  // namespace semibin
