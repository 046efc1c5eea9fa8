#pragma once

// Choice of the number of support points (K1, K2) by forward search on BIC.

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "semibin/ecm.hpp"

namespace semibin {

// -2 loglik + log(r) * (2 (k1 + k2) - 2 + p_dim), natural log.
double bic(double loglik, std::size_t k1, std::size_t k2, std::size_t r, std::size_t p_dim);

using Cell = std::pair<std::size_t, std::size_t>;  // (K1, K2)

struct CellSummary {
    double bic = 0.0;  // +inf for a failed cell
    double loglik = 0.0;
    bool failed = false;
    std::string error;
    int n_iterations = 0;
    bool converged = false;
    StopReason reason = StopReason::max_iterations;
    std::size_t effective_k1 = 0, effective_k2 = 0;
    std::optional<FitResult> fit;  // absent for failed cells
};

struct SelectionResult {
    std::map<Cell, CellSummary> grid;
    std::vector<Cell> visit_order;
    Cell selected{1, 1};
    FitResult selected_fit;
};

struct SelectionOptions {
    std::size_t k_max = 6;
    // Initializations entered in each cell's short-run competition.
    int n_starts = 10;
    // Also enter both smaller neighbours' fits, grown by split_support_point.
    bool warm_start = true;
};

SelectionResult forward_search(const Dataset& data, const FitConfig& config,
                               const SelectionOptions& options = {});

// Parameters of `from` with one support point split in two at +-10% of
// its value (each half keeping half the weight). Splits the largest-weight
// point of G when `split_size_mixture`, else of H.
ModelParams split_support_point(const ModelParams& from, bool split_size_mixture);
// Splits point `at` at +-fraction of its value (H: of max(|value|, 1)).
ModelParams split_support_point(const ModelParams& from, bool split_size_mixture, std::size_t at,
                                double fraction);

// Start for a (k1, k2) fit reached stagewise from a fitted (1, 1) model: at
// each stage every split (each point, offsets 10% and 50%) runs
// config.short_run_iterations sweeps and the best one is kept.
ModelParams grown_start(const Dataset& data, std::size_t k1, std::size_t k2, const FitConfig& config);

}  // namespace semibin
