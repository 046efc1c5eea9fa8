#pragma once

// Result documents and tabular exports.
//
// Field names are stable. Every document carries "schema" and "command";
// the only run-dependent content lives under "metadata", so two runs with
// the same inputs produce identical documents once that block is removed.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "semibin/bootstrap.hpp"
#include "semibin/selection.hpp"
#include "semibin/simulation.hpp"

namespace semibin {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "semibin-result/1";
inline constexpr const char* kVersion = "0.1.0";

Json fit_to_json(const FitResult& fit, const std::vector<std::string>& names);
Json selection_to_json(const SelectionResult& sel);
Json bootstrap_to_json(const BootstrapResult& boot, const FitResult& fit,
                       const std::vector<std::string>& names);
Json simulation_to_json(const std::vector<SettingSummary>& summaries);
Json error_to_json(const std::string& kind, const std::string& message);

// {"generated_at": ISO-8601 UTC, "program", "version"}
Json metadata_block();

// Inverse of the "beta"/"g"/"h" part of fit_to_json.
ModelParams params_from_json(const Json& fit);

void write_coefficients_csv(std::ostream& out, const FitResult& fit, const std::vector<std::string>& names);
void write_selection_csv(std::ostream& out, const SelectionResult& sel);
void write_bootstrap_csv(std::ostream& out, const BootstrapResult& boot, const FitResult& fit,
                         const std::vector<std::string>& names);
void write_simulation_csv(std::ostream& out, const std::vector<SettingSummary>& summaries);
void write_simulation_table(std::ostream& out, const std::vector<SettingSummary>& summaries);

// One row per observation: label, y, mean of y over its group, fitted mean.
// Groups are the row labels when present, otherwise identical covariate rows.
void write_fitted_csv(std::ostream& out, const Dataset& data, const ModelParams& params);

}  // namespace semibin
