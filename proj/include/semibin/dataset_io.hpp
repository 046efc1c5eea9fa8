#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "semibin/model.hpp"

namespace semibin {

struct FactorSpec {
    std::string column;
    std::string reference;  // level mapped to the all-zero indicator row
};

struct DesignSpec {
    std::string response;
    std::vector<std::string> covariates;  // numeric columns, used as-is
    std::optional<FactorSpec> factor;     // expanded into levels - 1 indicators
    std::string label_column;             // optional row labels
};

// Reads a UTF-8 CSV with a header row. Numeric covariates come first, in
// the order given, followed by one indicator column per non-reference
// factor level in order of first appearance. Throws InputError with the
// row/column location on any problem.
Dataset load_dataset(const std::string& path, const DesignSpec& design);
Dataset parse_dataset(std::istream& in, const DesignSpec& design, const std::string& source = "<input>");

// Location of the bundled M. bovis colony counts and its design.
std::string bundled_mbovis_path();
DesignSpec mbovis_design();

}  // namespace semibin
