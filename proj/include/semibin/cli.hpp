#pragma once

// The `semibin` command line: fit | select | bootstrap | simulate.
//
// Exit status: 0 success, 1 model error, 2 input error. On failure a JSON
// document {"schema", "error": {"kind", "message"}} replaces the result.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "semibin/dataset_io.hpp"

namespace semibin {

inline constexpr std::uint64_t kDefaultSeed = 20240101;

struct RunConfig {
    std::string command;  // fit | select | bootstrap | simulate

    // Empty data_path means the bundled M. bovis counts with their dose factor.
    std::string data_path;
    std::string response;
    std::vector<std::string> covariates;
    std::string factor, reference;
    std::string label_column;

    std::optional<std::size_t> k1, k2;  // bootstrap selects (K1, K2) when absent
    std::size_t k_max = 6;
    int n_starts = 10;
    int max_iterations = 2000;
    int B = 200;
    std::string scheme = "parametric";
    int samples = 200;
    std::vector<int> settings;
    std::optional<std::size_t> select_k_max;  // simulate: choose K by BIC

    std::uint64_t seed = kDefaultSeed;
    int threads = 1;
    std::string out;           // empty: standard output
    std::string format = "json";  // json | csv | table
    std::string emit_fitted;   // fit/select: per-row fitted CSV path
    int verbosity = 0;
};

// Parses argv (argv[0] is the program name). Throws InputError on bad usage.
// Returns nullopt after printing help to `out`.
std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::ostream& out);

// The design a config asks for, and the dataset it names.
DesignSpec design_of(const RunConfig& config);
Dataset load_input(const RunConfig& config);

int run(const RunConfig& config, std::ostream& out, std::ostream& log);

// parse_command_line + run, with errors turned into exit codes.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace semibin
