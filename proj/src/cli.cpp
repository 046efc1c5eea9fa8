#include "semibin/cli.hpp"

#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "semibin/bootstrap.hpp"
#include "semibin/errors.hpp"
#include "semibin/result_json.hpp"
#include "semibin/selection.hpp"
#include "semibin/simulation.hpp"

namespace semibin {

namespace {

const std::vector<std::string> kCommands{"fit", "select", "bootstrap", "simulate"};

FitConfig fit_config(const RunConfig& c) {
    FitConfig f;
    f.seed = c.seed;
    f.max_iterations = c.max_iterations;
    f.n_starts = c.n_starts;
    f.validate();
    return f;
}

void check(const RunConfig& c) {
    if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
        throw InputError("unknown command '" + c.command + "'");
    if (c.format != "json" && c.format != "csv" && c.format != "table")
        throw InputError("--format must be json, csv or table");
    if ((c.k1 && *c.k1 < 1) || (c.k2 && *c.k2 < 1)) throw InputError("--k1 and --k2 must be at least 1");
    if (c.k_max < 1) throw InputError("--k-max must be at least 1");
    if (c.threads < 1) throw InputError("--threads must be at least 1");
    if (c.n_starts < 1) throw InputError("--starts must be at least 1");
    if (c.command == "bootstrap") parse_scheme(c.scheme);
    if (!c.factor.empty() && c.reference.empty()) throw InputError("--factor needs --reference");
    if (!c.data_path.empty() && c.response.empty()) throw InputError("--data needs --response");
    if (!c.emit_fitted.empty() && c.command != "fit" && c.command != "select")
        throw InputError("--emit-fitted applies to fit and select");
}

Json input_json(const RunConfig& c, const Dataset& data) {
    return Json{{"source", c.data_path.empty() ? std::string("bundled:mbovis.csv") : c.data_path},
                {"response", design_of(c).response},
                {"covariates", data.covariate_names},
                {"rows", data.rows()}};
}

void write_fitted(const RunConfig& c, const Dataset& data, const ModelParams& params) {
    if (c.emit_fitted.empty()) return;
    std::ofstream f(c.emit_fitted);
    if (!f) throw InputError("cannot write " + c.emit_fitted);
    write_fitted_csv(f, data, params);
}

// Runs the command; fills `doc` for JSON output and `table` for csv/table.
void dispatch(const RunConfig& c, Json& doc, std::ostringstream& table, std::ostream& log) {
    const FitConfig cfg = fit_config(c);
    doc["settings"] = {{"seed", c.seed},
                       {"max_iterations", c.max_iterations},
                       {"loglik_tolerance", cfg.loglik_tolerance},
                       {"param_tolerance", cfg.param_tolerance},
                       {"alpha_bound", cfg.alpha_bound},
                       {"starts", c.n_starts}};

    if (c.command == "simulate") {
        SimulationOptions o;
        o.n_samples = c.samples;
        o.settings = c.settings;
        o.select_k_max = c.select_k_max;
        o.threads = c.threads;
        o.n_starts = c.n_starts;
        const auto summaries = run_design(o, cfg, c.seed);
        doc["settings"]["samples"] = c.samples;
        doc["settings"]["k_policy"] = c.select_k_max ? "bic" : "truth";
        doc["simulation"] = simulation_to_json(summaries);
        if (c.format == "table") {
            write_simulation_table(table, summaries);
        } else {
            write_simulation_csv(table, summaries);
        }
        if (c.verbosity > 0) write_simulation_table(log, summaries);
        return;
    }

    const Dataset data = load_input(c);
    doc["input"] = input_json(c, data);
    const auto& names = data.covariate_names;

    if (c.command == "fit") {
        const std::size_t k1 = c.k1.value_or(1), k2 = c.k2.value_or(1);
        const FitResult f = fit(data, k1, k2, cfg);
        doc["fit"] = fit_to_json(f, names);
        write_coefficients_csv(table, f, names);
        write_fitted(c, data, f.params);
        if (c.verbosity > 0) log << "fit (" << k1 << "," << k2 << "): loglik " << f.loglik << ", BIC " << f.bic << '\n';
        return;
    }

    FitResult chosen;
    if (c.command == "select" || !(c.k1 && c.k2)) {
        SelectionOptions so;
        so.k_max = c.k_max;
        so.n_starts = c.n_starts;
        const SelectionResult sel = forward_search(data, cfg, so);
        doc["settings"]["k_max"] = c.k_max;
        doc["selection"] = selection_to_json(sel);
        chosen = sel.selected_fit;
        if (c.verbosity > 0)
            log << "selected (" << sel.selected.first << "," << sel.selected.second << "), BIC " << chosen.bic << '\n';
        if (c.command == "select") {
            doc["fit"] = fit_to_json(chosen, names);
            write_selection_csv(table, sel);
            write_fitted(c, data, chosen.params);
            return;
        }
    } else {
        chosen = fit(data, *c.k1, *c.k2, cfg);
    }

    const BootstrapScheme scheme = parse_scheme(c.scheme);
    BootstrapOptions bo;
    bo.threads = c.threads;
    const BootstrapResult boot = bootstrap_ci(data, chosen, scheme, c.B, cfg, c.seed, bo);
    doc["fit"] = fit_to_json(chosen, names);
    doc["bootstrap"] = bootstrap_to_json(boot, chosen, names);
    write_bootstrap_csv(table, boot, chosen, names);
    if (c.verbosity > 0 && boot.unreliable)
        log << "warning: " << boot.failures << " of " << boot.B << " replicates failed\n";
}

void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
    if (c.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw InputError("cannot write " + c.out);
    f << text;
}

}  // namespace

std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::ostream& out) {
    RunConfig c;
    CLI::App app{"Semiparametric mixture fitting for binomial counts with unknown sizes", "semibin"};
    app.require_subcommand(1);

    std::uint64_t seed = kDefaultSeed;
    std::size_t k1 = 0, k2 = 0, select_k = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "master seed")->capture_default_str();
        sub->add_option("--threads", c.threads, "worker threads");
        sub->add_option("--out", c.out, "output file (default: standard output)");
        sub->add_option("--format", c.format, "json | csv | table")->capture_default_str();
        sub->add_option("--starts", c.n_starts, "initializations per fit")->capture_default_str();
        sub->add_option("--max-iterations", c.max_iterations, "ECM sweep limit")->capture_default_str();
        sub->add_flag("-v,--verbose", c.verbosity, "progress on standard error");
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", c.data_path, "CSV input (default: bundled M. bovis counts)");
        sub->add_option("--response", c.response, "response column");
        sub->add_option("--covariates", c.covariates, "numeric covariate columns")->delimiter(',');
        sub->add_option("--factor", c.factor, "categorical column expanded into indicators");
        sub->add_option("--reference", c.reference, "reference level of --factor");
        sub->add_option("--label", c.label_column, "row label column");
    };

    CLI::App* fit_cmd = app.add_subcommand("fit", "fit at fixed (K1, K2)");
    CLI::App* select_cmd = app.add_subcommand("select", "choose (K1, K2) by BIC forward search");
    CLI::App* boot_cmd = app.add_subcommand("bootstrap", "bootstrap se and percentile intervals of beta");
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study over the 8 design settings");
    for (CLI::App* sub : {fit_cmd, select_cmd, boot_cmd, sim_cmd}) add_common(sub);
    for (CLI::App* sub : {fit_cmd, select_cmd, boot_cmd}) add_data(sub);
    for (CLI::App* sub : {fit_cmd, boot_cmd}) {
        sub->add_option("--k1", k1, "support points of G");
        sub->add_option("--k2", k2, "support points of H");
    }
    for (CLI::App* sub : {fit_cmd, select_cmd}) sub->add_option("--emit-fitted", c.emit_fitted, "per-row fitted CSV");
    for (CLI::App* sub : {select_cmd, boot_cmd})
        sub->add_option("--k-max", c.k_max, "largest K1 or K2 tried")->capture_default_str();
    boot_cmd->add_option("--B", c.B, "replicates")->capture_default_str();
    boot_cmd->add_option("--scheme", c.scheme, "parametric | nonparametric")->capture_default_str();
    sim_cmd->add_option("--samples", c.samples, "samples per setting")->capture_default_str();
    sim_cmd->add_option("--settings", c.settings, "setting ids (default: 1-8)")->delimiter(',');
    sim_cmd->add_option("--select-k", select_k, "choose (K1, K2) by BIC up to this bound instead of the truth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return std::nullopt;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw InputError(e.what());
    }
    c.command = app.get_subcommands().front()->get_name();
    for (CLI::App* sub : {fit_cmd, boot_cmd}) {
        if (sub->parsed() && sub->count("--k1")) c.k1 = k1;
        if (sub->parsed() && sub->count("--k2")) c.k2 = k2;
    }
    if (sim_cmd->parsed() && sim_cmd->count("--select-k")) c.select_k_max = select_k;
    c.seed = seed;
    check(c);
    return c;
}

DesignSpec design_of(const RunConfig& c) {
    if (c.data_path.empty() && c.response.empty()) return mbovis_design();
    DesignSpec d;
    d.response = c.response;
    d.covariates = c.covariates;
    if (!c.factor.empty()) d.factor = FactorSpec{c.factor, c.reference};
    d.label_column = c.label_column;
    return d;
}

Dataset load_input(const RunConfig& c) {
    return load_dataset(c.data_path.empty() ? bundled_mbovis_path() : c.data_path, design_of(c));
}

int run(const RunConfig& c, std::ostream& out, std::ostream& log) {
    Json doc;
    doc["schema"] = kSchema;
    doc["command"] = c.command;
    try {
        check(c);
        std::ostringstream table;
        dispatch(c, doc, table, log);
        doc["metadata"] = metadata_block();
        emit(c, c.format == "json" ? doc.dump(2) + "\n" : table.str(), out);
        return 0;
    } catch (const Error& e) {
        const bool input = dynamic_cast<const InputError*>(&e) != nullptr;
        Json err = error_to_json(e.kind(), e.what());
        err["metadata"] = metadata_block();
        try {
            emit(c, err.dump(2) + "\n", out);
        } catch (const Error&) {
            out << err.dump(2) << '\n';
        }
        log << "semibin: " << e.what() << '\n';
        return input ? 2 : 1;
    }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
    std::optional<RunConfig> config;
    try {
        config = parse_command_line(argc, argv, out);
    } catch (const Error& e) {
        out << error_to_json(e.kind(), e.what()).dump(2) << '\n';
        log << "semibin: " << e.what() << "\nRun 'semibin --help' for usage.\n";
        return 2;
    }
    if (!config) return 0;
    try {
        return run(*config, out, log);
    } catch (const std::exception& e) {
        out << error_to_json("internal_error", e.what()).dump(2) << '\n';
        log << "semibin: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace semibin
