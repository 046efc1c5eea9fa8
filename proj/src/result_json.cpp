#include "semibin/result_json.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>

#include "semibin/errors.hpp"

namespace semibin {

namespace {

Json number(double v) {
    // JSON has no infinities; failed cells and empty summaries become null.
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json mixture_json(const MixingDistribution& m) {
    return Json{{"support", m.support()}, {"weights", m.weights()}};
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return "NA";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string name_of(const std::vector<std::string>& names, std::size_t k) {
    return k < names.size() ? names[k] : "x" + std::to_string(k + 1);
}

}  // namespace

Json fit_to_json(const FitResult& fit, const std::vector<std::string>& names) {
    Json beta = Json::array();
    for (Eigen::Index k = 0; k < fit.params.beta.size(); ++k)
        beta.push_back({{"name", name_of(names, static_cast<std::size_t>(k))}, {"estimate", fit.params.beta[k]}});
    Json out;
    out["k1"] = fit.k1();
    out["k2"] = fit.k2();
    out["requested_k1"] = fit.requested_k1;
    out["requested_k2"] = fit.requested_k2;
    out["beta"] = std::move(beta);
    out["g"] = mixture_json(fit.params.g);
    out["h"] = mixture_json(fit.params.h);
    out["loglik"] = number(fit.loglik);
    out["bic"] = number(fit.bic);
    out["convergence"] = {
        {"converged", fit.converged},
        {"reason", to_string(fit.reason)},
        {"iterations", fit.n_iterations},
        {"ridge", fit.ridge},
        {"escapes", fit.escapes},
        {"dropped_components", fit.dropped_components},
        {"inner_failures", fit.inner_failures},
        {"message", fit.message},
    };
    return out;
}

Json selection_to_json(const SelectionResult& sel) {
    Json grid = Json::array();
    for (const Cell& c : sel.visit_order) {
        const CellSummary& s = sel.grid.at(c);
        Json cell{{"k1", c.first},
                  {"k2", c.second},
                  {"bic", number(s.bic)},
                  {"loglik", number(s.loglik)},
                  {"failed", s.failed},
                  {"iterations", s.n_iterations},
                  {"converged", s.converged},
                  {"reason", to_string(s.reason)},
                  {"effective_k1", s.effective_k1},
                  {"effective_k2", s.effective_k2}};
        if (s.failed) cell["error"] = s.error;
        grid.push_back(std::move(cell));
    }
    return Json{{"grid", std::move(grid)}, {"selected", {sel.selected.first, sel.selected.second}}};
}

Json bootstrap_to_json(const BootstrapResult& boot, const FitResult& fit,
                       const std::vector<std::string>& names) {
    Json table = Json::array();
    for (std::size_t k = 0; k < boot.se.size(); ++k) {
        table.push_back({{"name", name_of(names, k)},
                         {"estimate", fit.params.beta[static_cast<Eigen::Index>(k)]},
                         {"se", number(boot.se[k])},
                         {"ci_lower", number(boot.ci[k].first)},
                         {"ci_upper", number(boot.ci[k].second)}});
    }
    return Json{{"scheme", to_string(boot.scheme)},
                {"B", boot.B},
                {"failures", boot.failures},
                {"unreliable", boot.unreliable},
                {"table", std::move(table)}};
}

Json simulation_to_json(const std::vector<SettingSummary>& summaries) {
    Json rows = Json::array();
    for (const SettingSummary& s : summaries) {
        rows.push_back({{"setting", s.setting},
                        {"beta", s.beta},
                        {"G", s.g_name},
                        {"H", s.h_name},
                        {"samples", s.n_samples},
                        {"failures", s.failures},
                        {"flagged", s.flagged},
                        {"bias", number(s.bias)},
                        {"sd", number(s.sd)},
                        {"qi", {number(s.qi.first), number(s.qi.second)}},
                        {"mse", number(s.mse)}});
    }
    return Json{{"settings", std::move(rows)}};
}

Json error_to_json(const std::string& kind, const std::string& message) {
    return Json{{"schema", kSchema}, {"error", {{"kind", kind}, {"message", message}}}};
}

Json metadata_block() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return Json{{"generated_at", buf}, {"program", "semibin"}, {"version", kVersion}};
}

ModelParams params_from_json(const Json& fit) {
    try {
        const Json& b = fit.at("beta");
        Eigen::VectorXd beta(static_cast<Eigen::Index>(b.size()));
        for (std::size_t k = 0; k < b.size(); ++k) beta[static_cast<Eigen::Index>(k)] = b[k].at("estimate").get<double>();
        auto mixture = [&](const char* key, Domain d) {
            const Json& m = fit.at(key);
            return MixingDistribution(m.at("support").get<std::vector<double>>(),
                                      m.at("weights").get<std::vector<double>>(), d);
        };
        return ModelParams(std::move(beta), mixture("g", Domain::positive), mixture("h", Domain::unrestricted));
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed fit block: ") + e.what());
    }
}

void write_coefficients_csv(std::ostream& out, const FitResult& fit, const std::vector<std::string>& names) {
    out << "name,estimate\n";
    for (Eigen::Index k = 0; k < fit.params.beta.size(); ++k)
        out << csv_field(name_of(names, static_cast<std::size_t>(k))) << ',' << fmt(fit.params.beta[k]) << '\n';
}

void write_selection_csv(std::ostream& out, const SelectionResult& sel) {
    out << "k1,k2,bic,loglik,failed,iterations,reason,selected\n";
    for (const Cell& c : sel.visit_order) {
        const CellSummary& s = sel.grid.at(c);
        out << c.first << ',' << c.second << ',' << fmt(s.bic) << ',' << fmt(s.loglik) << ','
            << (s.failed ? "true" : "false") << ',' << s.n_iterations << ',' << to_string(s.reason) << ','
            << (c == sel.selected ? "true" : "false") << '\n';
    }
}

void write_bootstrap_csv(std::ostream& out, const BootstrapResult& boot, const FitResult& fit,
                         const std::vector<std::string>& names) {
    out << "name,estimate,se,ci_lower,ci_upper\n";
    for (std::size_t k = 0; k < boot.se.size(); ++k)
        out << csv_field(name_of(names, k)) << ',' << fmt(fit.params.beta[static_cast<Eigen::Index>(k)]) << ','
            << fmt(boot.se[k]) << ',' << fmt(boot.ci[k].first) << ',' << fmt(boot.ci[k].second) << '\n';
}

void write_simulation_csv(std::ostream& out, const std::vector<SettingSummary>& summaries) {
    out << "setting,beta,G,H,bias,sd,qi_lower,qi_upper,mse,samples,failures,flagged\n";
    for (const SettingSummary& s : summaries)
        out << s.setting << ',' << fmt(s.beta) << ',' << s.g_name << ',' << s.h_name << ',' << fmt(s.bias) << ','
            << fmt(s.sd) << ',' << fmt(s.qi.first) << ',' << fmt(s.qi.second) << ',' << fmt(s.mse) << ','
            << s.n_samples << ',' << s.failures << ',' << (s.flagged ? "true" : "false") << '\n';
}

void write_simulation_table(std::ostream& out, const std::vector<SettingSummary>& summaries) {
    out << "setting  beta  G   H     bias     sd   qi                   mse  failures\n";
    for (const SettingSummary& s : summaries) {
        out << std::setw(7) << s.setting << std::setw(6) << s.beta << "  " << s.g_name << "  " << s.h_name
            << std::fixed << std::setprecision(3) << std::setw(9) << s.bias << std::setw(7) << s.sd << "  ("
            << std::setw(7) << s.qi.first << ", " << std::setw(7) << s.qi.second << ")" << std::setw(8) << s.mse
            << std::setw(6) << s.failures << (s.flagged ? "  flagged" : "") << '\n'
            << std::defaultfloat << std::setprecision(6);
    }
}

void write_fitted_csv(std::ostream& out, const Dataset& data, const ModelParams& params) {
    const std::vector<double> fitted = fitted_values(data, params);
    std::vector<std::string> keys(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (!data.row_labels.empty()) {
            keys[i] = data.row_labels[i];
        } else {
            std::ostringstream os;
            os << std::setprecision(17);
            for (Eigen::Index c = 0; c < data.x.cols(); ++c) os << data.x(static_cast<Eigen::Index>(i), c) << ';';
            keys[i] = os.str();
        }
    }
    std::map<std::string, std::pair<double, int>> groups;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        auto& g = groups[keys[i]];
        g.first += static_cast<double>(data.y[i]);
        ++g.second;
    }
    out << "row,group,y,group_mean,fitted\n";
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto& g = groups[keys[i]];
        const std::string label = data.row_labels.empty() ? "" : data.row_labels[i];
        out << i + 1 << ',' << csv_field(label) << ',' << data.y[i] << ',' << fmt(g.first / g.second) << ','
            << fmt(fitted[i]) << '\n';
    }
}

}  // namespace semibin
