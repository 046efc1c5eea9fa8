#include "semibin/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semibin/errors.hpp"

namespace semibin {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record. Double quotes protect commas; "" is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string where(const std::string& source, std::size_t line, const std::string& column) {
    return source + ": line " + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

Dataset parse_dataset(std::istream& in, const DesignSpec& design, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (!trim(line).empty()) {
            header = split_record(line);
            break;
        }
    }
    if (header.empty()) throw InputError(source + ": missing header row");

    auto column_index = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw InputError(source + ": no column named '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };

    if (design.response.empty()) throw InputError("no response column given");
    if (design.covariates.empty() && !design.factor)
        throw InputError("design needs at least one covariate or a factor");
    const std::size_t y_col = column_index(design.response);
    std::vector<std::size_t> x_cols;
    for (const auto& c : design.covariates) x_cols.push_back(column_index(c));
    const std::optional<std::size_t> f_col =
        design.factor ? std::optional(column_index(design.factor->column)) : std::nullopt;
    const std::optional<std::size_t> label_col =
        design.label_column.empty() ? std::nullopt : std::optional(column_index(design.label_column));

    std::vector<Count> y;
    std::vector<std::vector<double>> numeric;
    std::vector<std::string> levels_per_row, labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_record(line);
        if (cells.size() != header.size())
            throw InputError(source + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " fields, header has " +
                             std::to_string(header.size()));

        const std::string& ycell = cells[y_col];
        Count count = 0;
        const auto [ptr, ec] = std::from_chars(ycell.data(), ycell.data() + ycell.size(), count);
        if (ec != std::errc() || ptr != ycell.data() + ycell.size() || count < 0)
            throw InputError(where(source, line_no, design.response) +
                             ": response must be a nonnegative integer, got '" + ycell + "'");
        y.push_back(count);

        std::vector<double> row;
        for (std::size_t k = 0; k < x_cols.size(); ++k) {
            const std::string& cell = cells[x_cols[k]];
            double v = 0.0;
            const auto [p, e] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (e != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v))
                throw InputError(where(source, line_no, design.covariates[k]) +
                                 ": cannot parse '" + cell + "' as a number");
            row.push_back(v);
        }
        numeric.push_back(std::move(row));
        if (f_col) {
            if (cells[*f_col].empty())
                throw InputError(where(source, line_no, design.factor->column) + ": empty factor level");
            levels_per_row.push_back(cells[*f_col]);
        }
        if (label_col) labels.push_back(cells[*label_col]);
    }
    if (y.empty()) throw InputError(source + ": no data rows");

    std::vector<std::string> names = design.covariates;
    std::vector<std::string> levels;
    if (design.factor) {
        for (const auto& l : levels_per_row)
            if (std::find(levels.begin(), levels.end(), l) == levels.end()) levels.push_back(l);
        const auto ref = std::find(levels.begin(), levels.end(), design.factor->reference);
        if (ref == levels.end())
            throw InputError(source + ": reference level '" + design.factor->reference +
                             "' does not occur in column '" + design.factor->column + "'");
        levels.erase(ref);
        if (levels.empty()) throw InputError(source + ": factor has only the reference level");
        for (const auto& l : levels) names.push_back(design.factor->column + "=" + l);
    }

    const auto r = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(r, static_cast<Eigen::Index>(names.size()));
    for (Eigen::Index i = 0; i < r; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        for (std::size_t k = 0; k < x_cols.size(); ++k) x(i, static_cast<Eigen::Index>(k)) = numeric[iu][k];
        if (design.factor) {
            const auto it = std::find(levels.begin(), levels.end(), levels_per_row[iu]);
            if (it != levels.end())
                x(i, static_cast<Eigen::Index>(x_cols.size()) + (it - levels.begin())) = 1.0;
        }
    }
    if (design.factor && labels.empty()) labels = levels_per_row;
    return Dataset(std::move(y), std::move(x), std::move(names), std::move(labels));
}

Dataset load_dataset(const std::string& path, const DesignSpec& design) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_dataset(in, design, path);
}

std::string bundled_mbovis_path() {
    return std::string(SEMIBIN_DATA_DIR) + "/mbovis.csv";
}

DesignSpec mbovis_design() {
    DesignSpec d;
    d.response = "colonies";
    d.factor = FactorSpec{"dose", "control"};
    return d;
}

}  // namespace semibin
