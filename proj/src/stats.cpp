#include "semibin/stats.hpp"

#include <cmath>

#include "semibin/errors.hpp"

namespace semibin {

double quantile_type7(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw ContractViolation("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw ContractViolation("quantile probability outside [0, 1]");
    const double h = static_cast<double>(sorted.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double a : v) ss += (a - m) * (a - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace semibin
