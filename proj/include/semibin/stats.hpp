#pragma once

#include <span>
#include <vector>

namespace semibin {

// Sample quantile by linear interpolation between order statistics
// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_type7(std::span<const double> sorted, double prob);

double mean(std::span<const double> v);

// Standard deviation with divisor n - 1; 0 for fewer than two values.
double sample_sd(std::span<const double> v);

}  // namespace semibin
