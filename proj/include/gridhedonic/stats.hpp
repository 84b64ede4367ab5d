#pragma once

#include <span>
#include <vector>

namespace gridhedonic::stats {

// Linear interpolation between order statistics: h = (n - 1) q, value =
// x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]). Input must be sorted.
double quantile_sorted(std::span<const double> sorted, double q);

// Copies and sorts before interpolating.
double quantile(std::span<const double> values, double q);
inline double median(std::span<const double> values) { return quantile(values, 0.5); }

double mean(std::span<const double> values);
// Sample standard deviation (n - 1 denominator); 0 for a single value.
double sample_sd(std::span<const double> values);

}  // namespace gridhedonic::stats
