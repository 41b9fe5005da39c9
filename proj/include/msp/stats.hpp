#pragma once

#include <span>
#include <vector>

namespace msp {

double mean(std::span<const double> x);

// Standard deviation with divisor (n - ddof).  ddof=1 is the sample
// convention used for bootstrap draws, ddof=0 the population convention
// used for across-specification dispersion.
double stddev(std::span<const double> x, int ddof);

// Quantile by linear interpolation between order statistics (the common
// "type 7" rule): h = (n-1)p, result = x[floor(h)] + frac(h) * gap.
// Input must be sorted ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Convenience wrapper that copies and sorts.
double quantile(std::vector<double> x, double p);

// Lower median: element at index (n-1)/2 of the sorted sequence.  Chosen
// over the midpoint convention so medians of integer-valued statistics
// stay integers; documented in the README.
double lower_median(std::vector<double> x);

// Standard normal CDF and its inverse (Wichura's AS241, good to ~1e-15).
double norm_cdf(double z);
double norm_quantile(double p);

}  // namespace msp
