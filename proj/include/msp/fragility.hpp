#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "msp/bootstrap.hpp"
#include "msp/estimation.hpp"

namespace msp {

enum class FiOrdering { kAdversarial, kRandomMedian };

// How many treated outcomes must be zeroed, one at a time, before the
// interval for a single fixed specification first covers zero.  An empty
// fi means the scan exhausted every treated unit without crossing.
struct FragilityReport {
  std::optional<int> fi;
  FiOrdering ordering = FiOrdering::kAdversarial;
  long n_treated = 0;
  // Original outcome values actually zeroed, in scan order (adversarial
  // only; the random-median variant aggregates over many orders).
  std::vector<double> zeroed_values;
  // fi / n_treated, or 1.0 when the scan never crossed.
  double fraction_perturbed = 0.0;
  int n_orders = 1;
};

// The scan itself, separated from estimation: ci_after(k) returns the
// interval once the first k outcomes of the order are zeroed.  Returns
// the first k in 1..max_steps whose interval covers zero.
std::optional<int> fragility_scan(
    int max_steps, const std::function<CIResult(int)>& ci_after);

// Zeroes treated outcomes from the largest down (ties by row order).
FragilityReport fragility_adversarial(const Dataset& d,
                                      const AnalysisChoice& choice,
                                      const ResampleMatrix& resamples,
                                      const CIMethod& method);

// Median count over uniformly random zeroing orders; a scan that never
// crosses sorts above every finite count.
FragilityReport fragility_random_median(const Dataset& d,
                                        const AnalysisChoice& choice,
                                        const ResampleMatrix& resamples,
                                        const CIMethod& method, int n_orders,
                                        std::uint64_t seed, int workers = 0);

}  // namespace msp
