#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "msp/bootstrap.hpp"
#include "msp/estimation.hpp"
#include "msp/rng.hpp"
#include "msp/specspace.hpp"

namespace msp {

// MSP as an ordered statistic: infeasible ranks above every finite value,
// and two infeasible results compare equal.  The permutation test needs
// exactly this total order.
struct MSPStatistic {
  std::optional<int> value;

  bool infeasible() const { return !value.has_value(); }
  long rank() const {
    return value ? static_cast<long>(*value)
                 : std::numeric_limits<long>::max();
  }
  friend bool operator>=(const MSPStatistic& a, const MSPStatistic& b) {
    return a.rank() >= b.rank();
  }
};

// Complete-randomization permutation: reassigns the observed treatment
// labels uniformly at random, preserving the treated count.
std::vector<std::uint8_t> permute_assignment(
    const std::vector<std::uint8_t>& treatment, Rng& rng);

// Add-one permutation p-value for an upper-tailed statistic.
double permutation_pvalue(const MSPStatistic& observed,
                          const std::vector<MSPStatistic>& permuted);

struct ScaleMsp {
  std::string label;
  std::optional<int> msp;
};

struct CalibrationReport {
  MSPStatistic observed;
  std::vector<MSPStatistic> permuted;  // successful replicates, in order
  int failed_replicates = 0;
  double p_hat = 1.0;
  // Lower median of the permuted values with infeasible on top; +inf when
  // the median replicate itself is infeasible.
  double perm_median = 0.0;
  // Mean over the finite permuted values; NaN when none are finite.
  double perm_mean_finite = 0.0;
  double perm_infeasible_rate = 0.0;
  // Per-scale minima on the observed grid when an axis switches the
  // outcome scale; pooling the two scales is reported, not hidden.
  std::vector<ScaleMsp> scale_msps;
};

struct CalibrationOptions {
  int permutations = 199;
  int workers = 0;
  GridEvalOptions grid;
};

// Observed MSP against its permutation distribution under the sharp null.
// One resample matrix backs every interval, observed and permuted alike.
CalibrationReport calibrate(const Dataset& d, const SpecSpace& space,
                            const AxisBinding& binding,
                            const ResampleMatrix& resamples,
                            const CIMethod& method, std::uint64_t seed,
                            const CalibrationOptions& opts = {});

}  // namespace msp
