#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msp/ci.hpp"
#include "msp/estimation.hpp"
#include "msp/specspace.hpp"

namespace msp {

// B resamples of n unit indices, drawn once and shared by every
// specification in a grid (and by every permutation in a calibration) so
// that differences between cells reflect the specification, not
// resampling noise.
struct ResampleMatrix {
  std::uint32_t n = 0;
  std::uint32_t B = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> idx;  // row-major, B rows of n

  std::span<const std::uint32_t> row(std::uint32_t b) const {
    return {idx.data() + static_cast<std::size_t>(b) * n, n};
  }
};

ResampleMatrix draw_resamples(std::size_t n, std::size_t B,
                              std::uint64_t seed);

struct GridEvalOptions {
  // Share of failed resamples in a cell above which the record is flagged
  // rather than silently accepted.
  double max_failed_share = 0.10;
  bool keep_draws = true;
  int workers = 0;  // 0 = library default
};

// Point estimate plus bootstrap interval for every configuration in the
// space.  Estimation failures inside a resample drop that draw; a failure
// on the observed data itself propagates.
EvaluatedGrid evaluate_grid(const Dataset& d, const SpecSpace& space,
                            const AxisBinding& binding,
                            const ResampleMatrix& resamples,
                            const CIMethod& method,
                            const GridEvalOptions& opts = {});

// Single-specification version: estimate, draws, and interval for one
// analysis choice against a fixed resample matrix.
GridRecord evaluate_choice(const Dataset& d, const AnalysisChoice& choice,
                           const ResampleMatrix& resamples,
                           const CIMethod& method,
                           const GridEvalOptions& opts = {});

}  // namespace msp
