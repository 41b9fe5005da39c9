#pragma once

#include <cstdint>

#include "msp/bootstrap.hpp"
#include "msp/calibration.hpp"
#include "msp/estimation.hpp"
#include "msp/solver.hpp"
#include "msp/specspace.hpp"

// Plain serial implementations of the kernels that run under OpenMP in
// the main library.  They are written as straight loops, independently of
// the parallel orchestration, and every one must agree with its parallel
// counterpart bit for bit on the same inputs: the substream design makes
// results worker-count invariant, and the tests hold both sides to that.
// The bench target times the two against each other.
namespace msp::reference {

SolveReport solve_enumerate(const AdditiveSurface& s);

EvaluatedGrid evaluate_grid(const Dataset& d, const SpecSpace& space,
                            const AxisBinding& binding,
                            const ResampleMatrix& resamples,
                            const CIMethod& method,
                            const GridEvalOptions& opts = {});

CalibrationReport calibrate(const Dataset& d, const SpecSpace& space,
                            const AxisBinding& binding,
                            const ResampleMatrix& resamples,
                            const CIMethod& method, std::uint64_t seed,
                            const CalibrationOptions& opts = {});

}  // namespace msp::reference
