#include "msp/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <omp.h>

#include "msp/errors.hpp"
#include "msp/stats.hpp"

namespace msp {

std::vector<std::uint8_t> permute_assignment(
    const std::vector<std::uint8_t>& treatment, Rng& rng) {
  std::vector<std::uint8_t> out = treatment;
  rng.shuffle(out);
  return out;
}

double permutation_pvalue(const MSPStatistic& observed,
                          const std::vector<MSPStatistic>& permuted) {
  require_config(!permuted.empty(),
                 "permutation p-value needs at least one replicate");
  long at_least = 0;
  for (const auto& v : permuted)
    if (v >= observed) ++at_least;
  return static_cast<double>(1 + at_least) /
         static_cast<double>(permuted.size() + 1);
}

CalibrationReport calibrate(const Dataset& d, const SpecSpace& space,
                            const AxisBinding& binding,
                            const ResampleMatrix& resamples,
                            const CIMethod& method, std::uint64_t seed,
                            const CalibrationOptions& opts) {
  require_config(opts.permutations >= 1,
                 "calibration needs at least one permutation");
  d.validate();

  CalibrationReport rep;
  GridEvalOptions grid_opts = opts.grid;
  grid_opts.keep_draws = false;

  {
    const EvaluatedGrid observed =
        evaluate_grid(d, space, binding, resamples, method, grid_opts);
    const MSPResult msp = compute_msp(observed);
    rep.observed.value = msp.value;

    const int scale_axis = binding.scale_axis();
    if (scale_axis >= 0) {
      const Axis& ax = space.axes[static_cast<std::size_t>(scale_axis)];
      rep.scale_msps.push_back({ax.baseline_label,
                                subgrid_msp(observed, scale_axis, 0)});
      rep.scale_msps.push_back({ax.perturbed_label,
                                subgrid_msp(observed, scale_axis, 1)});
    }
  }

  const int P = opts.permutations;
  std::vector<std::optional<MSPStatistic>> results(
      static_cast<std::size_t>(P));
  const int workers =
      opts.workers > 0 ? opts.workers : omp_get_max_threads();
  std::exception_ptr first_error = nullptr;

  // Parallel across permutations; grid evaluation stays serial inside so
  // replicate j is computed by one worker with its own substream.
  GridEvalOptions inner = grid_opts;
  inner.workers = 1;

#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (int j = 0; j < P; ++j) {
    try {
      Rng rng = Rng::substream(seed, "perm", static_cast<std::uint64_t>(j));
      Dataset permuted = d;
      permuted.treatment = permute_assignment(d.treatment, rng);
      try {
        const EvaluatedGrid grid = evaluate_grid(permuted, space, binding,
                                                 resamples, method, inner);
        const MSPResult msp = compute_msp(grid);
        results[static_cast<std::size_t>(j)] = MSPStatistic{msp.value};
      } catch (const EstimationError&) {
        // replicate dropped, reported via failed_replicates
      }
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& r : results) {
    if (r) rep.permuted.push_back(*r);
    else ++rep.failed_replicates;
  }
  require_config(!rep.permuted.empty(),
                 "every permutation replicate failed to estimate");

  rep.p_hat = permutation_pvalue(rep.observed, rep.permuted);

  std::vector<double> ranks;
  std::vector<double> finite;
  long infeasible = 0;
  for (const auto& v : rep.permuted) {
    if (v.infeasible()) {
      ++infeasible;
      ranks.push_back(std::numeric_limits<double>::infinity());
    } else {
      ranks.push_back(static_cast<double>(*v.value));
      finite.push_back(static_cast<double>(*v.value));
    }
  }
  rep.perm_median = lower_median(ranks);
  rep.perm_mean_finite =
      finite.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : mean(finite);
  rep.perm_infeasible_rate =
      static_cast<double>(infeasible) / static_cast<double>(rep.permuted.size());
  return rep;
}

}  // namespace msp
