#include "msp/reference.hpp"

#include <bit>
#include <chrono>
#include <limits>
#include <optional>
#include <vector>

#include "msp/errors.hpp"
#include "msp/rng.hpp"
#include "msp/stats.hpp"

namespace msp::reference {

SolveReport solve_enumerate(const AdditiveSurface& s) {
  s.validate();
  const auto t0 = std::chrono::steady_clock::now();

  SolveReport rep;
  rep.method = SolveMethod::kEnumeration;
  int best_w = std::numeric_limits<int>::max();
  std::uint32_t best_mask = 0;
  bool found = false;
  const std::uint64_t total = std::uint64_t{1} << s.K;
  for (std::uint64_t m = 0; m < total; ++m) {
    const auto mask = static_cast<std::uint32_t>(m);
    if (!s.feasible_at(mask)) continue;
    ++rep.msp.feasible_count;
    const int w = std::popcount(mask);
    if (!found || w < best_w) {
      found = true;
      best_w = w;
      best_mask = mask;
    } else if (w == best_w &&
               lex_less(config_from_mask(mask, s.K),
                        config_from_mask(best_mask, s.K))) {
      best_mask = mask;
    }
  }
  if (found) {
    rep.msp.value = best_w;
    rep.msp.witness = config_from_mask(best_mask, s.K);
  }
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

EvaluatedGrid evaluate_grid(const Dataset& d, const SpecSpace& space,
                            const AxisBinding& binding,
                            const ResampleMatrix& resamples,
                            const CIMethod& method,
                            const GridEvalOptions& opts) {
  d.validate();
  space.validate();
  binding.validate(space, d);
  method.validate();
  require_config(resamples.n == d.n(),
                 "resample matrix was drawn for a different dataset size");
  require_config(resamples.B >= 10, "resample matrix has too few draws");

  const auto configs = space.configs();

  EvaluatedGrid grid;
  grid.space = space;
  grid.method = method;
  grid.records.reserve(configs.size());
  for (const Config& c : configs) {
    const AnalysisChoice choice = binding.bind(c);
    GridRecord rec = evaluate_choice(d, choice, resamples, method, opts);
    rec.config = c;
    grid.records.push_back(std::move(rec));
  }
  return grid;
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
  grid_opts.workers = 1;

  const EvaluatedGrid observed = msp::reference::evaluate_grid(
      d, space, binding, resamples, method, grid_opts);
  rep.observed.value = compute_msp(observed).value;

  const int scale_axis = binding.scale_axis();
  if (scale_axis >= 0) {
    const Axis& ax = space.axes[static_cast<std::size_t>(scale_axis)];
    rep.scale_msps.push_back(
        {ax.baseline_label, subgrid_msp(observed, scale_axis, 0)});
    rep.scale_msps.push_back(
        {ax.perturbed_label, subgrid_msp(observed, scale_axis, 1)});
  }

  for (int j = 0; j < opts.permutations; ++j) {
    Rng rng = Rng::substream(seed, "perm", static_cast<std::uint64_t>(j));
    Dataset permuted = d;
    permuted.treatment = permute_assignment(d.treatment, rng);
    try {
      const EvaluatedGrid grid = msp::reference::evaluate_grid(
          permuted, space, binding, resamples, method, grid_opts);
      rep.permuted.push_back(MSPStatistic{compute_msp(grid).value});
    } catch (const EstimationError&) {
      ++rep.failed_replicates;
    }
  }
  require_config(!rep.permuted.empty(),
                 "every permutation replicate failed to estimate");

  rep.p_hat = permutation_pvalue(rep.observed, rep.permuted);

  std::vector<double> ranks, finite;
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
  rep.perm_mean_finite = finite.empty()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : mean(finite);
  rep.perm_infeasible_rate = static_cast<double>(infeasible) /
                             static_cast<double>(rep.permuted.size());
  return rep;
}

}  // namespace msp::reference
