#include "msp/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <omp.h>

#include "msp/errors.hpp"
#include "msp/rng.hpp"
#include "msp/stats.hpp"

namespace msp {

void CIMethod::validate() const {
  require_config(alpha > 0.0 && alpha <= 0.5,
                 "interval level alpha must lie in (0, 0.5]");
}

std::string CIMethod::name() const {
  switch (kind) {
    case CIKind::kPercentile: return "percentile";
    case CIKind::kBiasCorrected: return "bias_corrected";
    case CIKind::kBootWald: return "boot_wald";
  }
  return "unknown";
}

ResampleMatrix draw_resamples(std::size_t n, std::size_t B,
                              std::uint64_t seed) {
  require_config(n >= 2, "resampling needs at least two units");
  require_config(B >= 10, "resampling needs at least ten draws");
  ResampleMatrix m;
  m.n = static_cast<std::uint32_t>(n);
  m.B = static_cast<std::uint32_t>(B);
  m.seed = seed;
  m.idx.resize(n * B);
  // One substream per row: the matrix is identical however the caller
  // later distributes work.
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng = Rng::substream(seed, "resample", b);
    for (std::size_t i = 0; i < n; ++i)
      m.idx[b * n + i] = static_cast<std::uint32_t>(rng.below(n));
  }
  return m;
}

CIResult bootstrap_ci(std::span<const double> draws, double point,
                      const CIMethod& method) {
  method.validate();
  require_config(draws.size() >= 2,
                 "interval needs at least two bootstrap draws");

  CIResult out;
  const double first = draws[0];
  const bool constant = std::all_of(draws.begin(), draws.end(),
                                    [&](double v) { return v == first; });
  if (constant) {
    out.lower = out.upper = first;
    out.degenerate = true;
    return out;
  }

  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double a = method.alpha;

  switch (method.kind) {
    case CIKind::kPercentile: {
      out.lower = quantile_sorted(sorted, a / 2.0);
      out.upper = quantile_sorted(sorted, 1.0 - a / 2.0);
      break;
    }
    case CIKind::kBiasCorrected: {
      const auto B = static_cast<double>(draws.size());
      double below = 0.0;
      for (double v : draws) below += (v < point);
      double frac = below / B;
      if (frac <= 0.0 || frac >= 1.0) {
        // Every draw on one side of the point estimate: clamp just inside
        // (0,1) and say so rather than handing back an infinite z0.
        frac = std::clamp(frac, 1.0 / (2.0 * B), 1.0 - 1.0 / (2.0 * B));
        out.degenerate = true;
      }
      const double z0 = norm_quantile(frac);
      const double zlo = norm_quantile(a / 2.0);
      const double zhi = norm_quantile(1.0 - a / 2.0);
      out.lower = quantile_sorted(sorted, norm_cdf(2.0 * z0 + zlo));
      out.upper = quantile_sorted(sorted, norm_cdf(2.0 * z0 + zhi));
      break;
    }
    case CIKind::kBootWald: {
      const double sd = stddev(sorted, 1);
      const double z = norm_quantile(1.0 - a / 2.0);
      out.lower = point - z * sd;
      out.upper = point + z * sd;
      break;
    }
  }
  return out;
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
  grid.records.resize(configs.size());

  const int workers =
      opts.workers > 0 ? opts.workers : omp_get_max_threads();
  std::exception_ptr first_error = nullptr;

#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    try {
      const AnalysisChoice choice = binding.bind(configs[ci]);
      GridRecord rec = evaluate_choice(d, choice, resamples, method, opts);
      rec.config = configs[ci];
      grid.records[ci] = std::move(rec);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return grid;
}

GridRecord evaluate_choice(const Dataset& d, const AnalysisChoice& choice,
                           const ResampleMatrix& resamples,
                           const CIMethod& method,
                           const GridEvalOptions& opts) {
  require_config(resamples.n == d.n(),
                 "resample matrix was drawn for a different dataset size");
  GridRecord rec;
  const EstimateResult obs = estimate_effect(d, choice);
  rec.estimate = obs.value;
  rec.separation = obs.separation;
  rec.rank_deficient = obs.rank_deficient;

  rec.draws.reserve(resamples.B);
  std::vector<std::uint32_t> rows(d.n());
  for (std::uint32_t b = 0; b < resamples.B; ++b) {
    const auto r = resamples.row(b);
    rows.assign(r.begin(), r.end());
    try {
      rec.draws.push_back(estimate_effect(d, choice, rows).value);
    } catch (const EstimationError&) {
      ++rec.failed_draws;
    }
  }
  if (rec.draws.size() < 2)
    throw EstimationError(
        "nearly every bootstrap draw failed for a specification");
  rec.high_failure = rec.failed_draws >
                     opts.max_failed_share * static_cast<double>(resamples.B);

  const CIResult ci_res = bootstrap_ci(rec.draws, rec.estimate, method);
  rec.ci_lower = ci_res.lower;
  rec.ci_upper = ci_res.upper;
  rec.degenerate_ci = ci_res.degenerate;
  if (!opts.keep_draws) rec.draws.clear();
  return rec;
}

}  // namespace msp
