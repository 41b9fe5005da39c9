#include "msp/fragility.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <omp.h>

#include "msp/errors.hpp"
#include "msp/rng.hpp"
#include "msp/stats.hpp"

namespace msp {

namespace {

std::vector<std::size_t> treated_rows(const Dataset& d) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.n(); ++i)
    if (d.treatment[i]) rows.push_back(i);
  return rows;
}

CIResult record_interval(const Dataset& d, const AnalysisChoice& choice,
                         const ResampleMatrix& resamples,
                         const CIMethod& method) {
  GridEvalOptions opts;
  opts.keep_draws = false;
  const GridRecord rec = evaluate_choice(d, choice, resamples, method, opts);
  return {rec.ci_lower, rec.ci_upper, rec.degenerate_ci};
}

// Runs one zeroing order against the estimator, reusing a working copy of
// the dataset so step k only touches one outcome.
std::optional<int> scan_order(const Dataset& d,
                              const std::vector<std::size_t>& order,
                              const AnalysisChoice& choice,
                              const ResampleMatrix& resamples,
                              const CIMethod& method) {
  Dataset work = d;
  return fragility_scan(static_cast<int>(order.size()), [&](int k) {
    work.outcome[order[static_cast<std::size_t>(k - 1)]] = 0.0;
    return record_interval(work, choice, resamples, method);
  });
}

}  // namespace

std::optional<int> fragility_scan(
    int max_steps, const std::function<CIResult(int)>& ci_after) {
  require_config(max_steps >= 0, "fragility scan needs max_steps >= 0");
  for (int k = 1; k <= max_steps; ++k)
    if (ci_after(k).contains_zero()) return k;
  return std::nullopt;
}

FragilityReport fragility_adversarial(const Dataset& d,
                                      const AnalysisChoice& choice,
                                      const ResampleMatrix& resamples,
                                      const CIMethod& method) {
  d.validate();
  FragilityReport rep;
  rep.ordering = FiOrdering::kAdversarial;

  auto rows = treated_rows(d);
  rep.n_treated = static_cast<long>(rows.size());

  if (record_interval(d, choice, resamples, method).contains_zero()) {
    rep.fi = 0;
    rep.fraction_perturbed = 0.0;
    return rep;
  }

  // Largest outcomes first; ties broken by row order so the scan is
  // deterministic on data with repeated values.
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return d.outcome[a] > d.outcome[b];
  });

  rep.fi = scan_order(d, rows, choice, resamples, method);
  const auto steps = rep.fi ? static_cast<std::size_t>(*rep.fi) : rows.size();
  rep.zeroed_values.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i)
    rep.zeroed_values.push_back(d.outcome[rows[i]]);
  rep.fraction_perturbed =
      rep.fi ? static_cast<double>(*rep.fi) /
                   static_cast<double>(rep.n_treated)
             : 1.0;
  return rep;
}

FragilityReport fragility_random_median(const Dataset& d,
                                        const AnalysisChoice& choice,
                                        const ResampleMatrix& resamples,
                                        const CIMethod& method, int n_orders,
                                        std::uint64_t seed, int workers) {
  d.validate();
  require_config(n_orders >= 1, "need at least one random order");
  FragilityReport rep;
  rep.ordering = FiOrdering::kRandomMedian;
  rep.n_orders = n_orders;

  const auto rows = treated_rows(d);
  rep.n_treated = static_cast<long>(rows.size());

  if (record_interval(d, choice, resamples, method).contains_zero()) {
    rep.fi = 0;
    rep.fraction_perturbed = 0.0;
    return rep;
  }

  std::vector<double> counts(static_cast<std::size_t>(n_orders));
  const int nw = workers > 0 ? workers : omp_get_max_threads();
  std::exception_ptr first_error = nullptr;

#pragma omp parallel for schedule(dynamic) num_threads(nw)
  for (int t = 0; t < n_orders; ++t) {
    try {
      Rng rng = Rng::substream(seed, "fi_order", static_cast<std::uint64_t>(t));
      auto order = rows;
      rng.shuffle(order);
      const auto fi = scan_order(d, order, choice, resamples, method);
      counts[static_cast<std::size_t>(t)] =
          fi ? static_cast<double>(*fi)
             : std::numeric_limits<double>::infinity();
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  const double med = lower_median(counts);
  if (std::isinf(med)) {
    rep.fi = std::nullopt;
    rep.fraction_perturbed = 1.0;
  } else {
    rep.fi = static_cast<int>(med);
    rep.fraction_perturbed =
        med / static_cast<double>(rep.n_treated);
  }
  return rep;
}

}  // namespace msp
