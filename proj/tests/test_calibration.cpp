#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "msp/calibration.hpp"
#include "msp/errors.hpp"
#include "msp/rng.hpp"
#include "msp/simulation.hpp"
#include "oracles.hpp"

namespace {

msp::MSPStatistic stat(int v) { return {v}; }
msp::MSPStatistic unreachable() { return {std::nullopt}; }

}  // namespace

TEST_CASE("label permutation preserves the treated count") {
  std::vector<std::uint8_t> t = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  msp::Rng rng(42);
  bool moved = false;
  for (int rep = 0; rep < 50; ++rep) {
    const auto p = msp::permute_assignment(t, rng);
    CHECK(p.size() == t.size());
    CHECK(std::count(p.begin(), p.end(), 1) == 3);
    if (p != t) moved = true;
  }
  CHECK(moved);

  // Same seed, same sequence of permutations.
  msp::Rng a(7), b(7);
  CHECK(msp::permute_assignment(t, a) == msp::permute_assignment(t, b));
}

TEST_CASE("the statistic orders unreachable above every finite value") {
  CHECK(stat(3).rank() > stat(2).rank());
  CHECK(unreachable().rank() > stat(1000000).rank());
  CHECK(unreachable() >= unreachable());
  CHECK(unreachable() >= stat(5));
  CHECK(!(stat(5) >= unreachable()));
}

TEST_CASE("add-one permutation p-values count the upper tail") {
  const std::vector<msp::MSPStatistic> perms = {
      stat(0), stat(1), stat(2), stat(3), unreachable()};
  // Observed 2: permuted >= 2 are {2, 3, inf} so (1+3)/(5+1).
  CHECK(msp::permutation_pvalue(stat(2), perms) ==
        doctest::Approx(4.0 / 6.0));
  // Observed unreachable: only the permuted unreachable ties it.
  CHECK(msp::permutation_pvalue(unreachable(), perms) ==
        doctest::Approx(2.0 / 6.0));
  CHECK(msp::permutation_pvalue(stat(0), perms) == doctest::Approx(1.0));
}

TEST_CASE("calibration replays deterministically and aggregates sanely") {
  msp::Rng data_rng(19);
  const msp::Dataset d = msp::simulate_sharp_null(80, data_rng);
  const msp::SpecSpace space = msp::null_check_space();
  const msp::AxisBinding binding = msp::null_check_binding();
  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 30, 55);

  msp::CIMethod m;
  m.kind = msp::CIKind::kPercentile;
  m.alpha = 0.10;

  msp::CalibrationOptions opts;
  opts.permutations = 19;

  const msp::CalibrationReport rep =
      msp::calibrate(d, space, binding, u, m, 99, opts);
  REQUIRE(rep.permuted.size() + rep.failed_replicates == 19);
  CHECK(rep.p_hat > 0.0);
  CHECK(rep.p_hat <= 1.0);

  // The p-value is recomputable from the reported pieces.
  CHECK(rep.p_hat ==
        doctest::Approx(msp::permutation_pvalue(rep.observed, rep.permuted)));

  long infeasible = 0;
  std::vector<double> finite;
  for (const auto& s : rep.permuted) {
    if (s.infeasible())
      ++infeasible;
    else
      finite.push_back(*s.value);
  }
  CHECK(rep.perm_infeasible_rate ==
        doctest::Approx(static_cast<double>(infeasible) / rep.permuted.size()));
  if (!finite.empty()) {
    const double avg = std::accumulate(finite.begin(), finite.end(), 0.0) /
                       static_cast<double>(finite.size());
    CHECK(rep.perm_mean_finite == doctest::Approx(avg));
  }

  // Identical inputs, identical report.
  const msp::CalibrationReport again =
      msp::calibrate(d, space, binding, u, m, 99, opts);
  CHECK(again.p_hat == doctest::Approx(rep.p_hat));
  REQUIRE(again.permuted.size() == rep.permuted.size());
  for (std::size_t i = 0; i < rep.permuted.size(); ++i)
    CHECK(again.permuted[i].rank() == rep.permuted[i].rank());

  msp::CalibrationOptions bad;
  bad.permutations = 0;
  CHECK_THROWS_AS(msp::calibrate(d, space, binding, u, m, 99, bad),
                  msp::ConfigError);
}

TEST_CASE("a null-compatible baseline cannot look extreme") {
  // With MSP = 0 the observed statistic is the smallest possible value,
  // so every permutation ties or beats it and the p-value is 1.
  msp::Rng data_rng(23);
  const msp::Dataset d = msp::simulate_sharp_null(60, data_rng);

  msp::SpecSpace space;
  space.axes = {{"drop_x1", "keep", "drop"}};
  space.validate();
  msp::AxisBinding binding;
  binding.baseline.estimator = msp::Estimator::kOls;
  binding.baseline.covariates = {"x1", "x2", "x3"};
  binding.baseline.form = msp::FunctionalForm::kLinear;
  binding.baseline.trim = false;
  binding.effects = {msp::DropCovariate{"x1"}};

  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 30, 5);
  msp::CIMethod m;
  m.alpha = 0.05;
  msp::CalibrationOptions opts;
  opts.permutations = 9;

  const msp::CalibrationReport rep =
      msp::calibrate(d, space, binding, u, m, 11, opts);
  if (!rep.observed.infeasible() && *rep.observed.value == 0)
    CHECK(rep.p_hat == doctest::Approx(1.0));
}

TEST_CASE("per-scale minima are reported when a scale axis exists") {
  msp::Rng data_rng(29);
  msp::Dataset d = msp::simulate_sharp_null(70, data_rng);
  for (double& y : d.outcome) y = std::abs(y);  // keep the log scale legal

  msp::SpecSpace space;
  space.axes = {{"drop_x1", "keep", "drop"}, {"log_scale", "raw", "log1p"}};
  space.validate();
  msp::AxisBinding binding;
  binding.baseline.estimator = msp::Estimator::kOls;
  binding.baseline.covariates = {"x1", "x2", "x3"};
  binding.baseline.form = msp::FunctionalForm::kLinear;
  binding.baseline.trim = false;
  binding.effects = {msp::DropCovariate{"x1"},
                     msp::SetScale{msp::OutcomeScale::kLog1p}};

  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 30, 6);
  msp::CIMethod m;
  msp::CalibrationOptions opts;
  opts.permutations = 5;

  const msp::CalibrationReport rep =
      msp::calibrate(d, space, binding, u, m, 31, opts);
  REQUIRE(rep.scale_msps.size() == 2);
  CHECK(rep.scale_msps[0].label != rep.scale_msps[1].label);
}
