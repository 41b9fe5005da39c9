#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "msp/bootstrap.hpp"
#include "msp/errors.hpp"
#include "oracles.hpp"

namespace {

msp::Dataset two_arm_data(int n, std::uint64_t seed, int n_treated = -1) {
  oracle::TestRng gen(seed);
  msp::Dataset d;
  d.covariate_names = {"x1"};
  d.covariates.resize(1);
  for (int i = 0; i < n; ++i) {
    d.covariates[0].push_back(gen.uniform(-1.0, 1.0));
    const bool treated =
        n_treated >= 0 ? i < n_treated : gen.uniform() < 0.5;
    d.treatment.push_back(treated ? 1 : 0);
    d.outcome.push_back(0.7 * d.treatment.back() + d.covariates[0].back() +
                        gen.normalish());
  }
  if (n_treated < 0) {
    d.treatment[0] = 0;
    d.treatment[1] = 1;
  }
  d.validate();
  return d;
}

std::vector<double> iota_draws(int n, double start) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = start + i;
  return v;
}

}  // namespace

TEST_CASE("resample matrices replay from their seed and stay in range") {
  const msp::ResampleMatrix m = msp::draw_resamples(25, 40, 77);
  CHECK(m.n == 25);
  CHECK(m.B == 40);
  CHECK(m.seed == 77);
  CHECK(m.idx.size() == 25u * 40u);
  for (const auto i : m.idx) CHECK(i < 25);

  const msp::ResampleMatrix again = msp::draw_resamples(25, 40, 77);
  CHECK(m.idx == again.idx);
  const msp::ResampleMatrix other = msp::draw_resamples(25, 40, 78);
  CHECK(m.idx != other.idx);

  // Rows are independent substreams: a row's contents do not depend on
  // how many rows precede it.
  const msp::ResampleMatrix wider = msp::draw_resamples(25, 60, 77);
  const auto row3 = m.row(3);
  const auto wider_row3 = wider.row(3);
  CHECK(std::equal(row3.begin(), row3.end(), wider_row3.begin()));

  CHECK_THROWS_AS(msp::draw_resamples(1, 40, 1), msp::ConfigError);
  CHECK_THROWS_AS(msp::draw_resamples(25, 9, 1), msp::ConfigError);
}

TEST_CASE("interval levels outside the supported band are rejected") {
  msp::CIMethod m;
  m.alpha = 0.0;
  CHECK_THROWS_AS(m.validate(), msp::ConfigError);
  m.alpha = 0.51;
  CHECK_THROWS_AS(m.validate(), msp::ConfigError);
  m.alpha = 0.5;
  CHECK_NOTHROW(m.validate());
  CHECK(m.name() == "percentile");
  m.kind = msp::CIKind::kBiasCorrected;
  CHECK(m.name() == "bias_corrected");
  m.kind = msp::CIKind::kBootWald;
  CHECK(m.name() == "boot_wald");
}

TEST_CASE("percentile interval interpolates the draw quantiles") {
  const std::vector<double> draws = iota_draws(100, 1.0);  // 1..100

  msp::CIMethod m;
  m.kind = msp::CIKind::kPercentile;
  m.alpha = 0.10;
  msp::CIResult r = msp::bootstrap_ci(draws, 50.0, m);
  CHECK(r.lower == doctest::Approx(5.95));
  CHECK(r.upper == doctest::Approx(95.05));
  CHECK(!r.degenerate);

  m.alpha = 0.05;
  r = msp::bootstrap_ci(draws, 50.0, m);
  CHECK(r.lower == doctest::Approx(3.475));
  CHECK(r.upper == doctest::Approx(97.525));

  // Shuffled input gives the same interval.
  std::vector<double> mixed = draws;
  std::swap(mixed[0], mixed[50]);
  std::swap(mixed[3], mixed[97]);
  const msp::CIResult r2 = msp::bootstrap_ci(mixed, 50.0, m);
  CHECK(r2.lower == doctest::Approx(r.lower));
  CHECK(r2.upper == doctest::Approx(r.upper));
}

TEST_CASE("normal-approximation interval is point plus z times spread") {
  const std::vector<double> draws = {1.0, 2.0, 3.0, 4.0, 5.0};
  msp::CIMethod m;
  m.kind = msp::CIKind::kBootWald;
  m.alpha = 0.05;
  const msp::CIResult r = msp::bootstrap_ci(draws, 3.0, m);
  const double half = 1.9599639845400545 * std::sqrt(2.5);
  CHECK(r.lower == doctest::Approx(3.0 - half).epsilon(1e-12));
  CHECK(r.upper == doctest::Approx(3.0 + half).epsilon(1e-12));
}

TEST_CASE("bias correction matches the textbook construction") {
  oracle::TestRng gen(505);
  msp::CIMethod m;
  m.kind = msp::CIKind::kBiasCorrected;

  for (int rep = 0; rep < 100; ++rep) {
    const int B = 30 + gen.below(170);
    std::vector<double> draws;
    for (int b = 0; b < B; ++b) draws.push_back(gen.uniform(-2.0, 5.0));
    // A point somewhere inside the draw range, unequal to any draw with
    // probability one.
    const double point = gen.uniform(-1.0, 4.0);
    m.alpha = 0.02 + 0.4 * gen.uniform();

    long below = 0;
    for (const double v : draws) below += v < point;
    if (below == 0 || below == B) continue;  // clamping handled below

    const double z0 =
        oracle::norm_quantile_bisect(static_cast<double>(below) / B);
    const double zlo = oracle::norm_quantile_bisect(m.alpha / 2.0);
    const double zhi = oracle::norm_quantile_bisect(1.0 - m.alpha / 2.0);
    const double lo_p = oracle::norm_cdf_ref(2.0 * z0 + zlo);
    const double hi_p = oracle::norm_cdf_ref(2.0 * z0 + zhi);

    const msp::CIResult r = msp::bootstrap_ci(draws, point, m);
    CHECK(r.lower ==
          doctest::Approx(oracle::quantile_type7(draws, lo_p)).epsilon(1e-9));
    CHECK(r.upper ==
          doctest::Approx(oracle::quantile_type7(draws, hi_p)).epsilon(1e-9));
    CHECK(!r.degenerate);
  }
}

TEST_CASE("bias correction clamps one-sided draw clouds and says so") {
  const std::vector<double> draws = iota_draws(50, 10.0);  // 10..59
  msp::CIMethod m;
  m.kind = msp::CIKind::kBiasCorrected;
  m.alpha = 0.10;

  // Point below every draw: the correction fraction clamps at 1/(2B).
  const msp::CIResult low = msp::bootstrap_ci(draws, 0.0, m);
  CHECK(low.degenerate);
  const double z0 = oracle::norm_quantile_bisect(1.0 / 100.0);
  const double lo_p =
      oracle::norm_cdf_ref(2.0 * z0 + oracle::norm_quantile_bisect(0.05));
  CHECK(low.lower ==
        doctest::Approx(oracle::quantile_type7(draws, lo_p)).epsilon(1e-9));

  const msp::CIResult high = msp::bootstrap_ci(draws, 99.0, m);
  CHECK(high.degenerate);
}

TEST_CASE("degenerate draw clouds collapse the interval") {
  const std::vector<double> draws(20, 1.25);
  msp::CIMethod m;
  m.kind = msp::CIKind::kPercentile;
  const msp::CIResult r = msp::bootstrap_ci(draws, 1.25, m);
  CHECK(r.degenerate);
  CHECK(r.lower == doctest::Approx(1.25));
  CHECK(r.upper == doctest::Approx(1.25));

  CHECK_THROWS_AS(msp::bootstrap_ci(std::vector<double>{1.0}, 1.0, m),
                  msp::ConfigError);
}

TEST_CASE("a single specification evaluates to estimate, draws, interval") {
  const msp::Dataset d = two_arm_data(40, 9);
  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 50, 1234);

  msp::AnalysisChoice choice;
  choice.estimator = msp::Estimator::kOls;
  choice.covariates = {"x1"};
  choice.trim = false;

  msp::CIMethod m;
  m.kind = msp::CIKind::kPercentile;
  m.alpha = 0.05;

  msp::GridEvalOptions opts;
  opts.keep_draws = true;
  const msp::GridRecord rec = msp::evaluate_choice(d, choice, u, m, opts);

  CHECK(rec.estimate ==
        doctest::Approx(msp::estimate_effect(d, choice).value));
  CHECK(rec.draws.size() + rec.failed_draws == 50);
  CHECK(rec.failed_draws == 0);

  // Rebuild the interval from the stored draws.
  const msp::CIResult ci = msp::bootstrap_ci(rec.draws, rec.estimate, m);
  CHECK(rec.ci_lower == doctest::Approx(ci.lower));
  CHECK(rec.ci_upper == doctest::Approx(ci.upper));

  // Draw b is the estimate on resample row b.
  const auto row0 = u.row(0);
  const std::vector<std::uint32_t> rows(row0.begin(), row0.end());
  CHECK(rec.draws[0] ==
        doctest::Approx(msp::estimate_effect(d, choice, rows).value));

  msp::GridEvalOptions drop = opts;
  drop.keep_draws = false;
  const msp::GridRecord bare = msp::evaluate_choice(d, choice, u, m, drop);
  CHECK(bare.draws.empty());
  CHECK(bare.ci_lower == doctest::Approx(rec.ci_lower));
}

TEST_CASE("resamples that lose an arm are dropped and counted") {
  // One treated unit out of thirty: a resample misses it often.  The
  // matrix is inspectable, so the exact failure count is known up front.
  const msp::Dataset d = two_arm_data(30, 15, 1);
  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 100, 777);

  long expect_failed = 0;
  for (std::uint32_t b = 0; b < u.B; ++b) {
    const auto row = u.row(b);
    const bool has_treated =
        std::any_of(row.begin(), row.end(),
                    [&](std::uint32_t i) { return d.treatment[i] == 1; });
    if (!has_treated) ++expect_failed;
  }
  REQUIRE(expect_failed > 0);
  REQUIRE(expect_failed < 98);  // at least two survivors below

  msp::AnalysisChoice choice;
  choice.estimator = msp::Estimator::kOls;
  choice.trim = false;

  msp::CIMethod m;
  const msp::GridRecord rec = msp::evaluate_choice(d, choice, u, m);
  CHECK(rec.failed_draws == expect_failed);
  CHECK(rec.draws.size() == 100u - expect_failed);
  CHECK(rec.high_failure == (expect_failed > 10));
}

TEST_CASE("grid evaluation lines records up with the configuration list") {
  const msp::Dataset d = two_arm_data(60, 21);

  msp::SpecSpace space;
  space.axes = {{"drop_x1", "keep x1", "drop x1"},
                {"flex", "linear", "squares"}};
  space.validate();

  msp::AxisBinding binding;
  binding.baseline.estimator = msp::Estimator::kOls;
  binding.baseline.covariates = {"x1"};
  binding.baseline.form = msp::FunctionalForm::kLinear;
  binding.baseline.trim = false;
  binding.effects = {msp::DropCovariate{"x1"},
                     msp::SetForm{msp::FunctionalForm::kNonlinear}};

  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 40, 31);
  msp::CIMethod m;
  m.kind = msp::CIKind::kBiasCorrected;

  msp::GridEvalOptions opts;
  opts.keep_draws = true;
  const msp::EvaluatedGrid grid =
      msp::evaluate_grid(d, space, binding, u, m, opts);
  CHECK_NOTHROW(grid.validate());
  REQUIRE(grid.records.size() == 4);
  CHECK(grid.has_draws());

  const auto configs = space.configs();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const msp::AnalysisChoice choice = binding.bind(configs[i]);
    const msp::GridRecord one = msp::evaluate_choice(d, choice, u, m, opts);
    CHECK(grid.records[i].config == configs[i]);
    CHECK(grid.records[i].estimate == doctest::Approx(one.estimate));
    CHECK(grid.records[i].ci_lower == doctest::Approx(one.ci_lower));
    CHECK(grid.records[i].ci_upper == doctest::Approx(one.ci_upper));
  }

  // A matrix drawn for the wrong n is refused.
  const msp::ResampleMatrix wrong = msp::draw_resamples(59, 40, 31);
  CHECK_THROWS_AS(msp::evaluate_grid(d, space, binding, wrong, m, opts),
                  msp::ConfigError);

  msp::GridEvalOptions bare = opts;
  bare.keep_draws = false;
  const msp::EvaluatedGrid light =
      msp::evaluate_grid(d, space, binding, u, m, bare);
  CHECK(!light.has_draws());
  CHECK(light.records[2].ci_lower == doctest::Approx(grid.records[2].ci_lower));
}
