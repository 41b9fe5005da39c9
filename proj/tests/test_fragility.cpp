#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "msp/bootstrap.hpp"
#include "msp/errors.hpp"
#include "msp/fragility.hpp"
#include "oracles.hpp"

namespace {

// Treated outcomes carry a clear positive shift; one unit carries an
// outsized share of it so the adversarial scan has an obvious first pick.
msp::Dataset fragile_data(int n_treated, int n_control, double spike) {
  oracle::TestRng gen(88);
  msp::Dataset d;
  d.covariate_names = {"x1"};
  d.covariates.resize(1);
  for (int i = 0; i < n_treated + n_control; ++i) {
    const bool treated = i < n_treated;
    d.covariates[0].push_back(gen.uniform(-1.0, 1.0));
    d.treatment.push_back(treated ? 1 : 0);
    double y = treated ? 2.0 + 0.1 * gen.uniform() : 0.3 * gen.normalish();
    if (treated && i == 0) y = spike;
    d.outcome.push_back(y);
  }
  d.validate();
  return d;
}

msp::AnalysisChoice plain_ols() {
  msp::AnalysisChoice a;
  a.estimator = msp::Estimator::kOls;
  a.trim = false;
  return a;
}

msp::CIResult interval(double lo, double hi) {
  msp::CIResult r;
  r.lower = lo;
  r.upper = hi;
  return r;
}

}  // namespace

TEST_CASE("the scan returns the first step whose interval covers zero") {
  const auto crossing = [](int k) {
    return interval(0.5 - 0.25 * k, 8.0 - k);
  };
  CHECK(msp::fragility_scan(5, crossing) == 2);
  CHECK(msp::fragility_scan(1, crossing) == std::nullopt);
  CHECK(msp::fragility_scan(0, crossing) == std::nullopt);

  const auto immediate = [](int) { return interval(-1.0, 1.0); };
  CHECK(msp::fragility_scan(3, immediate) == 1);

  const auto never = [](int) { return interval(1.0, 2.0); };
  CHECK(msp::fragility_scan(10, never) == std::nullopt);
}

TEST_CASE("a null-compatible baseline has nothing to zero") {
  oracle::TestRng gen(5);
  msp::Dataset d;
  d.covariate_names = {"x1"};
  d.covariates.resize(1);
  for (int i = 0; i < 40; ++i) {
    d.covariates[0].push_back(gen.uniform(-1.0, 1.0));
    d.treatment.push_back(i < 20 ? 1 : 0);
    d.outcome.push_back(gen.normalish());  // no effect at all
  }
  d.validate();

  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 40, 3);
  msp::CIMethod m;
  const msp::FragilityReport rep =
      msp::fragility_adversarial(d, plain_ols(), u, m);
  REQUIRE(rep.fi.has_value());
  CHECK(*rep.fi == 0);
  CHECK(rep.fraction_perturbed == doctest::Approx(0.0));
  CHECK(rep.zeroed_values.empty());
  CHECK(rep.n_treated == 20);
}

TEST_CASE("adversarial zeroing removes the largest treated outcomes first") {
  const msp::Dataset d = fragile_data(15, 25, 30.0);
  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 40, 7);
  msp::CIMethod m;

  const msp::FragilityReport rep =
      msp::fragility_adversarial(d, plain_ols(), u, m);
  REQUIRE(rep.fi.has_value());
  CHECK(*rep.fi >= 1);
  CHECK(rep.n_treated == 15);
  CHECK(rep.zeroed_values.size() == static_cast<std::size_t>(*rep.fi));
  CHECK(rep.fraction_perturbed ==
        doctest::Approx(static_cast<double>(*rep.fi) / 15.0));
  CHECK(rep.ordering == msp::FiOrdering::kAdversarial);

  // Scan order is largest first, so the spike goes before anything else.
  REQUIRE(!rep.zeroed_values.empty());
  CHECK(rep.zeroed_values.front() == doctest::Approx(30.0));
  CHECK(std::is_sorted(rep.zeroed_values.rbegin(), rep.zeroed_values.rend()));

  // Each zeroed value really is a treated outcome.
  for (const double v : rep.zeroed_values) {
    bool found = false;
    for (std::size_t i = 0; i < d.n(); ++i)
      if (d.treatment[i] && d.outcome[i] == v) found = true;
    CHECK(found);
  }
}

TEST_CASE("a conclusion that outlives every treated unit is reported whole") {
  // Controls sit far below zero, so even zeroing all treated outcomes
  // leaves the arms apart.
  oracle::TestRng gen(31);
  msp::Dataset d;
  d.covariate_names = {"x1"};
  d.covariates.resize(1);
  for (int i = 0; i < 36; ++i) {
    d.covariates[0].push_back(gen.uniform(-1.0, 1.0));
    const bool treated = i < 12;
    d.treatment.push_back(treated ? 1 : 0);
    d.outcome.push_back(treated ? 1.0 + 0.05 * gen.uniform()
                                : -9.0 + 0.2 * gen.normalish());
  }
  d.validate();

  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 40, 13);
  msp::CIMethod m;
  const msp::FragilityReport rep =
      msp::fragility_adversarial(d, plain_ols(), u, m);
  CHECK(!rep.fi.has_value());
  CHECK(rep.fraction_perturbed == doctest::Approx(1.0));
  CHECK(rep.zeroed_values.size() == 12);
}

TEST_CASE("random-order medians replay and stay within the scan bounds") {
  const msp::Dataset d = fragile_data(12, 20, 8.0);
  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 30, 17);
  msp::CIMethod m;

  const msp::FragilityReport med =
      msp::fragility_random_median(d, plain_ols(), u, m, 9, 400);
  CHECK(med.ordering == msp::FiOrdering::kRandomMedian);
  CHECK(med.n_orders == 9);
  CHECK(med.n_treated == 12);
  if (med.fi) {
    CHECK(*med.fi >= 0);
    CHECK(*med.fi <= 12);
    CHECK(med.fraction_perturbed ==
          doctest::Approx(static_cast<double>(*med.fi) / 12.0));
  } else {
    CHECK(med.fraction_perturbed == doctest::Approx(1.0));
  }

  const msp::FragilityReport again =
      msp::fragility_random_median(d, plain_ols(), u, m, 9, 400);
  CHECK(again.fi == med.fi);
  CHECK(again.fraction_perturbed == doctest::Approx(med.fraction_perturbed));

  // Removing the biggest outcomes first can never need more zeroes than a
  // typical random order on this clean, single-spike construction.
  const msp::FragilityReport adv =
      msp::fragility_adversarial(d, plain_ols(), u, m);
  if (adv.fi && med.fi) CHECK(*adv.fi <= *med.fi);
}
