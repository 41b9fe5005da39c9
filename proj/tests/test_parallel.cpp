#include <cstdint>
#include <vector>

#include <doctest.h>

#include "msp/bootstrap.hpp"
#include "msp/calibration.hpp"
#include "msp/reference.hpp"
#include "msp/rng.hpp"
#include "msp/simulation.hpp"
#include "msp/solver.hpp"
#include "oracles.hpp"

// The serial twins in msp::reference must agree with the OpenMP kernels
// bit for bit: the substream design pins every random draw to its logical
// index, so the thread count can never change a number.

namespace {

msp::AdditiveSurface random_surface(oracle::TestRng& gen) {
  msp::AdditiveSurface s;
  s.K = 3 + static_cast<int>(gen.below(8));
  s.tau0 = 0.5 + 2.5 * gen.uniform();
  s.c0 = 0.2 + 0.6 * gen.uniform();
  s.delta.resize(s.K);
  for (double& d : s.delta) d = -1.2 + 1.7 * gen.uniform();
  if (gen.uniform() < 0.4) {
    s.delta_c.resize(s.K);
    for (double& dc : s.delta_c)
      dc = -0.9 * s.c0 / s.K + (0.3 + 0.9 * s.c0 / s.K) * gen.uniform();
  }
  if (gen.uniform() < 0.3) {
    for (int j = 0; j < s.K; ++j)
      for (int k = j + 1; k < s.K; ++k)
        if (gen.uniform() < 0.3)
          s.gamma.push_back({j, k, -0.3 + 0.6 * gen.uniform()});
  }
  return s;
}

}  // namespace

TEST_CASE("parallel enumeration matches the serial reference exactly") {
  oracle::TestRng gen(88001);
  for (int trial = 0; trial < 200; ++trial) {
    const msp::AdditiveSurface s = random_surface(gen);
    const msp::SolveReport serial = msp::reference::solve_enumerate(s);
    const msp::SolveReport parallel = msp::solve_enumerate(s);
    REQUIRE(serial.msp.value == parallel.msp.value);
    REQUIRE(serial.msp.witness == parallel.msp.witness);
    REQUIRE(serial.msp.feasible_count == parallel.msp.feasible_count);
  }
}

TEST_CASE("parallel grid evaluation matches the serial reference exactly") {
  msp::SimSpec spec;
  spec.regime = msp::Regime::kAdditive;
  spec.n = 250;
  spec.tau = 0.7;
  msp::Rng data_rng(41);
  const msp::Dataset d = msp::simulate_dataset(spec, data_rng);

  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 40, 91);
  const msp::SpecSpace space = msp::study_space();
  const msp::AxisBinding binding = msp::study_binding();
  const msp::CIMethod method{};

  msp::GridEvalOptions opts;
  opts.workers = 3;
  const msp::EvaluatedGrid parallel =
      msp::evaluate_grid(d, space, binding, u, method, opts);
  const msp::EvaluatedGrid serial =
      msp::reference::evaluate_grid(d, space, binding, u, method, opts);

  REQUIRE(serial.records.size() == parallel.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    const msp::GridRecord& a = serial.records[i];
    const msp::GridRecord& b = parallel.records[i];
    REQUIRE(a.config == b.config);
    CHECK(a.estimate == b.estimate);
    CHECK(a.ci_lower == b.ci_lower);
    CHECK(a.ci_upper == b.ci_upper);
    CHECK(a.draws == b.draws);
    CHECK(a.failed_draws == b.failed_draws);
    CHECK(a.separation == b.separation);
    CHECK(a.rank_deficient == b.rank_deficient);
  }
  CHECK(msp::compute_msp(serial).value == msp::compute_msp(parallel).value);
}

TEST_CASE("parallel calibration matches the serial reference exactly") {
  msp::Rng data_rng(52);
  const msp::Dataset d = msp::simulate_sharp_null(100, data_rng);
  const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 30, 14);
  const msp::SpecSpace space = msp::null_check_space();
  const msp::AxisBinding binding = msp::null_check_binding();
  const msp::CIMethod method{};

  msp::CalibrationOptions opts;
  opts.permutations = 23;
  opts.workers = 3;
  const msp::CalibrationReport parallel =
      msp::calibrate(d, space, binding, u, method, 6, opts);
  const msp::CalibrationReport serial =
      msp::reference::calibrate(d, space, binding, u, method, 6, opts);

  CHECK(serial.observed.value == parallel.observed.value);
  REQUIRE(serial.permuted.size() == parallel.permuted.size());
  for (std::size_t j = 0; j < serial.permuted.size(); ++j)
    CHECK(serial.permuted[j].value == parallel.permuted[j].value);
  CHECK(serial.failed_replicates == parallel.failed_replicates);
  CHECK(serial.p_hat == parallel.p_hat);
  CHECK(serial.perm_median == parallel.perm_median);
  CHECK(serial.perm_infeasible_rate == parallel.perm_infeasible_rate);
}
