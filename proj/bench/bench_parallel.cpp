// Times the OpenMP kernels against their serial reference twins on fixed
// workloads and checks, while it is at it, that the two sides agree.
// Output is one line per kernel: serial ms, parallel ms, speedup.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "msp/bootstrap.hpp"
#include "msp/calibration.hpp"
#include "msp/reference.hpp"
#include "msp/rng.hpp"
#include "msp/simulation.hpp"
#include "msp/solver.hpp"

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void report(const char* kernel, double serial_ms, double parallel_ms,
            bool agree) {
  std::printf("%-18s serial %9.1f ms   parallel %9.1f ms   speedup %5.2fx   %s\n",
              kernel, serial_ms, parallel_ms, serial_ms / parallel_ms,
              agree ? "agree" : "MISMATCH");
  if (!agree) std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  // --quick shrinks the workloads for smoke use.
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--quick") quick = true;

  std::printf("threads available: %d\n", omp_get_max_threads());
  msp::Rng rng(20240817);

  {
    // Exhaustive enumeration over a wide surface.
    msp::AdditiveSurface s;
    s.K = quick ? 18 : 22;
    s.tau0 = 2.0;
    s.c0 = 0.5;
    s.delta.resize(s.K);
    for (auto& d : s.delta) d = rng.uniform(-0.4, 0.15);

    const double t0 = now_ms();
    const auto serial = msp::reference::solve_enumerate(s);
    const double t1 = now_ms();
    const auto parallel = msp::solve_enumerate(s);
    const double t2 = now_ms();
    const bool agree =
        serial.msp.value == parallel.msp.value &&
        serial.msp.witness == parallel.msp.witness &&
        serial.msp.feasible_count == parallel.msp.feasible_count;
    report("enumerate", t1 - t0, t2 - t1, agree);
  }

  {
    // Grid evaluation: 16 specifications, bootstrap inside each.
    msp::SimSpec spec;
    spec.regime = msp::Regime::kAdditive;
    spec.n = quick ? 400 : 1200;
    spec.tau = 0.7;
    msp::Rng data_rng = msp::Rng::substream(7, "bench", 0);
    const msp::Dataset d = msp::simulate_dataset(spec, data_rng);
    const msp::ResampleMatrix u =
        msp::draw_resamples(d.n(), quick ? 60 : 200, 99);
    const msp::SpecSpace space = msp::study_space();
    const msp::AxisBinding binding = msp::study_binding();
    const msp::CIMethod method{};

    const double t0 = now_ms();
    const auto serial =
        msp::reference::evaluate_grid(d, space, binding, u, method);
    const double t1 = now_ms();
    const auto parallel = msp::evaluate_grid(d, space, binding, u, method);
    const double t2 = now_ms();
    bool agree = serial.records.size() == parallel.records.size();
    for (std::size_t i = 0; agree && i < serial.records.size(); ++i) {
      const auto& a = serial.records[i];
      const auto& b = parallel.records[i];
      agree = a.config == b.config && a.estimate == b.estimate &&
              a.ci_lower == b.ci_lower && a.ci_upper == b.ci_upper &&
              a.draws == b.draws;
    }
    report("evaluate_grid", t1 - t0, t2 - t1, agree);
  }

  {
    // Permutation calibration on a small randomized dataset.
    msp::Rng data_rng = msp::Rng::substream(7, "bench", 1);
    const msp::Dataset d =
        msp::simulate_sharp_null(quick ? 120 : 240, data_rng);
    const msp::ResampleMatrix u = msp::draw_resamples(d.n(), 50, 17);
    const msp::SpecSpace space = msp::null_check_space();
    const msp::AxisBinding binding = msp::null_check_binding();
    const msp::CIMethod method{};
    msp::CalibrationOptions opts;
    opts.permutations = quick ? 30 : 99;

    const double t0 = now_ms();
    const auto serial = msp::reference::calibrate(d, space, binding, u,
                                                  method, 5, opts);
    const double t1 = now_ms();
    const auto parallel =
        msp::calibrate(d, space, binding, u, method, 5, opts);
    const double t2 = now_ms();
    bool agree = serial.p_hat == parallel.p_hat &&
                 serial.perm_median == parallel.perm_median &&
                 serial.permuted.size() == parallel.permuted.size();
    for (std::size_t i = 0; agree && i < serial.permuted.size(); ++i)
      agree = serial.permuted[i].value == parallel.permuted[i].value;
    report("calibrate", t1 - t0, t2 - t1, agree);
  }

  return 0;
}
