#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msp/bootstrap.hpp"
#include "msp/estimation.hpp"
#include "msp/rng.hpp"
#include "msp/solver.hpp"
#include "msp/specspace.hpp"

namespace msp {

// Synthetic data generating processes for the study harness.  All four
// share the same skeleton: four standard-normal covariates, a logistic
// treatment assignment clipped away from 0 and 1, and a unit-variance
// normal outcome error around tau * A + g(X).
//
//   kAdditive      confounded assignment, additive outcome surface
//   kInteraction   adds X1*X2 and X2^2 terms to both assignment and outcome
//   kFlipTail      near-random assignment, a small treated tail carries a
//                  large outcome bonus (significance hangs on a few units)
//   kFlipSpec      strong confounding with an X1*X2 outcome term that the
//                  additive specifications disagree about
enum class Regime { kAdditive, kInteraction, kFlipTail, kFlipSpec };

const char* to_string(Regime r);

struct SimSpec {
  Regime regime = Regime::kAdditive;
  int n = 800;
  double tau = 0.0;
  // kFlipTail only: share of treated units receiving the bonus (at least
  // one unit), and the bonus in outcome standard deviations.
  double tail_share = 0.03;
  double tail_bonus = 15.0;
};

Dataset simulate_dataset(const SimSpec& spec, Rng& rng);

// The four-axis specification space used throughout the study: drop X1,
// drop X2, force a linear functional form, disable overlap trimming.  The
// baseline is OLS on all four covariates with squares and pairwise
// products, trimming on.
SpecSpace study_space();
AxisBinding study_binding();

// Smaller three-axis space (drop X1, drop X2, force linearity) with a
// trim-free baseline on three covariates; cheap enough for the nested
// Monte Carlo that checks permutation p-value validity.
SpecSpace null_check_space();
AxisBinding null_check_binding();

// Sharp-null data for that check: three covariates, exactly half the
// units treated at random, outcome independent of treatment.
Dataset simulate_sharp_null(int n, Rng& rng);

// ---- power / null behaviour over effect sizes -------------------------

// Everything the per-tau tables need from one simulated replicate.
struct ReplicateSummary {
  MSPResult msp;
  bool baseline_significant = false;
  double share_sig_any = 0.0;      // configs whose CI excludes zero
  double share_sig_pos = 0.0;      // configs with ci_lower > 0
  double share_null_compat = 0.0;  // complement of share_sig_any
  double dispersion = 0.0;         // population sd of the point estimates
};

struct PowerOptions {
  std::vector<double> taus{0.0, 0.3, 0.7, 1.5};
  int replicates = 120;
  int n = 800;
  int draws = 100;
  CIMethod method{};
  Regime regime = Regime::kAdditive;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct PowerCell {
  double tau = 0.0;
  std::vector<ReplicateSummary> replicates;
};

struct PowerRow {
  double tau = 0.0;
  int replicates = 0;
  double p_infeasible = 0.0;
  std::optional<int> median_finite_msp;
  double p_msp_le1 = 0.0;
  double p_baseline_sig = 0.0;
  double mean_dispersion = 0.0;
  double share_sig_any = 0.0;
  double share_sig_pos = 0.0;
  double share_null_compat = 0.0;
};

// One cell per tau, replicates independent across and within cells.  Each
// replicate draws its own data and its own resample matrix.
std::vector<PowerCell> run_power_study(const PowerOptions& opts);

PowerRow summarize_power(const PowerCell& cell);

// ---- screening-rule comparison ----------------------------------------

// A replicate counts as genuinely robust when its effect is large enough
// that no admissible specification should overturn it.
inline constexpr double kRobustTauThreshold = 0.5;

struct DecisionRule {
  std::string name;
  double tpr = 0.0;
  std::vector<double> fpr;  // aligned with DecisionReport::negative_taus
};

struct DecisionReport {
  // Mann-Whitney AUC, ties counted half.  The MSP score maps infeasible
  // to -999 so overshooting replicates land at the fragile extreme.
  double auc_msp = 0.0;
  double auc_share_sig_any = 0.0;
  double auc_share_sig_pos = 0.0;
  std::vector<double> negative_taus;
  std::vector<DecisionRule> rules;
};

// Classification quality of per-replicate robustness flags, computed from
// a finished power study whose taus straddle kRobustTauThreshold.
DecisionReport decision_metrics(const std::vector<PowerCell>& cells);

const DecisionRule* find_rule(const DecisionReport& report,
                              const std::string& name);

// ---- joint test over the whole curve ----------------------------------

struct JointCurveOptions {
  double tau = 0.0;
  int replicates = 80;
  int n = 800;
  int permutations = 300;
  double alpha = 0.05;
  Regime regime = Regime::kAdditive;
  std::uint64_t seed = 1;
  int workers = 0;
};

// Permutation test of two whole-curve statistics built from the point
// estimates only: the share of specifications with a positive estimate
// (two-sided around 1/2) and the median estimate (two-sided around 0).
struct JointCurveRow {
  double tau = 0.0;
  int replicates = 0;
  double reject_share_pos = 0.0;
  double reject_median = 0.0;
  double mean_share_pos = 0.0;
  double mean_median_estimate = 0.0;
};

JointCurveRow run_joint_curve_test(const JointCurveOptions& opts);

// ---- fragility index versus MSP ---------------------------------------

struct FlipOptions {
  int replicates = 120;
  int n = 800;
  int draws = 100;
  CIMethod method{};
  std::uint64_t seed = 1;
  int workers = 0;
};

struct FlipRow {
  Regime regime = Regime::kFlipTail;
  int replicates = 0;
  double p_baseline_sig = 0.0;
  // Medians treat a scan that never crossed as +infinity and a
  // non-significant baseline as zero.
  double median_fi = 0.0;
  double mean_fi_reached = 0.0;  // NaN when no scan crossed
  double p_fi_le3 = 0.0;
  double p_fi_le10 = 0.0;
  double median_fi_share = 0.0;  // median of fi / n_treated
  double p_msp_eq1 = 0.0;
  double p_msp_infeasible = 0.0;
  double median_finite_msp = 0.0;  // NaN when every replicate is infeasible
};

// Runs the adversarial fragility scan and the grid MSP side by side on
// the two regimes built to pull them apart.
FlipRow run_flip_experiment(Regime regime, const FlipOptions& opts);

// ---- solver behaviour on synthetic ten-axis surfaces ------------------

enum class SearchScenario { kConstantWidth, kVariableWidth, kInteraction };

const char* to_string(SearchScenario s);

struct SearchStudyOptions {
  int replicates = 80;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct SearchStudyRow {
  SearchScenario scenario = SearchScenario::kConstantWidth;
  int replicates = 0;
  double exact_mean_msp = 0.0;   // mean over feasible replicates
  double greedy_mean_msp = 0.0;  // mean of the raw greedy prefix, same filter
  double greedy_exact_rate = 0.0;
  double greedy_mae = 0.0;  // over replicates where both answers are finite
  double bnb_exact_rate = 0.0;
  double mean_rho = 0.0;
  double mean_width_cv = 0.0;
  double mean_enum_ms = 0.0;
  double mean_bnb_ms = 0.0;
};

// Ten-axis surfaces with six opposing axes; the greedy rule runs on the
// additive part only, branch and bound runs without the additive prune on
// interaction surfaces, and exhaustive enumeration is the ground truth.
// Per-replicate surface construction is documented in the implementation.
std::vector<SearchStudyRow> run_search_study(const SearchStudyOptions& opts);

// One scenario surface, exposed for tests that pin the construction.
AdditiveSurface make_search_surface(SearchScenario scenario, Rng& rng);

}  // namespace msp
