#include "msp/simulation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <string_view>

#include "msp/calibration.hpp"
#include "msp/errors.hpp"
#include "msp/fragility.hpp"
#include "msp/stats.hpp"

namespace msp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Deterministic seed for inner consumers (resample matrices) that take a
// seed rather than an Rng.  FNV over the tag, splitmix finalizer over the
// combination; same recipe the Rng substreams use.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag,
                       std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  std::uint64_t z = seed ^ h ^ (index + 0x9e3779b97f4a7c15ull);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clip(double x, double lo, double hi) {
  return std::min(hi, std::max(lo, x));
}

// Runs `body(i)` for i in [0, count) across OpenMP workers, capturing the
// first exception and rethrowing it on the calling thread.
template <typename Body>
void parallel_for(long count, int workers, const Body& body) {
  const int nthreads = workers > 0 ? workers : omp_get_max_threads();
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(nthreads)
  for (long i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::kAdditive: return "additive";
    case Regime::kInteraction: return "interaction";
    case Regime::kFlipTail: return "flip_tail";
    case Regime::kFlipSpec: return "flip_spec";
  }
  throw InternalError("unknown regime");
}

const char* to_string(SearchScenario s) {
  switch (s) {
    case SearchScenario::kConstantWidth: return "constant_width";
    case SearchScenario::kVariableWidth: return "variable_width";
    case SearchScenario::kInteraction: return "interaction";
  }
  throw InternalError("unknown search scenario");
}

Dataset simulate_dataset(const SimSpec& spec, Rng& rng) {
  require_config(spec.n >= 2, "simulated sample size must be at least 2");
  const int n = spec.n;

  Dataset d;
  d.covariate_names = {"x1", "x2", "x3", "x4"};
  d.covariates.assign(4, std::vector<double>(n));
  for (auto& column : d.covariates)
    for (double& x : column) x = rng.normal();

  const auto& x1 = d.covariates[0];
  const auto& x2 = d.covariates[1];
  const auto& x3 = d.covariates[2];
  const auto& x4 = d.covariates[3];

  // Assignment score and outcome surface per regime.
  std::vector<double> eta(n), g(n);
  for (int i = 0; i < n; ++i) {
    switch (spec.regime) {
      case Regime::kAdditive:
        eta[i] = -0.2 + 0.8 * x1[i] + 0.8 * x2[i] + 1.1 * x3[i];
        g[i] = -1.2 * x1[i] - 1.0 * x2[i] - 0.6 * x3[i] + 0.2 * x4[i];
        break;
      case Regime::kInteraction:
        eta[i] = -0.2 + 0.8 * x1[i] + 0.6 * x2[i] + 1.1 * x3[i] +
                 1.0 * x1[i] * x2[i];
        g[i] = -1.1 * x1[i] - 0.7 * x2[i] - 0.6 * x3[i] + 0.2 * x4[i] -
               1.0 * x1[i] * x2[i] - 0.8 * x2[i] * x2[i];
        break;
      case Regime::kFlipTail:
        eta[i] = 0.05 * x1[i] + 0.05 * x2[i];
        g[i] = 0.1 * x1[i] + 0.1 * x2[i];
        break;
      case Regime::kFlipSpec:
        eta[i] = -0.2 + 1.2 * x1[i] + 0.8 * x2[i] + 0.6 * x3[i];
        g[i] = -1.5 * x1[i] - 1.0 * x2[i] - 0.5 * x1[i] * x2[i];
        break;
    }
  }

  d.treatment.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = clip(sigmoid(eta[i]), 0.02, 0.98);
    d.treatment[i] = rng.uniform01() < p ? 1 : 0;
  }

  d.outcome.resize(n);
  for (int i = 0; i < n; ++i)
    d.outcome[i] = spec.tau * d.treatment[i] + g[i] + rng.normal();

  if (spec.regime == Regime::kFlipTail) {
    // A thin slice of the treated arm carries the whole effect: without
    // these units the estimate is null, so zeroing a handful of outcomes
    // flips the conclusion even though most specifications agree.
    std::vector<int> treated;
    for (int i = 0; i < n; ++i)
      if (d.treatment[i]) treated.push_back(i);
    if (!treated.empty()) {
      const long want = std::lround(spec.tail_share * treated.size());
      const std::size_t k = static_cast<std::size_t>(
          std::clamp<long>(want, 1, static_cast<long>(treated.size())));
      for (const std::size_t j :
           rng.sample_without_replacement(treated.size(), k))
        d.outcome[treated[j]] += spec.tail_bonus;
    }
  }

  d.validate();
  return d;
}

SpecSpace study_space() {
  SpecSpace space;
  space.axes = {
      {"drop_x1", "include x1", "drop x1"},
      {"drop_x2", "include x2", "drop x2"},
      {"linear_form", "flexible form", "linear form"},
      {"no_trim", "overlap trim", "no trim"},
  };
  space.validate();
  return space;
}

AxisBinding study_binding() {
  AxisBinding binding;
  binding.baseline.estimator = Estimator::kOls;
  binding.baseline.covariates = {"x1", "x2", "x3", "x4"};
  binding.baseline.form = FunctionalForm::kNonlinear;
  binding.baseline.trim = true;
  binding.baseline.scale = OutcomeScale::kRaw;
  binding.effects = {
      DropCovariate{"x1"},
      DropCovariate{"x2"},
      SetForm{FunctionalForm::kLinear},
      SetTrim{false},
  };
  return binding;
}

SpecSpace null_check_space() {
  SpecSpace space;
  space.axes = {
      {"drop_x1", "include x1", "drop x1"},
      {"drop_x2", "include x2", "drop x2"},
      {"linear_form", "flexible form", "linear form"},
  };
  space.validate();
  return space;
}

AxisBinding null_check_binding() {
  AxisBinding binding;
  binding.baseline.estimator = Estimator::kOls;
  binding.baseline.covariates = {"x1", "x2", "x3"};
  binding.baseline.form = FunctionalForm::kNonlinear;
  binding.baseline.trim = false;
  binding.baseline.scale = OutcomeScale::kRaw;
  binding.effects = {
      DropCovariate{"x1"},
      DropCovariate{"x2"},
      SetForm{FunctionalForm::kLinear},
  };
  return binding;
}

Dataset simulate_sharp_null(int n, Rng& rng) {
  require_config(n >= 4 && n % 2 == 0,
                 "sharp-null draw needs an even n of at least 4");
  Dataset d;
  d.covariate_names = {"x1", "x2", "x3"};
  d.covariates.assign(3, std::vector<double>(n));
  for (auto& column : d.covariates)
    for (double& x : column) x = rng.normal();

  // Exactly half treated, uniformly at random: the design the label
  // permutation reproduces exactly.
  d.treatment.assign(n, 0);
  std::fill(d.treatment.begin() + n / 2, d.treatment.end(), 1);
  rng.shuffle(d.treatment);

  d.outcome.resize(n);
  for (int i = 0; i < n; ++i)
    d.outcome[i] = -1.2 * d.covariates[0][i] - 1.0 * d.covariates[1][i] -
                   0.6 * d.covariates[2][i] + rng.normal();
  d.randomized = true;
  d.validate();
  return d;
}

namespace {

ReplicateSummary summarize_grid(const EvaluatedGrid& grid) {
  ReplicateSummary s;
  s.msp = compute_msp(grid);

  const auto& records = grid.records;
  require_internal(!records.empty() &&
                       hamming_weight(records.front().config) == 0,
                   "grid must lead with the baseline configuration");
  s.baseline_significant = !records.front().null_compatible();

  long sig_any = 0, sig_pos = 0;
  std::vector<double> estimates;
  estimates.reserve(records.size());
  for (const auto& r : records) {
    if (!r.null_compatible()) ++sig_any;
    if (r.ci_lower > 0.0) ++sig_pos;
    estimates.push_back(r.estimate);
  }
  const double m = static_cast<double>(records.size());
  s.share_sig_any = sig_any / m;
  s.share_sig_pos = sig_pos / m;
  s.share_null_compat = 1.0 - s.share_sig_any;

  const double mean_est = mean(estimates);
  double ss = 0.0;
  for (const double e : estimates) ss += (e - mean_est) * (e - mean_est);
  s.dispersion = std::sqrt(ss / m);
  return s;
}

}  // namespace

std::vector<PowerCell> run_power_study(const PowerOptions& opts) {
  require_config(!opts.taus.empty(), "power study needs at least one tau");
  require_config(opts.replicates >= 1, "power study needs replicates >= 1");
  opts.method.validate();

  const SpecSpace space = study_space();
  const AxisBinding binding = study_binding();

  std::vector<PowerCell> cells(opts.taus.size());
  for (std::size_t t = 0; t < opts.taus.size(); ++t) {
    cells[t].tau = opts.taus[t];
    cells[t].replicates.resize(opts.replicates);
  }

  const long total =
      static_cast<long>(opts.taus.size()) * opts.replicates;
  parallel_for(total, opts.workers, [&](long i) {
    const std::size_t t = static_cast<std::size_t>(i) / opts.replicates;
    const long r = i % opts.replicates;
    const std::uint64_t stream = t * 1000000ull + static_cast<std::uint64_t>(r);

    SimSpec spec;
    spec.regime = opts.regime;
    spec.n = opts.n;
    spec.tau = opts.taus[t];
    Rng rng = Rng::substream(opts.seed, "study", stream);
    const Dataset d = simulate_dataset(spec, rng);
    const ResampleMatrix u = draw_resamples(
        d.n(), opts.draws, mix_seed(opts.seed, "study_u", stream));

    GridEvalOptions gopts;
    gopts.keep_draws = false;
    gopts.workers = 1;  // the replicate loop owns the parallelism
    const EvaluatedGrid grid =
        evaluate_grid(d, space, binding, u, opts.method, gopts);
    cells[t].replicates[r] = summarize_grid(grid);
  });
  return cells;
}

PowerRow summarize_power(const PowerCell& cell) {
  PowerRow row;
  row.tau = cell.tau;
  row.replicates = static_cast<int>(cell.replicates.size());
  require_config(row.replicates > 0, "cannot summarize an empty cell");

  long infeasible = 0, le1 = 0, base_sig = 0;
  std::vector<double> finite_msp;
  double disp = 0.0, any = 0.0, pos = 0.0, compat = 0.0;
  for (const auto& rep : cell.replicates) {
    if (rep.msp.infeasible()) {
      ++infeasible;
    } else {
      finite_msp.push_back(*rep.msp.value);
      if (*rep.msp.value <= 1) ++le1;
    }
    if (rep.baseline_significant) ++base_sig;
    disp += rep.dispersion;
    any += rep.share_sig_any;
    pos += rep.share_sig_pos;
    compat += rep.share_null_compat;
  }
  const double r = row.replicates;
  row.p_infeasible = infeasible / r;
  row.p_msp_le1 = le1 / r;
  row.p_baseline_sig = base_sig / r;
  row.mean_dispersion = disp / r;
  row.share_sig_any = any / r;
  row.share_sig_pos = pos / r;
  row.share_null_compat = compat / r;
  if (!finite_msp.empty())
    row.median_finite_msp =
        static_cast<int>(lower_median(finite_msp));
  return row;
}

namespace {

// Mann-Whitney AUC of score as a detector of the positive class, ties
// counted half.
double pairwise_auc(const std::vector<double>& pos,
                    const std::vector<double>& neg) {
  require_config(!pos.empty() && !neg.empty(),
                 "AUC needs both classes populated");
  double wins = 0.0;
  for (const double p : pos)
    for (const double q : neg) {
      if (p > q)
        wins += 1.0;
      else if (p == q)
        wins += 0.5;
    }
  return wins / (static_cast<double>(pos.size()) * neg.size());
}

// Infeasible MSP sits at the fragile extreme: an overturned conclusion
// that cannot be recovered by any admissible flip scores as far from
// robust as possible.
double msp_score(const MSPResult& m) {
  return m.infeasible() ? -999.0 : static_cast<double>(*m.value);
}

bool rule_fires(const std::string& name, const ReplicateSummary& rep) {
  const bool finite = !rep.msp.infeasible();
  if (name == "msp_ge1") return finite && *rep.msp.value >= 1;
  if (name == "msp_ge2") return finite && *rep.msp.value >= 2;
  if (name == "sig_any_gt_50") return rep.share_sig_any > 0.5;
  if (name == "sig_any_gt_90") return rep.share_sig_any > 0.9;
  if (name == "sig_pos_gt_20") return rep.share_sig_pos > 0.2;
  if (name == "sig_pos_gt_50") return rep.share_sig_pos > 0.5;
  if (name == "null_compat_lt_20") return rep.share_null_compat < 0.2;
  throw InternalError("unknown decision rule: " + name);
}

}  // namespace

DecisionReport decision_metrics(const std::vector<PowerCell>& cells) {
  std::vector<const ReplicateSummary*> positives;
  std::vector<const PowerCell*> negative_cells;
  for (const auto& cell : cells) {
    if (cell.tau > kRobustTauThreshold) {
      for (const auto& rep : cell.replicates) positives.push_back(&rep);
    } else {
      negative_cells.push_back(&cell);
    }
  }
  require_config(!positives.empty() && !negative_cells.empty(),
                 "decision metrics need taus on both sides of the "
                 "robustness threshold");

  std::vector<const ReplicateSummary*> negatives;
  for (const auto* cell : negative_cells)
    for (const auto& rep : cell->replicates) negatives.push_back(&rep);

  const auto scores = [&](auto&& f) {
    std::pair<std::vector<double>, std::vector<double>> out;
    for (const auto* rep : positives) out.first.push_back(f(*rep));
    for (const auto* rep : negatives) out.second.push_back(f(*rep));
    return out;
  };

  DecisionReport report;
  {
    const auto [p, n] =
        scores([](const ReplicateSummary& r) { return msp_score(r.msp); });
    report.auc_msp = pairwise_auc(p, n);
  }
  {
    const auto [p, n] =
        scores([](const ReplicateSummary& r) { return r.share_sig_any; });
    report.auc_share_sig_any = pairwise_auc(p, n);
  }
  {
    const auto [p, n] =
        scores([](const ReplicateSummary& r) { return r.share_sig_pos; });
    report.auc_share_sig_pos = pairwise_auc(p, n);
  }

  for (const auto* cell : negative_cells)
    report.negative_taus.push_back(cell->tau);

  static const char* kRuleNames[] = {
      "msp_ge1",        "msp_ge2",        "sig_any_gt_50", "sig_any_gt_90",
      "sig_pos_gt_20",  "sig_pos_gt_50",  "null_compat_lt_20",
  };
  for (const char* name : kRuleNames) {
    DecisionRule rule;
    rule.name = name;
    long hits = 0;
    for (const auto* rep : positives)
      if (rule_fires(rule.name, *rep)) ++hits;
    rule.tpr = static_cast<double>(hits) / positives.size();
    for (const auto* cell : negative_cells) {
      long false_hits = 0;
      for (const auto& rep : cell->replicates)
        if (rule_fires(rule.name, rep)) ++false_hits;
      rule.fpr.push_back(static_cast<double>(false_hits) /
                         cell->replicates.size());
    }
    report.rules.push_back(std::move(rule));
  }
  return report;
}

const DecisionRule* find_rule(const DecisionReport& report,
                              const std::string& name) {
  for (const auto& rule : report.rules)
    if (rule.name == name) return &rule;
  return nullptr;
}

namespace {

// Point estimates across the whole space, no resampling.  Specifications
// whose estimate fails (an arm emptied by trimming, say) are skipped; the
// curve statistics are over the survivors.
std::vector<double> curve_point_estimates(const Dataset& d,
                                          const SpecSpace& space,
                                          const AxisBinding& binding) {
  std::vector<double> out;
  for (const Config& c : space.configs()) {
    const AnalysisChoice choice = binding.bind(c);
    try {
      out.push_back(estimate_effect(d, choice).value);
    } catch (const EstimationError&) {
    }
  }
  return out;
}

struct CurveStats {
  double share_pos = 0.0;
  double median_est = 0.0;
};

CurveStats curve_stats(const std::vector<double>& estimates) {
  require_data(!estimates.empty(),
               "every specification failed on this dataset");
  CurveStats s;
  long pos = 0;
  for (const double e : estimates)
    if (e > 0.0) ++pos;
  s.share_pos = static_cast<double>(pos) / estimates.size();
  s.median_est = quantile(estimates, 0.5);
  return s;
}

}  // namespace

JointCurveRow run_joint_curve_test(const JointCurveOptions& opts) {
  require_config(opts.replicates >= 1, "joint test needs replicates >= 1");
  require_config(opts.permutations >= 1,
                 "joint test needs at least one permutation");
  require_config(opts.alpha > 0.0 && opts.alpha < 1.0,
                 "alpha must lie in (0, 1)");

  const SpecSpace space = study_space();
  const AxisBinding binding = study_binding();

  std::vector<std::uint8_t> reject_share(opts.replicates, 0);
  std::vector<std::uint8_t> reject_median(opts.replicates, 0);
  std::vector<double> obs_share(opts.replicates), obs_median(opts.replicates);

  parallel_for(opts.replicates, opts.workers, [&](long r) {
    SimSpec spec;
    spec.regime = opts.regime;
    spec.n = opts.n;
    spec.tau = opts.tau;
    Rng rng = Rng::substream(opts.seed, "joint", static_cast<std::uint64_t>(r));
    Dataset d = simulate_dataset(spec, rng);

    const CurveStats observed = curve_stats(
        curve_point_estimates(d, space, binding));
    obs_share[r] = observed.share_pos;
    obs_median[r] = observed.median_est;

    // Two-sided around the sharp-null centers: one half for the share of
    // positive estimates, zero for the median estimate.
    const double dev_share = std::abs(observed.share_pos - 0.5);
    const double dev_median = std::abs(observed.median_est);
    long ge_share = 0, ge_median = 0;
    for (int j = 1; j <= opts.permutations; ++j) {
      Rng perm_rng = Rng::substream(
          opts.seed, "joint_perm",
          static_cast<std::uint64_t>(r) * 1000000ull + j);
      Dataset dp = d;
      dp.treatment = permute_assignment(d.treatment, perm_rng);
      const CurveStats perm = curve_stats(
          curve_point_estimates(dp, space, binding));
      if (std::abs(perm.share_pos - 0.5) >= dev_share) ++ge_share;
      if (std::abs(perm.median_est) >= dev_median) ++ge_median;
    }
    const double denom = opts.permutations + 1.0;
    reject_share[r] = (1.0 + ge_share) / denom <= opts.alpha ? 1 : 0;
    reject_median[r] = (1.0 + ge_median) / denom <= opts.alpha ? 1 : 0;
  });

  JointCurveRow row;
  row.tau = opts.tau;
  row.replicates = opts.replicates;
  const double r = opts.replicates;
  for (int i = 0; i < opts.replicates; ++i) {
    row.reject_share_pos += reject_share[i] / r;
    row.reject_median += reject_median[i] / r;
    row.mean_share_pos += obs_share[i] / r;
    row.mean_median_estimate += obs_median[i] / r;
  }
  return row;
}

FlipRow run_flip_experiment(Regime regime, const FlipOptions& opts) {
  require_config(
      regime == Regime::kFlipTail || regime == Regime::kFlipSpec,
      "the flip experiment runs on the two flip regimes only");
  require_config(opts.replicates >= 1, "flip experiment needs replicates");
  opts.method.validate();

  const SpecSpace space = study_space();
  const AxisBinding binding = study_binding();
  const char* stream_tag =
      regime == Regime::kFlipTail ? "flip_tail" : "flip_spec";

  struct FlipReplicate {
    bool baseline_sig = false;
    std::optional<int> fi;
    double fi_share = 0.0;
    MSPResult msp;
  };
  std::vector<FlipReplicate> reps(opts.replicates);

  parallel_for(opts.replicates, opts.workers, [&](long r) {
    SimSpec spec;
    spec.regime = regime;
    spec.n = opts.n;
    spec.tau = regime == Regime::kFlipTail ? 0.0 : 0.7;
    Rng rng = Rng::substream(opts.seed, stream_tag,
                             static_cast<std::uint64_t>(r));
    const Dataset d = simulate_dataset(spec, rng);
    const ResampleMatrix u = draw_resamples(
        d.n(), opts.draws,
        mix_seed(opts.seed, stream_tag, static_cast<std::uint64_t>(r)));

    const FragilityReport fragility =
        fragility_adversarial(d, binding.baseline, u, opts.method);

    GridEvalOptions gopts;
    gopts.keep_draws = false;
    gopts.workers = 1;
    const EvaluatedGrid grid =
        evaluate_grid(d, space, binding, u, opts.method, gopts);

    FlipReplicate& rep = reps[r];
    rep.baseline_sig = !grid.records.front().null_compatible();
    rep.fi = fragility.fi;
    rep.fi_share = fragility.fraction_perturbed;
    rep.msp = compute_msp(grid);
  });

  FlipRow row;
  row.regime = regime;
  row.replicates = opts.replicates;
  const double r = opts.replicates;

  std::vector<double> fi_values, fi_shares, finite_msp, fi_reached;
  long base_sig = 0, le3 = 0, le10 = 0, msp1 = 0, msp_inf = 0;
  for (const auto& rep : reps) {
    if (rep.baseline_sig) ++base_sig;
    fi_values.push_back(rep.fi ? static_cast<double>(*rep.fi) : kInf);
    fi_shares.push_back(rep.fi_share);
    if (rep.fi) {
      fi_reached.push_back(*rep.fi);
      if (*rep.fi <= 3) ++le3;
      if (*rep.fi <= 10) ++le10;
    }
    if (rep.msp.infeasible())
      ++msp_inf;
    else {
      finite_msp.push_back(*rep.msp.value);
      if (*rep.msp.value == 1) ++msp1;
    }
  }
  row.p_baseline_sig = base_sig / r;
  row.median_fi = lower_median(fi_values);
  row.mean_fi_reached = fi_reached.empty() ? kNaN : mean(fi_reached);
  row.p_fi_le3 = le3 / r;
  row.p_fi_le10 = le10 / r;
  row.median_fi_share = lower_median(fi_shares);
  row.p_msp_eq1 = msp1 / r;
  row.p_msp_infeasible = msp_inf / r;
  row.median_finite_msp =
      finite_msp.empty() ? kNaN : lower_median(finite_msp);
  return row;
}

AdditiveSurface make_search_surface(SearchScenario scenario, Rng& rng) {
  // Ten axes around a clearly significant baseline: tau0 = 2, c0 = 0.5.
  // Six axes oppose the estimate with shifts up to 0.85 (inside the
  // bounded-step limit of 2 * c0); four drift away from zero.  Width
  // shifts, when present, stay small enough to keep every width
  // nonnegative; interaction surfaces add modest pairwise terms.
  AdditiveSurface s;
  s.K = 10;
  s.tau0 = 2.0;
  s.c0 = 0.5;
  s.delta.resize(10);
  for (int k = 0; k < 6; ++k)
    s.delta[k] = -(0.18 + 0.67 * rng.uniform01());
  for (int k = 6; k < 10; ++k) s.delta[k] = 0.25 * rng.uniform01();

  if (scenario != SearchScenario::kConstantWidth) {
    s.delta_c.resize(10);
    for (int k = 0; k < 10; ++k)
      s.delta_c[k] = -0.05 + 0.20 * rng.uniform01();
  }
  if (scenario == SearchScenario::kInteraction) {
    for (int j = 0; j < 10; ++j)
      for (int k = j + 1; k < 10; ++k)
        s.gamma.push_back({j, k, 0.22 * rng.normal()});
  }
  s.validate();
  return s;
}

std::vector<SearchStudyRow> run_search_study(const SearchStudyOptions& opts) {
  require_config(opts.replicates >= 1, "search study needs replicates");

  const SearchScenario scenarios[] = {SearchScenario::kConstantWidth,
                                      SearchScenario::kVariableWidth,
                                      SearchScenario::kInteraction};
  std::vector<SearchStudyRow> rows;

  for (int sc = 0; sc < 3; ++sc) {
    const SearchScenario scenario = scenarios[sc];

    struct Outcome {
      std::optional<int> exact, greedy, bnb;
      double rho = 0.0, cv = 0.0, enum_ms = 0.0, bnb_ms = 0.0;
    };
    std::vector<Outcome> outcomes(opts.replicates);

    parallel_for(opts.replicates, opts.workers, [&](long r) {
      Rng rng = Rng::substream(
          opts.seed, "search",
          static_cast<std::uint64_t>(sc) * 1000000ull + r);
      const AdditiveSurface surface = make_search_surface(scenario, rng);

      Outcome& out = outcomes[r];
      const SolveReport exact = solve_enumerate(surface);
      out.exact = exact.msp.value;
      out.enum_ms = exact.wall_ms;

      // Default pruning flag: the additive bound stays active on the two
      // additive scenarios and is dropped on interaction surfaces, where
      // it is not sound; exactness there comes from the plain search.
      const SolveReport bnb = branch_and_bound(surface);
      out.bnb = bnb.msp.value;
      out.bnb_ms = bnb.wall_ms;

      if (scenario == SearchScenario::kConstantWidth) {
        out.greedy = greedy_constant_width(surface).greedy_prefix;
      } else if (scenario == SearchScenario::kVariableWidth) {
        out.greedy = greedy_variable_width(surface).greedy_prefix;
      } else {
        // The greedy rule only sees the additive part of the surface; its
        // answer is scored against enumeration of the full one.
        AdditiveSurface additive_part = surface;
        additive_part.gamma.clear();
        out.greedy = greedy_variable_width(additive_part).greedy_prefix;
      }

      const SurfaceDiagnostics diag = surface_diagnostics(surface);
      out.rho = diag.rho;
      out.cv = diag.width_cv;
    });

    SearchStudyRow row;
    row.scenario = scenario;
    row.replicates = opts.replicates;
    const double r = opts.replicates;
    long greedy_exact = 0, bnb_exact = 0, both_finite = 0;
    double mae = 0.0;
    std::vector<double> exact_vals, greedy_vals;
    for (const auto& out : outcomes) {
      if (out.exact) exact_vals.push_back(*out.exact);
      if (out.greedy) greedy_vals.push_back(*out.greedy);
      if (out.greedy == out.exact) ++greedy_exact;
      if (out.bnb == out.exact) ++bnb_exact;
      if (out.greedy && out.exact) {
        ++both_finite;
        mae += std::abs(*out.greedy - *out.exact);
      }
      row.mean_rho += out.rho / r;
      row.mean_width_cv += out.cv / r;
      row.mean_enum_ms += out.enum_ms / r;
      row.mean_bnb_ms += out.bnb_ms / r;
    }
    row.exact_mean_msp = exact_vals.empty() ? kNaN : mean(exact_vals);
    row.greedy_mean_msp = greedy_vals.empty() ? kNaN : mean(greedy_vals);
    row.greedy_exact_rate = greedy_exact / r;
    row.bnb_exact_rate = bnb_exact / r;
    row.greedy_mae = both_finite > 0 ? mae / both_finite : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace msp
