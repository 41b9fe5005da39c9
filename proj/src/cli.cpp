#include "msp/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "msp/bootstrap.hpp"
#include "msp/calibration.hpp"
#include "msp/csv.hpp"
#include "msp/errors.hpp"
#include "msp/estimation.hpp"
#include "msp/fragility.hpp"
#include "msp/simulation.hpp"
#include "msp/solver.hpp"
#include "msp/specspace.hpp"
#include "msp/stats.hpp"
#include "msp/version.hpp"

namespace msp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- config plumbing ---------------------------------------------------

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    // Comments are allowed; run configs are meant to be annotated.
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

const json& need(const json& j, const char* key) {
  if (!j.contains(key))
    throw ConfigError(std::string("config is missing required key '") + key +
                      "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return need(j, key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key +
                      "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key +
                      "' has the wrong type");
  }
}

Estimator parse_estimator(const std::string& s) {
  if (s == "ols") return Estimator::kOls;
  if (s == "ipw") return Estimator::kIpw;
  if (s == "did") return Estimator::kDid;
  if (s == "did_long") return Estimator::kDidLong;
  throw ConfigError("unknown estimator '" + s +
                    "' (expected ols, ipw, did, did_long)");
}

FunctionalForm parse_form(const std::string& s) {
  if (s == "linear") return FunctionalForm::kLinear;
  if (s == "nonlinear") return FunctionalForm::kNonlinear;
  throw ConfigError("unknown functional form '" + s +
                    "' (expected linear, nonlinear)");
}

OutcomeScale parse_scale(const std::string& s) {
  if (s == "raw") return OutcomeScale::kRaw;
  if (s == "log1p") return OutcomeScale::kLog1p;
  throw ConfigError("unknown outcome scale '" + s +
                    "' (expected raw, log1p)");
}

CIMethod parse_ci(const json& cfg) {
  CIMethod m;
  if (cfg.contains("ci")) {
    const json& ci = cfg.at("ci");
    const std::string name = get_or<std::string>(ci, "method", "percentile");
    if (name == "percentile")
      m.kind = CIKind::kPercentile;
    else if (name == "bias_corrected")
      m.kind = CIKind::kBiasCorrected;
    else if (name == "boot_wald")
      m.kind = CIKind::kBootWald;
    else
      throw ConfigError("unknown ci method '" + name +
                        "' (expected percentile, bias_corrected, boot_wald)");
    m.alpha = get_or<double>(ci, "alpha", 0.05);
  }
  m.validate();
  return m;
}

Regime parse_regime(const std::string& s) {
  if (s == "additive") return Regime::kAdditive;
  if (s == "interaction") return Regime::kInteraction;
  if (s == "flip_tail") return Regime::kFlipTail;
  if (s == "flip_spec") return Regime::kFlipSpec;
  throw ConfigError("unknown regime '" + s +
                    "' (expected additive, interaction, flip_tail, flip_spec)");
}

AxisEffect parse_effect(const json& e) {
  const auto op = get_as<std::string>(e, "op");
  if (op == "set_estimator")
    return SetEstimator{parse_estimator(get_as<std::string>(e, "estimator"))};
  if (op == "set_form")
    return SetForm{parse_form(get_as<std::string>(e, "form"))};
  if (op == "set_trim") return SetTrim{get_as<bool>(e, "trim")};
  if (op == "set_scale")
    return SetScale{parse_scale(get_as<std::string>(e, "scale"))};
  if (op == "drop_covariate")
    return DropCovariate{get_as<std::string>(e, "covariate")};
  if (op == "add_covariate")
    return AddCovariate{get_as<std::string>(e, "covariate")};
  if (op == "set_covariates")
    return SetCovariates{get_as<std::vector<std::string>>(e, "covariates")};
  throw ConfigError("unknown axis op '" + op + "'");
}

std::string bits_of(const Config& c) {
  std::string s(c.size(), '0');
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i]) s[i] = '1';
  return s;
}

Config config_of_bits(const std::string& bits) {
  Config c(bits.size(), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1')
      c[i] = 1;
    else if (bits[i] != '0')
      throw ConfigError("configuration strings must be 0/1 bits, got '" +
                        bits + "'");
  }
  return c;
}

// Everything an audit-family command needs, resolved and validated.
struct StudyConfig {
  std::string config_path;
  std::string dataset_path;
  Dataset data;
  SpecSpace space;
  AxisBinding binding;
  CIMethod method;
  int draws = 200;
  bool keep_draws = false;
  std::optional<AxisWeights> weights;
  std::vector<double> alphas;
  int permutations = 199;
  FiOrdering ordering = FiOrdering::kAdversarial;
  int n_orders = 11;
  std::uint64_t seed = 0;
};

std::uint64_t resolve_seed(const json& cfg,
                           const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (cfg.contains("seed")) return get_as<std::uint64_t>(cfg, "seed");
  throw ConfigError(
      "a seed is required (config key 'seed' or the --seed flag); "
      "wall-clock seeding is not supported");
}

StudyConfig load_study(const std::string& config_path,
                       const std::optional<std::uint64_t>& seed_flag) {
  const json cfg = load_json(config_path);
  StudyConfig sc;
  sc.config_path = config_path;
  sc.seed = resolve_seed(cfg, seed_flag);

  sc.dataset_path = get_as<std::string>(cfg, "dataset");
  const json& roles_cfg = need(cfg, "roles");
  ColumnRoles roles;
  roles.treatment = get_as<std::string>(roles_cfg, "treatment");
  roles.outcome = get_as<std::string>(roles_cfg, "outcome");
  roles.covariates =
      get_as<std::vector<std::string>>(roles_cfg, "covariates");
  roles.outcome_pre = get_or<std::string>(roles_cfg, "outcome_pre", "");
  roles.unit = get_or<std::string>(roles_cfg, "unit", "");
  roles.period = get_or<std::string>(roles_cfg, "period", "");

  // Check the named columns against the file header up front so a typo in
  // the config is reported as a config error naming the column.
  {
    const CsvTable head = read_csv(sc.dataset_path);
    std::vector<std::string> named{roles.treatment, roles.outcome};
    named.insert(named.end(), roles.covariates.begin(),
                 roles.covariates.end());
    for (const std::string& extra :
         {roles.outcome_pre, roles.unit, roles.period})
      if (!extra.empty()) named.push_back(extra);
    for (const std::string& col : named)
      if (head.column(col) < 0)
        throw ConfigError("config names unknown column '" + col + "' in " +
                          sc.dataset_path);
  }

  sc.data = load_dataset(sc.dataset_path, roles);
  sc.data.randomized = get_or<bool>(cfg, "randomized", false);

  for (const json& a : need(cfg, "axes")) {
    Axis axis;
    axis.name = get_as<std::string>(a, "name");
    axis.baseline_label = get_or<std::string>(a, "baseline_label", "baseline");
    axis.perturbed_label = get_or<std::string>(a, "perturbed_label", axis.name);
    sc.space.axes.push_back(axis);
    sc.binding.effects.push_back(parse_effect(need(a, "effect")));
  }
  if (cfg.contains("admissible")) {
    std::vector<Config> admissible;
    for (const auto& bits : get_as<std::vector<std::string>>(cfg, "admissible"))
      admissible.push_back(config_of_bits(bits));
    sc.space.admissible = std::move(admissible);
  }
  sc.space.validate();

  const json& base = need(cfg, "baseline");
  sc.binding.baseline.estimator =
      parse_estimator(get_or<std::string>(base, "estimator", "ols"));
  sc.binding.baseline.covariates = base.contains("covariates")
      ? get_as<std::vector<std::string>>(base, "covariates")
      : roles.covariates;
  sc.binding.baseline.form =
      parse_form(get_or<std::string>(base, "form", "linear"));
  sc.binding.baseline.trim = get_or<bool>(base, "trim", false);
  sc.binding.baseline.scale =
      parse_scale(get_or<std::string>(base, "scale", "raw"));
  sc.binding.baseline.trim_lo = get_or<double>(base, "trim_lo", 0.05);
  sc.binding.baseline.trim_hi = get_or<double>(base, "trim_hi", 0.95);
  sc.binding.validate(sc.space, sc.data);

  sc.method = parse_ci(cfg);
  sc.draws = get_or<int>(cfg, "draws", 200);
  sc.keep_draws = get_or<bool>(cfg, "keep_draws", false);
  sc.permutations = get_or<int>(cfg, "permutations", 199);

  if (cfg.contains("weights")) {
    AxisWeights w;
    w.w = get_as<std::vector<double>>(cfg, "weights");
    w.validate(sc.space.K());
    sc.weights = std::move(w);
  }
  sc.alphas = get_or<std::vector<double>>(cfg, "alphas", {});

  if (cfg.contains("fragility")) {
    const json& fr = cfg.at("fragility");
    const auto ord = get_or<std::string>(fr, "ordering", "adversarial");
    if (ord == "adversarial")
      sc.ordering = FiOrdering::kAdversarial;
    else if (ord == "random_median")
      sc.ordering = FiOrdering::kRandomMedian;
    else
      throw ConfigError("unknown fragility ordering '" + ord +
                        "' (expected adversarial, random_median)");
    sc.n_orders = get_or<int>(fr, "n_orders", 11);
  }
  return sc;
}

// ---- output plumbing ---------------------------------------------------

void write_table(const fs::path& path, const CsvTable& t) {
  write_csv(path.string(), t);
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  return out;
}

std::string msp_text(const std::optional<int>& v) {
  return v ? std::to_string(*v) : "INFEASIBLE";
}

std::string double_or_na(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "INF" : "-INF";
  return format_double(v);
}

// Every report ends with the block that pins a replay: rerunning the same
// command on the same config and seed must reproduce each file byte for
// byte, which is why wall-clock timings never appear in any output file.
void provenance(std::ostream& os, const std::string& command,
                const StudyConfig& sc, int workers) {
  os << "\n== provenance ==\n"
     << "tool: msp " << kVersion << "\n"
     << "command: " << command << "\n"
     << "config: " << sc.config_path << "\n"
     << "dataset: " << sc.dataset_path << "\n"
     << "seed: " << sc.seed << "\n"
     << "draws: " << sc.draws << "\n"
     << "ci_method: " << sc.method.name() << "\n"
     << "alpha: " << format_double(sc.method.alpha) << "\n"
     << "quantile_rule: linear_interpolation\n"
     << "trim_bounds: [" << format_double(sc.binding.baseline.trim_lo)
     << ", " << format_double(sc.binding.baseline.trim_hi) << "]\n"
     << "workers: " << workers << " (outputs are worker-count invariant)\n";
}

void write_grid_csv(const fs::path& out_dir, const EvaluatedGrid& grid) {
  CsvTable t;
  t.header = {"config_bits", "estimate", "ci_lower", "ci_upper"};
  for (const auto& r : grid.records)
    t.rows.push_back({bits_of(r.config), format_double(r.estimate),
                      format_double(r.ci_lower), format_double(r.ci_upper)});
  write_table(out_dir / "grid.csv", t);
}

void write_draws_csv(const fs::path& out_dir, const EvaluatedGrid& grid) {
  CsvTable t;
  t.header = {"config_bits", "draw_index", "value"};
  for (const auto& r : grid.records)
    for (std::size_t b = 0; b < r.draws.size(); ++b)
      t.rows.push_back(
          {bits_of(r.config), std::to_string(b), format_double(r.draws[b])});
  write_table(out_dir / "draws.csv", t);
}

void write_curve_csv(const fs::path& out_dir, const EvaluatedGrid& grid) {
  std::vector<std::size_t> order(grid.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return grid.records[a].estimate < grid.records[b].estimate;
  });

  CsvTable t;
  t.header = {"config_bits", "n_flips",          "estimate", "ci_lower",
              "ci_upper",    "null_compatible", "changed_axes"};
  for (const std::size_t i : order) {
    const auto& r = grid.records[i];
    std::string changed;
    for (std::size_t k = 0; k < r.config.size(); ++k) {
      if (!r.config[k]) continue;
      if (!changed.empty()) changed += ';';
      changed += grid.space.axes[k].name;
    }
    t.rows.push_back({bits_of(r.config), std::to_string(hamming_weight(r.config)),
                      format_double(r.estimate), format_double(r.ci_lower),
                      format_double(r.ci_upper),
                      r.null_compatible() ? "1" : "0", changed});
  }
  write_table(out_dir / "curve.csv", t);
}

void write_alpha_curve_csv(const fs::path& out_dir,
                           const std::vector<AlphaCurvePoint>& points) {
  CsvTable t;
  t.header = {"alpha", "msp", "feasible_count"};
  for (const auto& p : points)
    t.rows.push_back({format_double(p.alpha), msp_text(p.msp.value),
                      std::to_string(p.msp.feasible_count)});
  write_table(out_dir / "alpha_curve.csv", t);
}

void describe_witness(std::ostream& os, const SpecSpace& space,
                      const MSPResult& msp) {
  if (msp.infeasible()) {
    os << "MSP: INFEASIBLE\n"
       << "no admissible specification yields an interval containing zero;\n"
       << "watch for overshoot before calling the result robust.\n";
    return;
  }
  os << "MSP: " << *msp.value << "\n";
  if (*msp.value == 0) {
    os << "the baseline interval already contains zero; no flips needed.\n";
    return;
  }
  os << "nearest null-compatible specification: " << bits_of(*msp.witness)
     << "\nflip these axes:\n";
  for (std::size_t k = 0; k < msp.witness->size(); ++k)
    if ((*msp.witness)[k])
      os << "  - " << space.axes[k].name << ": "
         << space.axes[k].baseline_label << " -> "
         << space.axes[k].perturbed_label << "\n";
}

// ---- commands ----------------------------------------------------------

int cmd_audit(const StudyConfig& sc, const fs::path& out_dir, int workers) {
  const ResampleMatrix u = draw_resamples(sc.data.n(), sc.draws, sc.seed);
  GridEvalOptions gopts;
  gopts.keep_draws = sc.keep_draws || !sc.alphas.empty();
  gopts.workers = workers;
  const EvaluatedGrid grid =
      evaluate_grid(sc.data, sc.space, sc.binding, u, sc.method, gopts);

  const MSPResult msp = compute_msp(grid);
  const AdditiveFit fit = fit_additive(grid);
  const SurfaceDiagnostics diag = surface_diagnostics(fit.surface);

  write_grid_csv(out_dir, grid);
  write_curve_csv(out_dir, grid);
  if (sc.keep_draws) write_draws_csv(out_dir, grid);
  if (!sc.alphas.empty())
    write_alpha_curve_csv(out_dir, msp_alpha_curve(grid, sc.alphas));

  auto rep = open_text(out_dir / "report.txt");
  rep << "specification audit\n===================\n\n";
  rep << "configurations: " << grid.records.size() << " over "
      << sc.space.K() << " axes\n";
  const GridRecord& base = grid.records.front();
  rep << "baseline estimate: " << format_double(base.estimate) << "  CI ["
      << format_double(base.ci_lower) << ", "
      << format_double(base.ci_upper) << "]\n\n";
  describe_witness(rep, sc.space, msp);
  rep << "feasible configurations: " << msp.feasible_count << "\n";

  if (sc.weights) {
    const WeightedMSPResult w = weighted_msp(grid, *sc.weights);
    rep << "\nweighted MSP: "
        << (w.value ? format_double(*w.value) : "INFEASIBLE") << "\n";
    if (w.witness) rep << "weighted witness: " << bits_of(*w.witness) << "\n";
  }

  rep << "\nsurface diagnostics:\n"
      << "  additive fit R^2: " << format_double(fit.r2)
      << "  mean |residual|: " << format_double(fit.mae) << "\n"
      << "  per-flip shift ratio rho: " << format_double(diag.rho) << "\n"
      << "  interval width cv: " << format_double(diag.width_cv) << "\n";

  long flagged_sep = 0, flagged_rank = 0, flagged_fail = 0, flagged_deg = 0;
  for (const auto& r : grid.records) {
    flagged_sep += r.separation;
    flagged_rank += r.rank_deficient;
    flagged_fail += r.high_failure;
    flagged_deg += r.degenerate_ci;
  }
  rep << "record flags: " << flagged_sep << " separation, " << flagged_rank
      << " rank-deficient, " << flagged_fail << " high-failure, "
      << flagged_deg << " degenerate-CI\n";

  const int scale_axis = sc.binding.scale_axis();
  if (scale_axis >= 0) {
    const Axis& ax = sc.space.axes[static_cast<std::size_t>(scale_axis)];
    rep << "\nscale facets (the grid pools two outcome scales; prefer the "
           "per-scale minima):\n"
        << "  " << ax.baseline_label << ": MSP "
        << msp_text(subgrid_msp(grid, scale_axis, 0)) << "\n"
        << "  " << ax.perturbed_label << ": MSP "
        << msp_text(subgrid_msp(grid, scale_axis, 1)) << "\n";
  }
  if (!sc.data.randomized)
    rep << "\nnote: treatment was not declared randomized; all intervals "
           "are observational estimates.\n";
  provenance(rep, "audit", sc, workers);

  std::cout << "audit: MSP " << msp_text(msp.value) << ", "
            << grid.records.size() << " specifications, outputs in "
            << out_dir.string() << "\n";
  return 0;
}

AdditiveSurface load_surface(const std::string& path) {
  const json cfg = load_json(path);
  AdditiveSurface s;
  s.tau0 = get_as<double>(cfg, "tau0");
  s.c0 = get_as<double>(cfg, "c0");
  s.delta = get_as<std::vector<double>>(cfg, "delta");
  s.K = static_cast<int>(s.delta.size());
  s.delta_c = get_or<std::vector<double>>(cfg, "delta_c", {});
  if (cfg.contains("gamma")) {
    for (const json& g : cfg.at("gamma")) {
      if (!g.is_array() || g.size() != 3)
        throw ConfigError("gamma entries must be [j, k, value] triples");
      s.gamma.push_back(
          {g.at(0).get<int>(), g.at(1).get<int>(), g.at(2).get<double>()});
    }
  }
  s.validate();
  s.check_width_nonneg();
  return s;
}

void describe_solve(std::ostream& os, const SolveReport& rep, int k) {
  os << "method: " << to_string(rep.method) << "\n"
     << "MSP: " << msp_text(rep.msp.value) << "\n";
  if (rep.msp.witness) os << "witness: " << bits_of(*rep.msp.witness) << "\n";
  if (rep.method == SolveMethod::kEnumeration)
    os << "feasible configurations: " << rep.msp.feasible_count << "\n";
  if (rep.method == SolveMethod::kBranchAndBound)
    os << "nodes explored: " << rep.nodes_explored << "\n";
  if (rep.greedy_prefix)
    os << "greedy prefix size: " << *rep.greedy_prefix << "\n";
  if (rep.greedy_feasible)
    os << "greedy lower-bound check: "
       << (*rep.greedy_feasible ? "passed" : "failed (fell back to search)")
       << "\n";
  (void)k;
}

int cmd_solve(const std::string& config_path, const std::string& method,
              bool cross_check, const fs::path& out_dir) {
  const AdditiveSurface s = load_surface(config_path);

  auto run_greedy = [&]() {
    return s.constant_width() ? greedy_constant_width(s)
                              : greedy_variable_width(s);
  };

  auto rep_file = open_text(out_dir / "solve.txt");

  if (cross_check) {
    require_config(s.K <= kMaxAxes,
                   "cross-check needs exhaustive enumeration, which is "
                   "capped at 30 axes");
    const SolveReport exact = solve_enumerate(s);
    const SolveReport bnb = branch_and_bound(s);
    require_internal(bnb.msp.value == exact.msp.value,
                     "branch and bound disagrees with enumeration");
    std::optional<SolveReport> greedy;
    std::string greedy_skip;
    try {
      greedy = run_greedy();
    } catch (const ConfigError& e) {
      greedy_skip = e.what();
    }
    if (greedy)
      require_internal(greedy->msp.value == exact.msp.value,
                       "greedy result disagrees with enumeration");

    rep_file << "cross-check: ";
    if (greedy)
      rep_file << "enumeration, branch and bound, and greedy agree\n\n";
    else
      rep_file << "enumeration and branch and bound agree; greedy skipped ("
               << greedy_skip << ")\n\n";
    describe_solve(rep_file, exact, s.K);
    std::cout << "solve: MSP " << msp_text(exact.msp.value)
              << " (cross-checked)\n";
  } else {
    SolveReport rep;
    if (method == "enum") {
      require_config(s.K <= kMaxAxes,
                     "enumeration is capped at 30 axes; use greedy or bnb");
      rep = solve_enumerate(s);
    } else if (method == "greedy") {
      rep = run_greedy();
    } else if (method == "bnb") {
      rep = branch_and_bound(s);
    } else {
      throw ConfigError("unknown --method '" + method +
                        "' (expected enum, greedy, bnb)");
    }
    describe_solve(rep_file, rep, s.K);
    std::cout << "solve: MSP " << msp_text(rep.msp.value) << " by "
              << to_string(rep.method) << " in "
              << format_double(rep.wall_ms) << " ms\n";
  }

  rep_file << "\n== provenance ==\n"
           << "tool: msp " << kVersion << "\n"
           << "command: solve\n"
           << "config: " << config_path << "\n"
           << "method: " << (cross_check ? "cross-check" : method) << "\n";
  return 0;
}

int cmd_calibrate(const StudyConfig& sc, const fs::path& out_dir,
                  int workers) {
  const ResampleMatrix u = draw_resamples(sc.data.n(), sc.draws, sc.seed);
  CalibrationOptions opts;
  opts.permutations = sc.permutations;
  opts.workers = workers;
  const CalibrationReport rep =
      calibrate(sc.data, sc.space, sc.binding, u, sc.method, sc.seed, opts);

  CsvTable t;
  t.header = {"replicate", "msp"};
  for (std::size_t j = 0; j < rep.permuted.size(); ++j)
    t.rows.push_back({std::to_string(j), rep.permuted[j].infeasible()
                                             ? "INF"
                                             : std::to_string(
                                                   *rep.permuted[j].value)});
  write_table(out_dir / "calibration.csv", t);

  auto out = open_text(out_dir / "report.txt");
  out << "permutation calibration\n=======================\n\n"
      << "observed MSP: " << msp_text(rep.observed.value) << "\n"
      << "permutations: " << rep.permuted.size() << " successful, "
      << rep.failed_replicates << " failed\n"
      << "p_hat (share of permuted MSP >= observed, add-one): "
      << format_double(rep.p_hat) << "\n"
      << "permuted MSP median: " << double_or_na(rep.perm_median) << "\n"
      << "permuted MSP mean (finite): "
      << double_or_na(rep.perm_mean_finite) << "\n"
      << "permuted infeasible rate: "
      << format_double(rep.perm_infeasible_rate) << "\n";
  for (const auto& s : rep.scale_msps)
    out << "scale facet " << s.label << ": MSP " << msp_text(s.msp) << "\n";
  if (!sc.data.randomized)
    out << "\nWARNING: treatment was not randomized; the permutation "
           "distribution is a diagnostic reference, not an exact null.\n";
  out << "\npermutations_requested: " << sc.permutations << "\n";
  provenance(out, "calibrate", sc, workers);

  std::cout << "calibrate: observed MSP " << msp_text(rep.observed.value)
            << ", p_hat " << format_double(rep.p_hat) << "\n";
  return 0;
}

int cmd_fragility(const StudyConfig& sc, const fs::path& out_dir,
                  int workers) {
  const ResampleMatrix u = draw_resamples(sc.data.n(), sc.draws, sc.seed);
  FragilityReport rep;
  if (sc.ordering == FiOrdering::kAdversarial) {
    rep = fragility_adversarial(sc.data, sc.binding.baseline, u, sc.method);
    CsvTable t;
    t.header = {"step", "original_value"};
    for (std::size_t i = 0; i < rep.zeroed_values.size(); ++i)
      t.rows.push_back(
          {std::to_string(i + 1), format_double(rep.zeroed_values[i])});
    write_table(out_dir / "zeroed.csv", t);
  } else {
    rep = fragility_random_median(sc.data, sc.binding.baseline, u, sc.method,
                                  sc.n_orders, sc.seed, workers);
  }

  auto out = open_text(out_dir / "report.txt");
  out << "fragility scan\n==============\n\n"
      << "ordering: "
      << (rep.ordering == FiOrdering::kAdversarial ? "adversarial"
                                                   : "random_median")
      << "\n"
      << "treated units: " << rep.n_treated << "\n"
      << "fragility index: " << (rep.fi ? std::to_string(*rep.fi)
                                        : "NOT_REACHED")
      << "\n"
      << "fraction of treated perturbed: "
      << format_double(rep.fraction_perturbed) << "\n";
  if (rep.ordering == FiOrdering::kRandomMedian)
    out << "orders scanned: " << rep.n_orders << "\n";
  else
    out << "zeroed values: zeroed.csv\n";
  provenance(out, "fragility", sc, workers);

  std::cout << "fragility: "
            << (rep.fi ? "FI " + std::to_string(*rep.fi) : "NOT_REACHED")
            << " over " << rep.n_treated << " treated units\n";
  return 0;
}

EvaluatedGrid load_stored_grid(const json& cfg, const CIMethod& method) {
  const auto grid_path = get_as<std::string>(cfg, "grid");
  const CsvTable g = read_csv(grid_path);
  const int c_bits = g.require_column("config_bits");
  const int c_est = g.require_column("estimate");
  const int c_lo = g.require_column("ci_lower");
  const int c_hi = g.require_column("ci_upper");

  EvaluatedGrid grid;
  grid.method = method;
  std::vector<Config> configs;
  for (const auto& row : g.rows) {
    GridRecord rec;
    rec.config = config_of_bits(row[static_cast<std::size_t>(c_bits)]);
    rec.estimate = parse_double(row[static_cast<std::size_t>(c_est)],
                                grid_path + " estimate");
    rec.ci_lower =
        parse_double(row[static_cast<std::size_t>(c_lo)], grid_path + " ci_lower");
    rec.ci_upper =
        parse_double(row[static_cast<std::size_t>(c_hi)], grid_path + " ci_upper");
    configs.push_back(rec.config);
    grid.records.push_back(std::move(rec));
  }
  require_data(!grid.records.empty(), "stored grid is empty: " + grid_path);

  const int k = static_cast<int>(grid.records.front().config.size());
  for (int i = 0; i < k; ++i)
    grid.space.axes.push_back(
        {"axis" + std::to_string(i + 1), "baseline", "flipped"});
  grid.space.admissible = std::move(configs);
  grid.space.validate();

  const auto draws_path = get_as<std::string>(cfg, "draws_file");
  const CsvTable d = read_csv(draws_path);
  const int d_bits = d.require_column("config_bits");
  const int d_val = d.require_column("value");
  for (const auto& row : d.rows) {
    const Config c = config_of_bits(row[static_cast<std::size_t>(d_bits)]);
    GridRecord* rec = nullptr;
    for (auto& r : grid.records)
      if (r.config == c) {
        rec = &r;
        break;
      }
    require_data(rec != nullptr,
                 "draws file references a configuration missing from the "
                 "grid: " + row[static_cast<std::size_t>(d_bits)]);
    rec->draws.push_back(
        parse_double(row[static_cast<std::size_t>(d_val)], draws_path));
  }
  grid.validate();
  return grid;
}

int cmd_curve(const std::string& config_path,
              const std::optional<std::uint64_t>& seed_flag,
              const fs::path& out_dir, int workers) {
  const json cfg = load_json(config_path);
  const std::vector<double> alphas =
      get_as<std::vector<double>>(cfg, "alphas");

  EvaluatedGrid grid;
  std::ostringstream prov;
  if (cfg.contains("grid")) {
    // Stored-grid mode: re-threshold draws saved by a previous audit.
    grid = load_stored_grid(cfg, parse_ci(cfg));
    prov << "\n== provenance ==\n"
         << "tool: msp " << kVersion << "\n"
         << "command: curve\n"
         << "config: " << config_path << "\n"
         << "grid: " << get_as<std::string>(cfg, "grid") << "\n"
         << "draws_file: " << get_as<std::string>(cfg, "draws_file") << "\n"
         << "ci_method: " << grid.method.name() << "\n"
         << "quantile_rule: linear_interpolation\n";
  } else {
    StudyConfig sc = load_study(config_path, seed_flag);
    const ResampleMatrix u = draw_resamples(sc.data.n(), sc.draws, sc.seed);
    GridEvalOptions gopts;
    gopts.keep_draws = true;
    gopts.workers = workers;
    grid = evaluate_grid(sc.data, sc.space, sc.binding, u, sc.method, gopts);
    std::ostringstream tmp;
    provenance(tmp, "curve", sc, workers);
    prov << tmp.str();
  }

  const auto points = msp_alpha_curve(grid, alphas);
  write_alpha_curve_csv(out_dir, points);

  auto out = open_text(out_dir / "report.txt");
  out << "MSP sensitivity to the interval level\n"
      << "=====================================\n\n"
      << "alpha  msp  feasible\n";
  for (const auto& p : points)
    out << format_double(p.alpha) << "  " << msp_text(p.msp.value) << "  "
        << p.msp.feasible_count << "\n";
  out << prov.str();

  std::cout << "curve: " << points.size() << " alpha points written to "
            << (out_dir / "alpha_curve.csv").string() << "\n";
  return 0;
}

// ---- simulate ----------------------------------------------------------

struct SimulateArgs {
  json cfg;
  std::string config_path;
  std::string block;
  std::uint64_t seed = 0;
  int workers = 0;
  bool smoke = false;
};

void sim_provenance(std::ostream& os, const SimulateArgs& sa,
                    const std::string& extras) {
  os << "\n== provenance ==\n"
     << "tool: msp " << kVersion << "\n"
     << "command: simulate\n"
     << "block: " << sa.block << "\n"
     << "config: " << (sa.config_path.empty() ? "(none)" : sa.config_path)
     << "\n"
     << "seed: " << sa.seed << "\n"
     << "smoke: " << (sa.smoke ? "yes" : "no") << "\n"
     << extras;
}

int run_block_power(const SimulateArgs& sa, const fs::path& out_dir,
                    bool compare_view) {
  PowerOptions opts;
  opts.taus = get_or<std::vector<double>>(sa.cfg, "taus",
                                          {0.0, 0.3, 0.7, 1.5});
  opts.replicates = get_or<int>(sa.cfg, "replicates", 120);
  opts.n = get_or<int>(sa.cfg, "n", 800);
  opts.draws = get_or<int>(sa.cfg, "draws", 100);
  opts.regime =
      parse_regime(get_or<std::string>(sa.cfg, "regime", "additive"));
  opts.method = parse_ci(sa.cfg);
  opts.seed = sa.seed;
  opts.workers = sa.workers;
  if (sa.smoke) {
    opts.replicates = std::min(opts.replicates, 20);
    opts.draws = std::min(opts.draws, 50);
    opts.n = std::min(opts.n, 400);
  }

  const auto cells = run_power_study(opts);

  CsvTable t;
  std::ostringstream extras;
  extras << "replicates: " << opts.replicates << "\nn: " << opts.n
         << "\ndraws: " << opts.draws << "\nregime: "
         << to_string(opts.regime) << "\n";
  if (compare_view) {
    t.header = {"tau",           "replicates",     "mean_dispersion",
                "share_sig_any", "share_sig_pos",  "share_null_compat",
                "p_infeasible"};
    for (const auto& cell : cells) {
      const PowerRow row = summarize_power(cell);
      t.rows.push_back({format_double(row.tau), std::to_string(row.replicates),
                        format_double(row.mean_dispersion),
                        format_double(row.share_sig_any),
                        format_double(row.share_sig_pos),
                        format_double(row.share_null_compat),
                        format_double(row.p_infeasible)});
    }
    write_table(out_dir / "compare.csv", t);
  } else {
    t.header = {"tau",      "replicates",        "p_infeasible",
                "median_finite_msp", "p_msp_le1", "p_baseline_sig"};
    for (const auto& cell : cells) {
      const PowerRow row = summarize_power(cell);
      t.rows.push_back(
          {format_double(row.tau), std::to_string(row.replicates),
           format_double(row.p_infeasible),
           row.median_finite_msp ? std::to_string(*row.median_finite_msp)
                                 : "NA",
           format_double(row.p_msp_le1), format_double(row.p_baseline_sig)});
    }
    write_table(out_dir / "power.csv", t);
  }

  auto out = open_text(out_dir / "report.txt");
  out << "simulation block: " << sa.block << "\n";
  for (const auto& cell : cells) {
    const PowerRow row = summarize_power(cell);
    out << "tau " << format_double(row.tau) << ": P(infeasible) "
        << format_double(row.p_infeasible) << ", median finite MSP "
        << (row.median_finite_msp ? std::to_string(*row.median_finite_msp)
                                  : "NA")
        << ", P(MSP<=1) " << format_double(row.p_msp_le1)
        << ", baseline significant " << format_double(row.p_baseline_sig)
        << "\n";
  }
  sim_provenance(out, sa, extras.str());
  std::cout << "simulate " << sa.block << ": " << cells.size()
            << " tau cells x " << opts.replicates << " replicates\n";
  return 0;
}

int run_block_decide(const SimulateArgs& sa, const fs::path& out_dir) {
  PowerOptions opts;
  opts.taus = get_or<std::vector<double>>(sa.cfg, "taus",
                                          {0.0, 0.3, 0.7, 1.5});
  opts.replicates = get_or<int>(sa.cfg, "replicates", 120);
  opts.n = get_or<int>(sa.cfg, "n", 800);
  opts.draws = get_or<int>(sa.cfg, "draws", 100);
  opts.method = parse_ci(sa.cfg);
  opts.seed = sa.seed;
  opts.workers = sa.workers;
  if (sa.smoke) {
    opts.replicates = std::min(opts.replicates, 20);
    opts.draws = std::min(opts.draws, 50);
    opts.n = std::min(opts.n, 400);
  }

  const auto cells = run_power_study(opts);
  const DecisionReport report = decision_metrics(cells);

  CsvTable t;
  t.header = {"kind", "name", "tau", "value"};
  t.rows.push_back({"auc", "msp", "", format_double(report.auc_msp)});
  t.rows.push_back(
      {"auc", "share_sig_any", "", format_double(report.auc_share_sig_any)});
  t.rows.push_back(
      {"auc", "share_sig_pos", "", format_double(report.auc_share_sig_pos)});
  for (const auto& rule : report.rules) {
    t.rows.push_back({"tpr", rule.name, "", format_double(rule.tpr)});
    for (std::size_t i = 0; i < report.negative_taus.size(); ++i)
      t.rows.push_back({"fpr", rule.name,
                        format_double(report.negative_taus[i]),
                        format_double(rule.fpr[i])});
  }
  write_table(out_dir / "decide.csv", t);

  auto out = open_text(out_dir / "report.txt");
  out << "simulation block: decide\n"
      << "AUC over replicates (robust = tau above "
      << format_double(kRobustTauThreshold) << "):\n"
      << "  MSP (infeasible scored most fragile): "
      << format_double(report.auc_msp) << "\n"
      << "  share of significant specifications: "
      << format_double(report.auc_share_sig_any) << "\n"
      << "  share of positive-significant specifications: "
      << format_double(report.auc_share_sig_pos) << "\n";
  std::ostringstream extras;
  extras << "replicates: " << opts.replicates << "\nn: " << opts.n
         << "\ndraws: " << opts.draws << "\n";
  sim_provenance(out, sa, extras.str());
  std::cout << "simulate decide: AUC(MSP) " << format_double(report.auc_msp)
            << "\n";
  return 0;
}

int run_block_sca(const SimulateArgs& sa, const fs::path& out_dir) {
  JointCurveOptions opts;
  opts.replicates = get_or<int>(sa.cfg, "replicates", 80);
  opts.n = get_or<int>(sa.cfg, "n", 800);
  opts.permutations = get_or<int>(sa.cfg, "permutations", 300);
  opts.alpha = get_or<double>(sa.cfg, "alpha", 0.05);
  opts.regime =
      parse_regime(get_or<std::string>(sa.cfg, "regime", "additive"));
  opts.seed = sa.seed;
  opts.workers = sa.workers;
  if (sa.smoke) {
    opts.replicates = std::min(opts.replicates, 10);
    opts.permutations = std::min(opts.permutations, 50);
    opts.n = std::min(opts.n, 400);
  }
  const std::vector<double> taus =
      get_or<std::vector<double>>(sa.cfg, "taus", {0.0, 0.3, 0.7, 1.5});

  CsvTable t;
  t.header = {"tau",           "replicates",    "reject_share_pos",
              "reject_median", "mean_share_pos", "mean_median_estimate"};
  auto out = open_text(out_dir / "report.txt");
  out << "simulation block: sca\n";
  for (const double tau : taus) {
    opts.tau = tau;
    const JointCurveRow row = run_joint_curve_test(opts);
    t.rows.push_back({format_double(row.tau), std::to_string(row.replicates),
                      format_double(row.reject_share_pos),
                      format_double(row.reject_median),
                      format_double(row.mean_share_pos),
                      format_double(row.mean_median_estimate)});
    out << "tau " << format_double(tau) << ": reject(share) "
        << format_double(row.reject_share_pos) << ", reject(median) "
        << format_double(row.reject_median) << "\n";
  }
  write_table(out_dir / "sca.csv", t);
  std::ostringstream extras;
  extras << "replicates: " << opts.replicates
         << "\npermutations: " << opts.permutations << "\nn: " << opts.n
         << "\n";
  sim_provenance(out, sa, extras.str());
  std::cout << "simulate sca: " << taus.size() << " tau cells\n";
  return 0;
}

int run_block_flip(const SimulateArgs& sa, const fs::path& out_dir) {
  FlipOptions opts;
  opts.replicates = get_or<int>(sa.cfg, "replicates", 120);
  opts.n = get_or<int>(sa.cfg, "n", 800);
  opts.draws = get_or<int>(sa.cfg, "draws", 100);
  opts.method = parse_ci(sa.cfg);
  opts.seed = sa.seed;
  opts.workers = sa.workers;
  if (sa.smoke) {
    opts.replicates = std::min(opts.replicates, 10);
    opts.draws = std::min(opts.draws, 50);
    opts.n = std::min(opts.n, 400);
  }

  CsvTable t;
  t.header = {"regime",      "replicates",   "p_baseline_sig", "median_fi",
              "mean_fi",     "p_fi_le3",     "p_fi_le10",      "median_fi_share",
              "p_msp_eq1",   "p_msp_inf",    "median_finite_msp"};
  auto out = open_text(out_dir / "report.txt");
  out << "simulation block: flip\n";
  for (const Regime regime : {Regime::kFlipTail, Regime::kFlipSpec}) {
    const FlipRow row = run_flip_experiment(regime, opts);
    t.rows.push_back(
        {to_string(regime), std::to_string(row.replicates),
         format_double(row.p_baseline_sig), double_or_na(row.median_fi),
         double_or_na(row.mean_fi_reached), format_double(row.p_fi_le3),
         format_double(row.p_fi_le10), double_or_na(row.median_fi_share),
         format_double(row.p_msp_eq1), format_double(row.p_msp_infeasible),
         double_or_na(row.median_finite_msp)});
    out << to_string(regime) << ": median FI " << double_or_na(row.median_fi)
        << ", P(MSP infeasible) " << format_double(row.p_msp_infeasible)
        << ", P(MSP=1) " << format_double(row.p_msp_eq1) << "\n";
  }
  write_table(out_dir / "flip.csv", t);
  std::ostringstream extras;
  extras << "replicates: " << opts.replicates << "\nn: " << opts.n
         << "\ndraws: " << opts.draws << "\n";
  sim_provenance(out, sa, extras.str());
  std::cout << "simulate flip: both regimes done\n";
  return 0;
}

int run_block_k10(const SimulateArgs& sa, const fs::path& out_dir) {
  SearchStudyOptions opts;
  opts.replicates = get_or<int>(sa.cfg, "replicates", 80);
  opts.seed = sa.seed;
  opts.workers = sa.workers;
  if (sa.smoke) opts.replicates = std::min(opts.replicates, 20);

  const auto rows = run_search_study(opts);

  // Timings go to stdout only; the CSV must replay byte-identically.
  CsvTable t;
  t.header = {"scenario",     "replicates",       "exact_mean_msp",
              "greedy_mean_msp", "greedy_exact_rate", "greedy_mae",
              "bnb_exact_rate",  "mean_rho",          "mean_width_cv"};
  auto out = open_text(out_dir / "report.txt");
  out << "simulation block: k10\n";
  for (const auto& row : rows) {
    t.rows.push_back(
        {to_string(row.scenario), std::to_string(row.replicates),
         double_or_na(row.exact_mean_msp), double_or_na(row.greedy_mean_msp),
         format_double(row.greedy_exact_rate), format_double(row.greedy_mae),
         format_double(row.bnb_exact_rate), format_double(row.mean_rho),
         format_double(row.mean_width_cv)});
    out << to_string(row.scenario) << ": greedy exact "
        << format_double(row.greedy_exact_rate) << ", bnb exact "
        << format_double(row.bnb_exact_rate) << ", rho "
        << format_double(row.mean_rho) << "\n";
    std::cout << to_string(row.scenario) << ": enumeration "
              << format_double(row.mean_enum_ms) << " ms, branch and bound "
              << format_double(row.mean_bnb_ms) << " ms (mean per surface)\n";
  }
  write_table(out_dir / "k10.csv", t);
  std::ostringstream extras;
  extras << "replicates: " << opts.replicates << "\n";
  sim_provenance(out, sa, extras.str());
  std::cout << "simulate k10: 3 scenarios x " << opts.replicates
            << " replicates\n";
  return 0;
}

int cmd_simulate(const SimulateArgs& sa, const fs::path& out_dir) {
  try {
    if (sa.block == "power") return run_block_power(sa, out_dir, false);
    if (sa.block == "compare") return run_block_power(sa, out_dir, true);
    if (sa.block == "decide") return run_block_decide(sa, out_dir);
    if (sa.block == "sca") return run_block_sca(sa, out_dir);
    if (sa.block == "flip") return run_block_flip(sa, out_dir);
    if (sa.block == "k10") return run_block_k10(sa, out_dir);
  } catch (const Error&) {
    std::cerr << "simulation block '" << sa.block << "' failed\n";
    throw;
  }
  throw ConfigError("unknown simulation block '" + sa.block +
                    "' (expected power, compare, decide, sca, flip, k10)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"minimum specification perturbation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "msp_out";
  std::uint64_t seed_value = 0;
  int workers = 0;
  bool smoke = false;
  std::string method = "enum";
  bool cross_check = false;
  std::string block;

  // Every subcommand gets its own --seed option object; only the parsed
  // one can carry a count, so "was a seed passed" means scanning them all.
  std::vector<CLI::Option*> seed_opts;
  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", config_path,
                              "path to the run configuration");
    if (config_required) c->required();
    cmd->add_option("--out", out_dir, "output directory");
    seed_opts.push_back(cmd->add_option(
        "--seed", seed_value, "seed override (otherwise from the config)"));
    cmd->add_option("--workers", workers, "worker threads (0 = all)");
    cmd->add_flag("--smoke", smoke, "shrink workloads for a quick pass");
  };

  CLI::App* audit = app.add_subcommand("audit", "evaluate a grid and its MSP");
  add_common(audit, true);
  CLI::App* solve = app.add_subcommand("solve", "solve a surface file");
  add_common(solve, true);
  solve->add_option("--method", method, "enum, greedy, or bnb");
  solve->add_flag("--cross-check", cross_check,
                  "run all applicable methods and require agreement");
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "permutation calibration of the MSP");
  add_common(calibrate_cmd, true);
  CLI::App* fragility_cmd =
      app.add_subcommand("fragility", "fragility index scan");
  add_common(fragility_cmd, true);
  CLI::App* curve_cmd =
      app.add_subcommand("curve", "MSP as a function of alpha");
  add_common(curve_cmd, true);
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "run a study block");
  add_common(simulate_cmd, false);
  simulate_cmd->add_option("--block", block,
                           "power, compare, decide, sca, flip, or k10");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::optional<std::uint64_t> seed_flag;
    for (const CLI::Option* opt : seed_opts)
      if (opt->count() > 0) seed_flag = seed_value;
    const fs::path out(out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw DataError("cannot create output directory: " + out_dir);

    if (app.got_subcommand(audit))
      return cmd_audit(load_study(config_path, seed_flag), out, workers);
    if (app.got_subcommand(solve))
      return cmd_solve(config_path, method, cross_check, out);
    if (app.got_subcommand(calibrate_cmd))
      return cmd_calibrate(load_study(config_path, seed_flag), out, workers);
    if (app.got_subcommand(fragility_cmd))
      return cmd_fragility(load_study(config_path, seed_flag), out, workers);
    if (app.got_subcommand(curve_cmd))
      return cmd_curve(config_path, seed_flag, out, workers);
    if (app.got_subcommand(simulate_cmd)) {
      SimulateArgs sa;
      if (!config_path.empty()) {
        sa.cfg = load_json(config_path);
        sa.config_path = config_path;
      } else {
        sa.cfg = json::object();
      }
      sa.block = !block.empty()
                     ? block
                     : get_or<std::string>(sa.cfg, "block", "");
      if (sa.block.empty())
        throw ConfigError(
            "simulate needs a block (--block flag or config key 'block')");
      sa.seed = resolve_seed(sa.cfg, seed_flag);
      sa.workers = workers;
      sa.smoke = smoke;
      return cmd_simulate(sa, out);
    }
    throw InternalError("no subcommand dispatched");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return 4;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 5;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace msp
