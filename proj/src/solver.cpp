#include "msp/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "msp/errors.hpp"

namespace msp {

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  }
};

// Feasibility is invariant under negating the whole estimate surface, so
// every search routine works with tau0 >= 0.
AdditiveSurface sign_normalized(AdditiveSurface s) {
  if (s.tau0 < 0.0) {
    s.tau0 = -s.tau0;
    for (auto& d : s.delta) d = -d;
    for (auto& g : s.gamma) g.value = -g.value;
  }
  return s;
}

double width_shift(const AdditiveSurface& s, int k) {
  return s.delta_c.empty() ? 0.0 : s.delta_c[static_cast<std::size_t>(k)];
}

// Gain of axis k toward satisfying tau_hat <= c, for tau0 >= 0.
double gain(const AdditiveSurface& s, int k) {
  return width_shift(s, k) - s.delta[static_cast<std::size_t>(k)];
}

std::vector<int> axes_by_gain_desc(const AdditiveSurface& s) {
  std::vector<int> order(static_cast<std::size_t>(s.K));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return gain(s, a) > gain(s, b);
  });
  return order;
}

MSPResult baseline_result() {
  MSPResult r;
  r.value = 0;
  r.witness = Config{};
  r.feasible_count = 1;
  return r;
}

// Enumerates r-subsets of pool in lexicographic index order, invoking fn
// with each selection until fn returns true or the budget runs out.
// Returns false if the budget was exhausted before fn accepted.
bool for_each_combination(const std::vector<int>& pool, std::size_t r,
                          long budget,
                          const std::function<bool(const std::vector<int>&)>& fn) {
  std::vector<std::size_t> idx(r);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<int> pick(r);
  long used = 0;
  for (;;) {
    if (++used > budget) return false;
    for (std::size_t i = 0; i < r; ++i) pick[i] = pool[idx[i]];
    if (fn(pick)) return true;
    // advance to the next combination
    std::size_t i = r;
    while (i > 0) {
      --i;
      if (idx[i] != i + pool.size() - r) {
        ++idx[i];
        for (std::size_t j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
        break;
      }
      if (i == 0) return true;  // exhausted all combinations
    }
    if (r == 0) return true;
  }
}

}  // namespace

void AdditiveSurface::validate() const {
  require_config(K >= 1, "surface needs at least one axis");
  require_config(K <= kMaxAxes, "surface exceeds the axis cap");
  require_config(std::isfinite(tau0) && std::isfinite(c0),
                 "surface parameters must be finite");
  require_config(c0 > 0.0, "baseline half-width must be positive");
  require_config(static_cast<int>(delta.size()) == K,
                 "delta size does not match K");
  require_config(delta_c.empty() || static_cast<int>(delta_c.size()) == K,
                 "delta_c must be empty or size K");
  for (double d : delta)
    require_config(std::isfinite(d), "delta entries must be finite");
  for (double d : delta_c)
    require_config(std::isfinite(d), "delta_c entries must be finite");
  for (const auto& g : gamma) {
    require_config(0 <= g.j && g.j < g.k && g.k < K,
                   "interaction term must have 0 <= j < k < K");
    require_config(std::isfinite(g.value),
                   "interaction values must be finite");
  }
}

bool AdditiveSurface::constant_width() const {
  return delta_c.empty() ||
         std::all_of(delta_c.begin(), delta_c.end(),
                     [](double v) { return v == 0.0; });
}

double AdditiveSurface::tau_at(std::uint32_t mask) const {
  double t = tau0;
  for (int k = 0; k < K; ++k)
    if (mask >> k & 1u) t += delta[static_cast<std::size_t>(k)];
  for (const auto& g : gamma)
    if ((mask >> g.j & 1u) && (mask >> g.k & 1u)) t += g.value;
  return t;
}

double AdditiveSurface::width_at(std::uint32_t mask) const {
  double c = c0;
  if (!delta_c.empty())
    for (int k = 0; k < K; ++k)
      if (mask >> k & 1u) c += delta_c[static_cast<std::size_t>(k)];
  return c;
}

bool AdditiveSurface::feasible_at(std::uint32_t mask) const {
  return std::fabs(tau_at(mask)) <= width_at(mask);
}

bool AdditiveSurface::width_nonneg_cheap() const {
  double worst = c0;
  for (double d : delta_c) worst += std::min(d, 0.0);
  return worst >= 0.0;
}

void AdditiveSurface::check_width_nonneg() const {
  if (width_nonneg_cheap()) return;
  require_config(K <= 24,
                 "cannot verify interval widths stay nonnegative above 24 axes");
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << K); ++m) {
    if (width_at(static_cast<std::uint32_t>(m)) >= 0.0) continue;
    std::string bits(static_cast<std::size_t>(K), '0');
    for (int k = 0; k < K; ++k)
      if (m >> k & 1u) bits[static_cast<std::size_t>(k)] = '1';
    throw ConfigError(
        "surface produces a negative interval width at configuration " +
        bits);
  }
}

const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::kGreedyConstant: return "greedy_constant";
    case SolveMethod::kGreedyVariableWidth: return "greedy_variable_width";
    case SolveMethod::kBranchAndBound: return "branch_and_bound";
    case SolveMethod::kEnumeration: return "enumeration";
  }
  return "unknown";
}

SolveReport solve_enumerate(const AdditiveSurface& s) {
  s.validate();
  Timer timer;
  SolveReport rep;
  rep.method = SolveMethod::kEnumeration;

  // Mask sweep split across workers.  Each thread keeps its own champion
  // and the partials are merged under the same strict order (weight, then
  // lexicographic witness), so the result does not depend on the worker
  // count or the schedule.
  int best_w = std::numeric_limits<int>::max();
  std::uint32_t best_mask = 0;
  bool found = false;
  long long feasible = 0;
  const auto total = static_cast<long long>(std::uint64_t{1} << s.K);

#pragma omp parallel reduction(+ : feasible)
  {
    int local_w = std::numeric_limits<int>::max();
    std::uint32_t local_mask = 0;
    bool local_found = false;

#pragma omp for schedule(static)
    for (long long m = 0; m < total; ++m) {
      const auto mask = static_cast<std::uint32_t>(m);
      if (!s.feasible_at(mask)) continue;
      ++feasible;
      const int w = std::popcount(mask);
      if (!local_found || w < local_w) {
        local_found = true;
        local_w = w;
        local_mask = mask;
      } else if (w == local_w &&
                 lex_less(config_from_mask(mask, s.K),
                          config_from_mask(local_mask, s.K))) {
        local_mask = mask;
      }
    }

#pragma omp critical
    if (local_found) {
      if (!found || local_w < best_w) {
        found = true;
        best_w = local_w;
        best_mask = local_mask;
      } else if (local_w == best_w &&
                 lex_less(config_from_mask(local_mask, s.K),
                          config_from_mask(best_mask, s.K))) {
        best_mask = local_mask;
      }
    }
  }

  rep.msp.feasible_count = feasible;
  if (found) {
    rep.msp.value = best_w;
    rep.msp.witness = config_from_mask(best_mask, s.K);
  }
  rep.wall_ms = timer.ms();
  return rep;
}

SolveReport greedy_constant_width(const AdditiveSurface& surface) {
  surface.validate();
  require_config(!surface.has_interactions(),
                 "constant-width greedy requires an interaction-free surface");
  require_config(surface.constant_width(),
                 "constant-width greedy requires constant interval widths");

  Timer timer;
  SolveReport rep;
  rep.method = SolveMethod::kGreedyConstant;
  if (std::fabs(surface.tau0) <= surface.c0) {
    rep.msp = baseline_result();
    rep.msp.witness = Config(static_cast<std::size_t>(surface.K), 0);
    rep.greedy_prefix = 0;
    rep.wall_ms = timer.ms();
    return rep;
  }

  const AdditiveSurface s = sign_normalized(surface);
  std::vector<int> opposing;
  for (int k = 0; k < s.K; ++k)
    if (s.delta[static_cast<std::size_t>(k)] < 0.0) opposing.push_back(k);
  for (int k : opposing)
    require_config(std::fabs(s.delta[static_cast<std::size_t>(k)]) <=
                       2.0 * s.c0,
                   "axis shift exceeds the interval length; greedy exactness "
                   "does not hold");

  std::stable_sort(opposing.begin(), opposing.end(), [&](int a, int b) {
    return std::fabs(s.delta[static_cast<std::size_t>(a)]) >
           std::fabs(s.delta[static_cast<std::size_t>(b)]);
  });

  const double need = s.tau0 - s.c0;
  double acc = 0.0;
  Config witness(static_cast<std::size_t>(s.K), 0);
  for (std::size_t i = 0; i < opposing.size(); ++i) {
    acc += std::fabs(s.delta[static_cast<std::size_t>(opposing[i])]);
    witness[static_cast<std::size_t>(opposing[i])] = 1;
    if (acc >= need) {
      rep.msp.value = static_cast<int>(i + 1);
      rep.msp.witness = witness;
      rep.msp.feasible_count = 1;
      rep.greedy_prefix = rep.msp.value;
      rep.wall_ms = timer.ms();
      return rep;
    }
  }
  // Even flipping every opposing axis leaves tau above the band.
  rep.wall_ms = timer.ms();
  return rep;
}

bool auto_feasible(const AdditiveSurface& surface) {
  surface.validate();
  require_config(!surface.has_interactions(),
                 "auto-feasibility applies to interaction-free surfaces");
  const AdditiveSurface s = sign_normalized(surface);
  double max_gain = 0.0;
  for (int k = 0; k < s.K; ++k) {
    const double e = gain(s, k);
    if (e <= 0.0) continue;
    if (width_shift(s, k) < 0.0) return false;
    max_gain = std::max(max_gain, e);
  }
  return max_gain <= 2.0 * s.c0;
}

SolveReport greedy_variable_width(const AdditiveSurface& surface) {
  surface.validate();
  require_config(!surface.has_interactions(),
                 "variable-width greedy requires an interaction-free surface");
  surface.check_width_nonneg();

  Timer timer;
  SolveReport rep;
  rep.method = SolveMethod::kGreedyVariableWidth;
  if (std::fabs(surface.tau0) <= surface.c0) {
    rep.msp = baseline_result();
    rep.msp.witness = Config(static_cast<std::size_t>(surface.K), 0);
    rep.greedy_prefix = 0;
    rep.greedy_feasible = true;
    rep.wall_ms = timer.ms();
    return rep;
  }

  const AdditiveSurface s = sign_normalized(surface);
  const std::vector<int> order = axes_by_gain_desc(s);
  const double need = s.tau0 - s.c0;

  double acc = 0.0;
  int m = -1;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double e = gain(s, order[i]);
    if (e <= 0.0) break;  // sorted, nothing further helps
    acc += e;
    if (acc >= need) {
      m = static_cast<int>(i + 1);
      break;
    }
  }
  if (m < 0) {
    // The best possible total gain cannot close the gap, so no
    // configuration satisfies the upper bound at all.
    rep.wall_ms = timer.ms();
    return rep;
  }
  rep.greedy_prefix = m;

  // Axes are only ordered up to ties in the gain, and the lower-bound
  // outcome can differ across tied prefixes, so every completion of the
  // prefix at the tie boundary is a candidate.
  const double boundary = gain(s, order[static_cast<std::size_t>(m - 1)]);
  std::vector<int> strict, tied;
  for (int k = 0; k < s.K; ++k) {
    const double e = gain(s, k);
    if (e > boundary) strict.push_back(k);
    else if (e == boundary) tied.push_back(k);
  }
  const auto r = static_cast<std::size_t>(m) - strict.size();
  require_internal(r >= 1 && r <= tied.size(),
                   "tie-group completion count out of range");

  std::optional<Config> best_witness;
  const auto try_pick = [&](const std::vector<int>& pick) {
    std::uint32_t mask = 0;
    for (int k : strict) mask |= std::uint32_t{1} << k;
    for (int k : pick) mask |= std::uint32_t{1} << k;
    if (s.tau_at(mask) >= -s.width_at(mask)) {
      Config c = config_from_mask(mask, s.K);
      if (!best_witness || lex_less(c, *best_witness)) best_witness = c;
    }
    return false;  // keep scanning for the lexicographic minimum
  };
  constexpr long kTieBudget = 100000;
  const bool exhausted_all =
      for_each_combination(tied, r, kTieBudget, try_pick);

  if (best_witness) {
    rep.msp.value = m;
    rep.msp.witness = *best_witness;
    rep.msp.feasible_count = 1;
    rep.greedy_feasible = true;
    rep.wall_ms = timer.ms();
    return rep;
  }

  // Every evaluated prefix at weight m satisfies the upper bound but
  // overshoots the lower one, so the greedy certificate fails (or the tie
  // group was too large to exhaust).  Weight m is still a valid lower
  // bound; exact search settles the value.
  rep.greedy_feasible = exhausted_all ? std::optional<bool>(false)
                                      : std::nullopt;
  SolveReport exact = branch_and_bound(surface, false);
  rep.msp = exact.msp;
  rep.method = SolveMethod::kBranchAndBound;
  rep.nodes_explored = exact.nodes_explored;
  rep.wall_ms = timer.ms();
  return rep;
}

SolveReport branch_and_bound(const AdditiveSurface& surface,
                             bool use_additive_pruning) {
  surface.validate();
  Timer timer;
  SolveReport rep;
  rep.method = SolveMethod::kBranchAndBound;

  const AdditiveSurface s = sign_normalized(surface);
  const std::vector<int> order = axes_by_gain_desc(s);
  const auto K = static_cast<std::size_t>(s.K);

  // pos_gain_suffix[i]: best additional additive gain available from axes
  // order[i..]; the reachability prune compares the current additive
  // deficit against it.  Sound only without interactions, since the
  // deficit ignores gamma; callers opt in otherwise.
  std::vector<double> pos_gain_suffix(K + 1, 0.0);
  for (std::size_t i = K; i > 0; --i)
    pos_gain_suffix[i - 1] =
        pos_gain_suffix[i] + std::max(gain(s, order[i - 1]), 0.0);
  const bool prune_reachability =
      use_additive_pruning || !s.has_interactions();

  long nodes = 0;
  int best_w = std::numeric_limits<int>::max();
  std::uint32_t best_mask = 0;
  bool found = false;

  // Recursive descent, including the next axis before excluding it so
  // feasible sets surface early and the weight bound tightens fast.
  const std::function<void(std::size_t, std::uint32_t, int, double, double,
                           bool)>
      dfs = [&](std::size_t i, std::uint32_t mask, int w, double tau_add,
                double c_cur, bool fresh) {
        ++nodes;
        if (w >= best_w) return;
        if (fresh && s.feasible_at(mask)) {
          best_w = w;
          best_mask = mask;
          found = true;
          return;  // supersets only add weight
        }
        if (i == K) return;
        if (prune_reachability && tau_add - c_cur > pos_gain_suffix[i])
          return;
        const int k = order[i];
        dfs(i + 1, mask | (std::uint32_t{1} << k), w + 1,
            tau_add + s.delta[static_cast<std::size_t>(k)],
            c_cur + width_shift(s, k), true);
        dfs(i + 1, mask, w, tau_add, c_cur, false);
      };
  dfs(0, 0, 0, s.tau0, s.c0, true);

  rep.nodes_explored = nodes;
  if (found) {
    rep.msp.value = best_w;
    rep.msp.witness = config_from_mask(best_mask, s.K);
    rep.msp.feasible_count = 1;
  }
  rep.wall_ms = timer.ms();
  return rep;
}

SurfaceDiagnostics surface_diagnostics(const AdditiveSurface& s) {
  s.validate();
  SurfaceDiagnostics d;
  for (int k = 0; k < s.K; ++k) {
    const double shift =
        std::fabs(s.delta[static_cast<std::size_t>(k)] - width_shift(s, k));
    d.rho = std::max(d.rho, shift / (2.0 * s.c0));
  }
  if (s.constant_width()) {
    d.width_cv = 0.0;
    return d;
  }
  require_config(s.K <= 24, "width dispersion sweep capped at 24 axes");
  double sum = 0.0, sumsq = 0.0;
  const std::uint64_t total = std::uint64_t{1} << s.K;
  for (std::uint64_t m = 0; m < total; ++m) {
    const double c = s.width_at(static_cast<std::uint32_t>(m));
    sum += c;
    sumsq += c * c;
  }
  const double n = static_cast<double>(total);
  const double mu = sum / n;
  const double var = std::max(sumsq / n - mu * mu, 0.0);
  require_config(mu > 0.0, "width dispersion undefined for zero mean width");
  d.width_cv = std::sqrt(var) / mu;
  return d;
}

AdditiveFit fit_additive(const EvaluatedGrid& grid) {
  grid.validate();
  const auto n = static_cast<Eigen::Index>(grid.records.size());
  const int K = grid.space.K();
  require_config(n > K, "additive fit needs more configurations than axes");

  Eigen::MatrixXd X(n, K + 1);
  Eigen::VectorXd y_tau(n), y_c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = grid.records[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    for (int k = 0; k < K; ++k)
      X(i, k + 1) = static_cast<double>(r.config[static_cast<std::size_t>(k)]);
    y_tau(i) = r.estimate;
    y_c(i) = 0.5 * (r.ci_upper - r.ci_lower);
  }
  const auto qr = X.colPivHouseholderQr();
  const Eigen::VectorXd beta_tau = qr.solve(y_tau);
  const Eigen::VectorXd beta_c = qr.solve(y_c);

  AdditiveFit fit;
  fit.surface.K = K;
  fit.surface.tau0 = beta_tau(0);
  fit.surface.c0 = beta_c(0);
  fit.surface.delta.resize(static_cast<std::size_t>(K));
  fit.surface.delta_c.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    fit.surface.delta[static_cast<std::size_t>(k)] = beta_tau(k + 1);
    fit.surface.delta_c[static_cast<std::size_t>(k)] = beta_c(k + 1);
  }

  const Eigen::VectorXd resid = y_tau - X * beta_tau;
  const double ss_res = resid.squaredNorm();
  const double mean_tau = y_tau.mean();
  const double ss_tot = (y_tau.array() - mean_tau).matrix().squaredNorm();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  fit.mae = resid.cwiseAbs().mean();
  return fit;
}

AdditiveSurface subset_sum_surface(const std::vector<std::int64_t>& a,
                                   std::int64_t target) {
  require_config(!a.empty(), "subset-sum needs at least one entry");
  require_config(a.size() <= static_cast<std::size_t>(kMaxAxes),
                 "subset-sum instance exceeds the axis cap");
  require_config(target >= 0, "subset-sum target must be nonnegative");
  constexpr std::int64_t kMagnitudeCap = std::int64_t{1} << 40;
  require_config(target <= kMagnitudeCap, "subset-sum target too large");
  for (auto v : a) {
    require_config(v > 0, "subset-sum entries must be positive");
    require_config(v <= kMagnitudeCap, "subset-sum entry too large");
  }
  // Selected entries sum to the target iff tau lands inside [-1/4, 1/4]:
  // the gap between consecutive achievable sums is at least 1, and every
  // quantity is a quarter-integer far below 2^53, so double arithmetic
  // decides the boundary without rounding.
  AdditiveSurface s;
  s.K = static_cast<int>(a.size());
  s.tau0 = static_cast<double>(target) + 0.25;
  s.c0 = 0.25;
  s.delta.reserve(a.size());
  for (auto v : a) s.delta.push_back(-static_cast<double>(v));
  return s;
}

}  // namespace msp
