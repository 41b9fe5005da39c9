#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "msp/specspace.hpp"

namespace msp {

// Pairwise interaction on the estimate surface, j < k.
struct GammaTerm {
  int j = 0;
  int k = 0;
  double value = 0.0;
};

// Closed-form description of how the estimate and the interval half-width
// move as axes flip:
//
//   tau_hat(s) = tau0 + sum_k s_k delta[k] + sum_{j<k} s_j s_k gamma_jk
//   c(s)       = c0   + sum_k s_k delta_c[k]
//
// A configuration is null-compatible when |tau_hat(s)| <= c(s).
struct AdditiveSurface {
  int K = 0;
  double tau0 = 0.0;
  double c0 = 0.0;                // baseline half-width, > 0
  std::vector<double> delta;      // size K
  std::vector<double> delta_c;    // size K, or empty for constant width
  std::vector<GammaTerm> gamma;   // sparse, strictly upper-triangular

  void validate() const;
  bool constant_width() const;
  bool has_interactions() const { return !gamma.empty(); }

  double tau_at(std::uint32_t mask) const;
  double width_at(std::uint32_t mask) const;
  bool feasible_at(std::uint32_t mask) const;

  // Sufficient condition for c(s) >= 0 everywhere: the baseline width
  // absorbs every negative width shift at once.
  bool width_nonneg_cheap() const;
  // Full verification; sweeps the cube when the cheap test fails (K <= 24),
  // throws ConfigError on a violation or when too large to verify.
  void check_width_nonneg() const;
};

enum class SolveMethod {
  kGreedyConstant,
  kGreedyVariableWidth,
  kBranchAndBound,
  kEnumeration,
};

const char* to_string(SolveMethod m);

struct SolveReport {
  MSPResult msp;
  SolveMethod method = SolveMethod::kEnumeration;
  // Variable-width greedy: whether the candidate prefix passed the lower
  // interval bound.  Unset when no prefix reaches the upper bound at all.
  std::optional<bool> greedy_feasible;
  // Raw prefix size from the greedy rule, before any fallback.  Kept so
  // callers can score the greedy answer itself against exact search.
  std::optional<int> greedy_prefix;
  long nodes_explored = 0;
  double wall_ms = 0.0;
};

// Exact O(2^K) sweep; the reference answer for every other method.
SolveReport solve_enumerate(const AdditiveSurface& s);

// Constant-width greedy.  Exact when the surface has no interactions, a
// constant width, and every axis opposing the baseline estimate moves it
// by at most 2*c0; violations of those conditions throw ConfigError.
SolveReport greedy_constant_width(const AdditiveSurface& s);

// Variable-width greedy on the feasibility gains e_k = delta_c[k] - delta[k]
// (after sign normalization).  When the minimal prefix passes the lower
// bound the answer is exact; when every tied prefix fails, falls back to
// branch and bound and reports greedy_feasible = false.
SolveReport greedy_variable_width(const AdditiveSurface& s);

// Sufficient condition under which the variable-width greedy prefix is
// guaranteed to pass its lower-bound check: every axis with positive gain
// widens the interval, and no single gain exceeds 2*c0.
bool auto_feasible(const AdditiveSurface& s);

// Depth-first search over axis inclusion, best gains first, pruned by the
// incumbent weight.  The additive reachability prune is only sound when
// the surface has no interactions; use_additive_pruning extends it to
// interaction surfaces as a caller-accepted heuristic.
SolveReport branch_and_bound(const AdditiveSurface& s,
                             bool use_additive_pruning = false);

struct SurfaceDiagnostics {
  // Largest per-axis estimate shift net of the width shift, relative to
  // the baseline interval length.  Small values mean single flips cannot
  // jump the interval past zero.
  double rho = 0.0;
  // Population coefficient of variation of c(s) over the full cube.
  double width_cv = 0.0;
};

SurfaceDiagnostics surface_diagnostics(const AdditiveSurface& s);

struct AdditiveFit {
  AdditiveSurface surface;
  double r2 = 0.0;   // of the estimate fit
  double mae = 0.0;  // mean absolute residual of the estimate fit
};

// Least-squares fit of the additive model (no interactions) to a grid's
// estimates and half-widths.
AdditiveFit fit_additive(const EvaluatedGrid& grid);

// Encodes subset-sum: does some subset of a sum exactly to target?  The
// returned surface is feasible at s iff the selected entries sum to the
// target, and its MSP is the minimum cardinality of such a subset.  All
// surface quantities are quarter-integers, so double arithmetic decides
// feasibility exactly as long as inputs stay below 2^40.
AdditiveSurface subset_sum_surface(const std::vector<std::int64_t>& a,
                                   std::int64_t target);

}  // namespace msp
