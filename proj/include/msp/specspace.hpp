#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msp/ci.hpp"

namespace msp {

// A specification is a bit vector over the analysis axes: bit k = 0 keeps
// axis k at its baseline choice, 1 takes the registered perturbation.
using Config = std::vector<std::uint8_t>;

int hamming_weight(const Config& c);

// Lexicographic order on bit vectors, index 0 most significant.  Used as
// the deterministic tie-break everywhere a witness is reported.
bool lex_less(const Config& a, const Config& b);

struct Axis {
  std::string name;
  std::string baseline_label;
  std::string perturbed_label;
};

// Full cube enumeration is capped; beyond this the solver module's
// structured search is the only supported route.
inline constexpr int kMaxAxes = 30;

struct SpecSpace {
  std::vector<Axis> axes;
  // When present, restricts the space to these configurations.  The
  // baseline (all zeros) must be included.  Absent means the full cube.
  std::optional<std::vector<Config>> admissible;

  int K() const { return static_cast<int>(axes.size()); }
  std::size_t size() const;
  void validate() const;

  // Materializes the configuration list.  Full-cube order is mask order
  // (axis 0 in the low bit); an explicit admissible list keeps its order.
  std::vector<Config> configs() const;

  int axis_index(const std::string& name) const;  // -1 when absent
};

Config config_from_mask(std::uint32_t mask, int k);
std::uint32_t mask_from_config(const Config& c);

struct GridRecord {
  Config config;
  double estimate = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  // Bootstrap draws that produced the interval, kept when the caller wants
  // re-thresholding (alpha curves) or diagnostics.  May be empty.
  std::vector<double> draws;
  int failed_draws = 0;
  bool high_failure = false;  // more than the tolerated share of draws failed
  bool degenerate_ci = false;
  bool separation = false;       // propensity fit did not converge
  bool rank_deficient = false;   // design needed column pivoting

  bool null_compatible() const {
    return ci_lower <= 0.0 && 0.0 <= ci_upper;
  }
};

struct EvaluatedGrid {
  SpecSpace space;
  CIMethod method;
  std::vector<GridRecord> records;

  bool has_draws() const;
  void validate() const;  // one record per configuration, aligned order
  const GridRecord* find(const Config& c) const;
};

struct MSPResult {
  // Empty value means INFEASIBLE: no configuration in the space has an
  // interval containing zero.
  std::optional<int> value;
  std::optional<Config> witness;
  long feasible_count = 0;

  bool infeasible() const { return !value.has_value(); }
};

std::vector<Config> feasible_set(const EvaluatedGrid& grid);

// Minimum number of axis flips from the baseline to a null-compatible
// configuration.  Witness is the lexicographically smallest minimizer.
MSPResult compute_msp(const EvaluatedGrid& grid);

struct AxisWeights {
  std::vector<double> w;  // one per axis, all > 0
  void validate(int k) const;
};

struct WeightedMSPResult {
  std::optional<double> value;
  std::optional<Config> witness;
  bool infeasible() const { return !value.has_value(); }
};

WeightedMSPResult weighted_msp(const EvaluatedGrid& grid,
                               const AxisWeights& weights);

// Injection from a coarse space's configurations into a refined space's.
struct Embedding {
  std::map<Config, Config> image;

  // Canonical refinement: the refined space keeps the coarse axes as a
  // prefix and appends new ones, so the image just pads with zeros.
  static Embedding append_zero_axes(const SpecSpace& coarse, int refined_k);

  const Config* map_config(const Config& coarse) const;
};

struct RefinementReport {
  // Configs whose image changes hamming weight; any entry invalidates the
  // comparison and is reported rather than silently accepted.
  std::vector<Config> weight_violations;
  // Premise of the monotonicity guarantee: every feasible coarse config
  // maps to a feasible refined config.
  bool feasibility_preserved = false;
  MSPResult coarse;
  MSPResult refined;
  bool monotone = false;  // refined MSP <= coarse MSP (infeasible = +inf)
};

RefinementReport check_refinement(const EvaluatedGrid& coarse,
                                  const EvaluatedGrid& refined,
                                  const Embedding& emb);

struct AlphaCurvePoint {
  double alpha;
  MSPResult msp;
};

// Re-thresholds stored draws at each alpha and recomputes the MSP.  Wald
// intervals are excluded because their re-thresholding is not a pure
// quantile operation on the stored draws.  Result is sorted by alpha and
// checked to be non-decreasing in the MSP.
std::vector<AlphaCurvePoint> msp_alpha_curve(const EvaluatedGrid& grid,
                                             std::vector<double> alphas);

// Minimum hamming weight over feasible records with axis fixed at bit.
// Used for per-scale reporting when an outcome-scale axis is present.
std::optional<int> subgrid_msp(const EvaluatedGrid& grid, int axis, int bit);

}  // namespace msp
