#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "msp/specspace.hpp"

namespace msp {

// One row per observational unit.  Panels carry both waves; the plain
// outcome field holds the post-period value in that case.
struct Dataset {
  std::vector<std::string> covariate_names;
  std::vector<std::vector<double>> covariates;  // column major
  std::vector<std::uint8_t> treatment;
  std::vector<double> outcome;
  bool is_panel = false;
  std::vector<double> outcome_pre;
  bool randomized = false;  // self-declared design, only affects reporting

  std::size_t n() const { return treatment.size(); }
  int covariate_index(const std::string& name) const;
  void validate() const;
};

struct ColumnRoles {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  // Wide panel: a second outcome column for the pre period.
  std::string outcome_pre;
  // Long panel: two rows per unit, tagged by a 0/1 period column.
  std::string period;
  std::string unit;
};

// Reads and validates a unit-level CSV.  Files below 20 rows are rejected
// here; in-memory construction (tests, simulation) has no such floor.
Dataset load_dataset(const std::string& csv_path, const ColumnRoles& roles);

enum class Estimator { kOls, kIpw, kDid, kDidLong };
enum class FunctionalForm { kLinear, kNonlinear };
enum class OutcomeScale { kRaw, kLog1p };

const char* to_string(Estimator e);
const char* to_string(FunctionalForm f);
const char* to_string(OutcomeScale s);

// A fully specified way to turn the dataset into one effect estimate.
struct AnalysisChoice {
  Estimator estimator = Estimator::kOls;
  std::vector<std::string> covariates;
  FunctionalForm form = FunctionalForm::kLinear;
  bool trim = false;
  OutcomeScale scale = OutcomeScale::kRaw;
  double trim_lo = 0.05;
  double trim_hi = 0.95;
  // Covariate set for the overlap propensity behind trimming.  Empty means
  // the choice's own covariates; set it to pin one shared trim design
  // across several analyses.
  std::vector<std::string> overlap_covariates;
};

struct EstimateResult {
  double value = 0.0;
  std::size_t n_used = 0;
  int design_rank = 0;
  int design_cols = 0;
  bool rank_deficient = false;
  bool separation = false;  // propensity fit failed to converge
};

// Effect estimate for one choice; throws EstimationError when the data
// cannot identify it (an arm emptied by trimming, treatment collinear
// with the controls, non-finite arithmetic).
EstimateResult estimate_effect(const Dataset& d, const AnalysisChoice& a);

// Same on a row multiset, the bootstrap entry point.  Indices may repeat.
EstimateResult estimate_effect(const Dataset& d, const AnalysisChoice& a,
                               const std::vector<std::uint32_t>& rows);

struct PropensityFit {
  std::vector<double> p;  // clipped to [0.02, 0.98]
  bool converged = false;
  int iterations = 0;
};

// Logistic fit of treatment on the named covariates by iteratively
// reweighted least squares.  Non-convergence (separation) is reported on
// the fit, not thrown; the clipped probabilities stay usable.
PropensityFit fit_propensity(const Dataset& d,
                             const std::vector<std::uint32_t>& rows,
                             const std::vector<std::string>& covariates,
                             FunctionalForm form);

// Positions in `rows` whose propensity lies inside [lo, hi].
std::vector<std::uint32_t> overlap_keep(const std::vector<double>& p,
                                        double lo, double hi);

// Restriction of the dataset to units with propensity inside [lo, hi],
// the one-shot counterpart of the row-index path above.
Dataset trim_overlap(const Dataset& d, const std::vector<double>& p,
                     double lo, double hi);

// ---- axis semantics --------------------------------------------------

struct SetEstimator { Estimator value; };
struct SetForm { FunctionalForm value; };
struct SetTrim { bool value; };
struct SetScale { OutcomeScale value; };
struct DropCovariate { std::string name; };
struct AddCovariate { std::string name; };
struct SetCovariates { std::vector<std::string> names; };

using AxisEffect =
    std::variant<SetEstimator, SetForm, SetTrim, SetScale, DropCovariate,
                 AddCovariate, SetCovariates>;

// Ties a specification space to concrete analysis choices: the baseline
// plus one effect per axis, applied for each set bit in axis order.
struct AxisBinding {
  AnalysisChoice baseline;
  std::vector<AxisEffect> effects;

  void validate(const SpecSpace& space, const Dataset& d) const;
  AnalysisChoice bind(const Config& c) const;

  // Union of every covariate the space can touch, in dataset column
  // order; this is the overlap universe shared by all specifications.
  std::vector<std::string> covariate_universe(const Dataset& d) const;

  // Index of the axis that switches the outcome scale, -1 when absent.
  int scale_axis() const;
};

}  // namespace msp
