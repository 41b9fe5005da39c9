#include "msp/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "msp/csv.hpp"
#include "msp/errors.hpp"

namespace msp {

namespace {

// Columns of the covariate block, resolved against a dataset.  Nonlinear
// designs add squares of the continuous covariates and every pairwise
// product.  Continuity is judged on the full column, never the resample,
// so a design keeps its shape across bootstrap draws.
struct CovBlock {
  std::vector<int> cols;
  std::vector<int> squares;
  std::vector<std::pair<int, int>> pairs;

  int width() const {
    return static_cast<int>(cols.size() + squares.size() + pairs.size());
  }

  void fill(const Dataset& d, std::uint32_t row, double* out) const {
    int j = 0;
    for (int c : cols)
      out[j++] = d.covariates[static_cast<std::size_t>(c)][row];
    for (int c : squares) {
      const double v = d.covariates[static_cast<std::size_t>(c)][row];
      out[j++] = v * v;
    }
    for (auto [a, b] : pairs)
      out[j++] = d.covariates[static_cast<std::size_t>(a)][row] *
                 d.covariates[static_cast<std::size_t>(b)][row];
  }
};

bool is_continuous(const std::vector<double>& column) {
  std::set<double> seen;
  for (double v : column) {
    seen.insert(v);
    if (seen.size() > 2) return true;
  }
  return false;
}

CovBlock make_cov_block(const Dataset& d,
                        const std::vector<std::string>& names,
                        FunctionalForm form) {
  CovBlock b;
  for (const auto& name : names) {
    const int c = d.covariate_index(name);
    require_config(c >= 0, "unknown covariate: " + name);
    b.cols.push_back(c);
  }
  if (form == FunctionalForm::kNonlinear) {
    for (int c : b.cols)
      if (is_continuous(d.covariates[static_cast<std::size_t>(c)]))
        b.squares.push_back(c);
    for (std::size_t i = 0; i < b.cols.size(); ++i)
      for (std::size_t j = i + 1; j < b.cols.size(); ++j)
        b.pairs.emplace_back(b.cols[i], b.cols[j]);
  }
  return b;
}

double transform_outcome(double y, OutcomeScale scale) {
  if (scale == OutcomeScale::kRaw) return y;
  if (y <= -1.0)
    throw EstimationError("log scale undefined for outcome <= -1");
  return std::log1p(y);
}

struct LsSolution {
  Eigen::VectorXd beta;
  int rank = 0;
  int cols = 0;
  bool rank_deficient = false;
};

// Normal equations with a singularity check; falls back to rank-revealing
// QR when the Gram matrix looks collinear.  The Gram matrix is equilibrated
// to unit diagonal first, otherwise dollar-scale covariates next to 0/1
// indicators would make any spectral test meaningless.
LsSolution solve_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    int needed_col) {
  LsSolution sol;
  sol.cols = static_cast<int>(X.cols());

  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;

  Eigen::VectorXd s = xtx.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.size(); ++j)
    if (s(j) <= 0.0) s(j) = 1.0;
  const Eigen::MatrixXd scaled =
      s.cwiseInverse().asDiagonal() * xtx * s.cwiseInverse().asDiagonal();

  const auto ldlt = scaled.ldlt();
  const Eigen::VectorXd z = ldlt.solve(s.cwiseInverse().asDiagonal() * xty);
  const Eigen::VectorXd beta = s.cwiseInverse().asDiagonal() * z;

  // A pivoted D entry near zero marks a collinear design even when the
  // singular system happens to be consistent, so the residual check alone
  // is not enough.
  const Eigen::VectorXd dvec = ldlt.vectorD();
  const bool well_posed = ldlt.info() == Eigen::Success &&
                          dvec.minCoeff() > 1e-10 * dvec.cwiseAbs().maxCoeff();
  const double resid = (xtx * beta - xty).cwiseAbs().maxCoeff();
  const double ref = xtx.cwiseAbs().maxCoeff() * beta.cwiseAbs().maxCoeff() +
                     xty.cwiseAbs().maxCoeff();
  if (well_posed && beta.allFinite() && resid <= 1e-8 * (ref + 1e-300)) {
    sol.beta = beta;
    sol.rank = sol.cols;
    return sol;
  }

  const auto qr = X.colPivHouseholderQr();
  sol.rank = static_cast<int>(qr.rank());
  sol.rank_deficient = sol.rank < sol.cols;
  if (sol.rank_deficient) {
    // The coefficient of interest is identified only when its column lies
    // outside the span of the remaining columns.  Pivot membership cannot
    // decide this: an exact duplicate of the column ties with it and the
    // pivot order between the two is arbitrary.
    Eigen::MatrixXd others(X.rows(), X.cols() - 1);
    others.leftCols(needed_col) = X.leftCols(needed_col);
    others.rightCols(X.cols() - needed_col - 1) =
        X.rightCols(X.cols() - needed_col - 1);
    const Eigen::VectorXd target = X.col(needed_col);
    const Eigen::VectorXd gamma = others.colPivHouseholderQr().solve(target);
    const double gap = (target - others * gamma).norm();
    if (gap <= 1e-8 * (target.norm() + 1.0))
      throw EstimationError(
          "treatment effect unidentified (collinear design)");
  }
  sol.beta = qr.solve(y);
  if (!sol.beta.allFinite())
    throw EstimationError("least squares produced non-finite coefficients");
  return sol;
}

Eigen::MatrixXd propensity_design(const Dataset& d,
                                  const std::vector<std::uint32_t>& rows,
                                  const CovBlock& block) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd Z(n, 1 + block.width());
  std::vector<double> buf(static_cast<std::size_t>(block.width()));
  for (Eigen::Index i = 0; i < n; ++i) {
    Z(i, 0) = 1.0;
    block.fill(d, rows[static_cast<std::size_t>(i)], buf.data());
    for (int j = 0; j < block.width(); ++j) Z(i, 1 + j) = buf[static_cast<std::size_t>(j)];
  }
  return Z;
}

}  // namespace

int Dataset::covariate_index(const std::string& name) const {
  for (std::size_t i = 0; i < covariate_names.size(); ++i)
    if (covariate_names[i] == name) return static_cast<int>(i);
  return -1;
}

void Dataset::validate() const {
  const std::size_t m = n();
  require_data(m >= 2, "dataset needs at least two units");
  require_data(outcome.size() == m, "outcome length mismatch");
  require_data(covariate_names.size() == covariates.size(),
               "covariate name/column mismatch");
  for (const auto& col : covariates)
    require_data(col.size() == m, "covariate column length mismatch");
  if (is_panel)
    require_data(outcome_pre.size() == m, "pre-period outcome length mismatch");
  else
    require_data(outcome_pre.empty(),
                 "pre-period outcomes on a non-panel dataset");
  bool any_treated = false, any_control = false;
  for (auto a : treatment) {
    require_data(a == 0 || a == 1, "treatment must be 0/1");
    (a ? any_treated : any_control) = true;
  }
  require_data(any_treated && any_control,
               "dataset needs both treated and control units");
  for (double y : outcome)
    require_data(std::isfinite(y), "non-finite outcome");
  for (double y : outcome_pre)
    require_data(std::isfinite(y), "non-finite pre-period outcome");
  for (const auto& col : covariates)
    for (double v : col)
      require_data(std::isfinite(v), "non-finite covariate");
}

Dataset load_dataset(const std::string& csv_path, const ColumnRoles& roles) {
  const CsvTable t = read_csv(csv_path);
  require_data(!roles.treatment.empty() && !roles.outcome.empty(),
               "column roles need treatment and outcome names");
  const int c_treat = t.require_column(roles.treatment);
  const int c_out = t.require_column(roles.outcome);

  Dataset d;
  d.covariate_names = roles.covariates;
  std::vector<int> c_covs;
  for (const auto& name : roles.covariates)
    c_covs.push_back(t.require_column(name));
  d.covariates.resize(c_covs.size());

  const bool wide_panel = !roles.outcome_pre.empty();
  const bool long_panel = !roles.period.empty();
  require_data(!(wide_panel && long_panel),
               "specify either a pre-period column or a period column");

  const auto read_treat = [&](const std::vector<std::string>& row) {
    const double v = parse_double(row[static_cast<std::size_t>(c_treat)],
                                  roles.treatment);
    require_data(v == 0.0 || v == 1.0, "treatment must be 0/1");
    return static_cast<std::uint8_t>(v);
  };

  if (long_panel) {
    const int c_period = t.require_column(roles.period);
    d.is_panel = true;
    // Two rows per unit.  With a unit column rows are grouped by its
    // value; without one, consecutive rows are paired in file order.
    std::vector<std::pair<const std::vector<std::string>*,
                          const std::vector<std::string>*>> units;
    if (!roles.unit.empty()) {
      const int c_unit = t.require_column(roles.unit);
      std::map<std::string, std::array<const std::vector<std::string>*, 2>>
          by_unit;
      for (const auto& row : t.rows) {
        const double period = parse_double(
            row[static_cast<std::size_t>(c_period)], roles.period);
        require_data(period == 0.0 || period == 1.0, "period must be 0/1");
        auto& slot = by_unit[row[static_cast<std::size_t>(c_unit)]];
        auto*& cell = slot[static_cast<std::size_t>(period)];
        require_data(cell == nullptr, "duplicate unit/period row");
        cell = &row;
      }
      for (auto& [unit, slot] : by_unit) {
        require_data(slot[0] && slot[1], "unit missing a period: " + unit);
        units.emplace_back(slot[0], slot[1]);
      }
    } else {
      require_data(t.rows.size() % 2 == 0,
                   "long panel without unit column needs an even row count");
      for (std::size_t i = 0; i + 1 < t.rows.size(); i += 2) {
        const double p0 = parse_double(
            t.rows[i][static_cast<std::size_t>(c_period)], roles.period);
        const double p1 = parse_double(
            t.rows[i + 1][static_cast<std::size_t>(c_period)], roles.period);
        require_data((p0 == 0.0 && p1 == 1.0) || (p0 == 1.0 && p1 == 0.0),
                     "paired rows must cover both periods");
        if (p0 == 0.0) units.emplace_back(&t.rows[i], &t.rows[i + 1]);
        else units.emplace_back(&t.rows[i + 1], &t.rows[i]);
      }
    }
    for (const auto& [pre, post] : units) {
      const auto t_pre = read_treat(*pre);
      require_data(t_pre == read_treat(*post),
                   "treatment changes across periods within a unit");
      d.treatment.push_back(t_pre);
      d.outcome_pre.push_back(parse_double(
          (*pre)[static_cast<std::size_t>(c_out)], roles.outcome));
      d.outcome.push_back(parse_double(
          (*post)[static_cast<std::size_t>(c_out)], roles.outcome));
      // covariates are taken from the pre-period row
      for (std::size_t j = 0; j < c_covs.size(); ++j)
        d.covariates[j].push_back(parse_double(
            (*pre)[static_cast<std::size_t>(c_covs[j])], d.covariate_names[j]));
    }
  } else {
    if (wide_panel) d.is_panel = true;
    const int c_pre = wide_panel ? t.require_column(roles.outcome_pre) : -1;
    for (const auto& row : t.rows) {
      d.treatment.push_back(read_treat(row));
      d.outcome.push_back(parse_double(row[static_cast<std::size_t>(c_out)],
                                       roles.outcome));
      if (wide_panel)
        d.outcome_pre.push_back(parse_double(
            row[static_cast<std::size_t>(c_pre)], roles.outcome_pre));
      for (std::size_t j = 0; j < c_covs.size(); ++j)
        d.covariates[j].push_back(parse_double(
            row[static_cast<std::size_t>(c_covs[j])], d.covariate_names[j]));
    }
  }

  require_data(d.n() >= 20, "dataset has fewer than 20 units");
  d.validate();
  return d;
}

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::kOls: return "ols";
    case Estimator::kIpw: return "ipw";
    case Estimator::kDid: return "did";
    case Estimator::kDidLong: return "did_long";
  }
  return "unknown";
}

const char* to_string(FunctionalForm f) {
  return f == FunctionalForm::kLinear ? "linear" : "nonlinear";
}

const char* to_string(OutcomeScale s) {
  return s == OutcomeScale::kRaw ? "raw" : "log1p";
}

PropensityFit fit_propensity(const Dataset& d,
                             const std::vector<std::uint32_t>& rows,
                             const std::vector<std::string>& covariates,
                             FunctionalForm form) {
  const CovBlock block = make_cov_block(d, covariates, form);
  const Eigen::MatrixXd Z = propensity_design(d, rows, block);
  const auto n = Z.rows();
  const auto p = Z.cols();
  Eigen::VectorXd a(n);
  for (Eigen::Index i = 0; i < n; ++i)
    a(i) = static_cast<double>(d.treatment[rows[static_cast<std::size_t>(i)]]);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  PropensityFit fit;
  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-8;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    fit.iterations = iter + 1;
    const Eigen::VectorXd eta = Z * beta;
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi =
          std::clamp(1.0 / (1.0 + std::exp(-eta(i))), 1e-10, 1.0 - 1e-10);
      prob(i) = pi;
      w(i) = pi * (1.0 - pi);
    }
    // Weighted normal equations with a whisper of ridge so collinear
    // covariates do not blow up the update.
    Eigen::MatrixXd ztwz = Z.transpose() * w.asDiagonal() * Z;
    const double ridge = 1e-10 * (ztwz.trace() / static_cast<double>(p) + 1.0);
    ztwz.diagonal().array() += ridge;
    const Eigen::VectorXd score = Z.transpose() * (a - prob);
    const Eigen::VectorXd step = ztwz.ldlt().solve(score);
    if (!step.allFinite()) break;
    beta += step;
    if (step.cwiseAbs().maxCoeff() < kTol) {
      fit.converged = true;
      break;
    }
  }

  const Eigen::VectorXd eta = Z * beta;
  fit.p.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = 1.0 / (1.0 + std::exp(-eta(i)));
    fit.p[static_cast<std::size_t>(i)] = std::clamp(pi, 0.02, 0.98);
  }
  return fit;
}

std::vector<std::uint32_t> overlap_keep(const std::vector<double>& p,
                                        double lo, double hi) {
  std::vector<std::uint32_t> keep;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] >= lo && p[i] <= hi) keep.push_back(static_cast<std::uint32_t>(i));
  return keep;
}

Dataset trim_overlap(const Dataset& d, const std::vector<double>& p,
                     double lo, double hi) {
  require_config(p.size() == d.n(), "propensity length mismatch");
  const auto keep = overlap_keep(p, lo, hi);
  Dataset out;
  out.covariate_names = d.covariate_names;
  out.is_panel = d.is_panel;
  out.randomized = d.randomized;
  out.covariates.resize(d.covariates.size());
  for (auto i : keep) {
    out.treatment.push_back(d.treatment[i]);
    out.outcome.push_back(d.outcome[i]);
    if (d.is_panel) out.outcome_pre.push_back(d.outcome_pre[i]);
    for (std::size_t j = 0; j < d.covariates.size(); ++j)
      out.covariates[j].push_back(d.covariates[j][i]);
  }
  return out;
}

EstimateResult estimate_effect(const Dataset& d, const AnalysisChoice& a) {
  std::vector<std::uint32_t> rows(d.n());
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i] = static_cast<std::uint32_t>(i);
  return estimate_effect(d, a, rows);
}

EstimateResult estimate_effect(const Dataset& d, const AnalysisChoice& a,
                               const std::vector<std::uint32_t>& rows) {
  const bool wants_panel =
      a.estimator == Estimator::kDid || a.estimator == Estimator::kDidLong;
  require_config(wants_panel == d.is_panel,
                 wants_panel ? "difference estimators need panel data"
                             : "cross-section estimators need one wave");
  require_config(a.trim_lo > 0.0 && a.trim_lo < a.trim_hi && a.trim_hi < 1.0,
                 "overlap bounds must satisfy 0 < lo < hi < 1");
  require_internal(!rows.empty(), "estimate on empty row set");

  EstimateResult res;
  std::vector<std::uint32_t> used = rows;

  if (a.trim) {
    // The overlap score is fit on this specification's own covariates, so a
    // configuration that omits a confounder also stops trimming on it.
    // Callers can pin a shared design through overlap_covariates instead.
    const auto& overlap_covs =
        a.overlap_covariates.empty() ? a.covariates : a.overlap_covariates;
    const PropensityFit pf = fit_propensity(d, used, overlap_covs, a.form);
    res.separation |= !pf.converged;
    std::vector<std::uint32_t> kept;
    for (std::size_t i = 0; i < used.size(); ++i)
      if (pf.p[i] >= a.trim_lo && pf.p[i] <= a.trim_hi)
        kept.push_back(used[i]);
    used = std::move(kept);
  }

  std::size_t n_treat = 0, n_control = 0;
  for (auto r : used) (d.treatment[r] ? n_treat : n_control)++;
  if (n_treat == 0 || n_control == 0)
    throw EstimationError("an arm is empty after overlap trimming");
  res.n_used = used.size();

  const CovBlock block = make_cov_block(d, a.covariates, a.form);
  const auto n = static_cast<Eigen::Index>(used.size());
  const int pw = block.width();
  std::vector<double> buf(static_cast<std::size_t>(pw));

  switch (a.estimator) {
    case Estimator::kOls: {
      Eigen::MatrixXd X(n, 2 + pw);
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = used[static_cast<std::size_t>(i)];
        X(i, 0) = 1.0;
        X(i, 1) = static_cast<double>(d.treatment[r]);
        block.fill(d, r, buf.data());
        for (int j = 0; j < pw; ++j) X(i, 2 + j) = buf[static_cast<std::size_t>(j)];
        y(i) = transform_outcome(d.outcome[r], a.scale);
      }
      const LsSolution sol = solve_ls(X, y, 1);
      res.value = sol.beta(1);
      res.design_rank = sol.rank;
      res.design_cols = sol.cols;
      res.rank_deficient = sol.rank_deficient;
      break;
    }
    case Estimator::kIpw: {
      const PropensityFit pf = fit_propensity(d, used, a.covariates, a.form);
      res.separation |= !pf.converged;
      double sw1 = 0.0, sy1 = 0.0, sw0 = 0.0, sy0 = 0.0;
      for (std::size_t i = 0; i < used.size(); ++i) {
        const auto r = used[i];
        const double y = transform_outcome(d.outcome[r], a.scale);
        if (d.treatment[r]) {
          const double w = 1.0 / pf.p[i];
          sw1 += w;
          sy1 += w * y;
        } else {
          const double w = 1.0 / (1.0 - pf.p[i]);
          sw0 += w;
          sy0 += w * y;
        }
      }
      res.value = sy1 / sw1 - sy0 / sw0;
      break;
    }
    case Estimator::kDid: {
      Eigen::MatrixXd X(n, 2 + pw);
      Eigen::VectorXd y(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = used[static_cast<std::size_t>(i)];
        X(i, 0) = 1.0;
        X(i, 1) = static_cast<double>(d.treatment[r]);
        block.fill(d, r, buf.data());
        for (int j = 0; j < pw; ++j) X(i, 2 + j) = buf[static_cast<std::size_t>(j)];
        y(i) = transform_outcome(d.outcome[r], a.scale) -
               transform_outcome(d.outcome_pre[r], a.scale);
      }
      const LsSolution sol = solve_ls(X, y, 1);
      res.value = sol.beta(1);
      res.design_rank = sol.rank;
      res.design_cols = sol.cols;
      res.rank_deficient = sol.rank_deficient;
      break;
    }
    case Estimator::kDidLong: {
      // Unit-level resampling: both period rows of a sampled unit enter.
      Eigen::MatrixXd X(2 * n, 4 + pw);
      Eigen::VectorXd y(2 * n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = used[static_cast<std::size_t>(i)];
        const double treat = static_cast<double>(d.treatment[r]);
        block.fill(d, r, buf.data());
        for (int wave = 0; wave < 2; ++wave) {
          const Eigen::Index row = 2 * i + wave;
          X(row, 0) = 1.0;
          X(row, 1) = treat;
          X(row, 2) = static_cast<double>(wave);
          X(row, 3) = treat * static_cast<double>(wave);
          for (int j = 0; j < pw; ++j) X(row, 4 + j) = buf[static_cast<std::size_t>(j)];
          y(row) = transform_outcome(
              wave ? d.outcome[r] : d.outcome_pre[r], a.scale);
        }
      }
      const LsSolution sol = solve_ls(X, y, 3);
      res.value = sol.beta(3);
      res.design_rank = sol.rank;
      res.design_cols = sol.cols;
      res.rank_deficient = sol.rank_deficient;
      break;
    }
  }

  if (!std::isfinite(res.value))
    throw EstimationError("estimate is not finite");
  return res;
}

void AxisBinding::validate(const SpecSpace& space, const Dataset& d) const {
  space.validate();
  require_config(effects.size() == static_cast<std::size_t>(space.K()),
                 "binding needs exactly one effect per axis");
  const auto check_covariate = [&](const std::string& name) {
    require_config(d.covariate_index(name) >= 0,
                   "binding references unknown covariate: " + name);
  };
  const auto check_estimator = [&](Estimator e) {
    const bool wants_panel = e == Estimator::kDid || e == Estimator::kDidLong;
    require_config(wants_panel == d.is_panel,
                   std::string("estimator ") + to_string(e) +
                       (d.is_panel ? " does not fit panel data"
                                   : " needs panel data"));
  };
  for (const auto& name : baseline.covariates) check_covariate(name);
  check_estimator(baseline.estimator);
  for (const auto& eff : effects) {
    if (const auto* se = std::get_if<SetEstimator>(&eff))
      check_estimator(se->value);
    else if (const auto* dc = std::get_if<DropCovariate>(&eff))
      check_covariate(dc->name);
    else if (const auto* ac = std::get_if<AddCovariate>(&eff))
      check_covariate(ac->name);
    else if (const auto* sc = std::get_if<SetCovariates>(&eff))
      for (const auto& name : sc->names) check_covariate(name);
  }
}

AnalysisChoice AxisBinding::bind(const Config& c) const {
  require_config(c.size() == effects.size(),
                 "configuration length does not match the binding");
  AnalysisChoice out = baseline;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (!c[k]) continue;
    const auto& eff = effects[k];
    if (const auto* se = std::get_if<SetEstimator>(&eff)) {
      out.estimator = se->value;
    } else if (const auto* sf = std::get_if<SetForm>(&eff)) {
      out.form = sf->value;
    } else if (const auto* st = std::get_if<SetTrim>(&eff)) {
      out.trim = st->value;
    } else if (const auto* ss = std::get_if<SetScale>(&eff)) {
      out.scale = ss->value;
    } else if (const auto* dc = std::get_if<DropCovariate>(&eff)) {
      auto& cs = out.covariates;
      cs.erase(std::remove(cs.begin(), cs.end(), dc->name), cs.end());
    } else if (const auto* ac = std::get_if<AddCovariate>(&eff)) {
      if (std::find(out.covariates.begin(), out.covariates.end(), ac->name) ==
          out.covariates.end())
        out.covariates.push_back(ac->name);
    } else if (const auto* sc = std::get_if<SetCovariates>(&eff)) {
      out.covariates = sc->names;
    }
  }
  return out;
}

std::vector<std::string> AxisBinding::covariate_universe(
    const Dataset& d) const {
  std::set<std::string> names(baseline.covariates.begin(),
                              baseline.covariates.end());
  for (const auto& eff : effects) {
    if (const auto* ac = std::get_if<AddCovariate>(&eff))
      names.insert(ac->name);
    else if (const auto* sc = std::get_if<SetCovariates>(&eff))
      names.insert(sc->names.begin(), sc->names.end());
  }
  // dataset column order keeps the universe deterministic
  std::vector<std::string> out;
  for (const auto& name : d.covariate_names)
    if (names.count(name)) out.push_back(name);
  return out;
}

int AxisBinding::scale_axis() const {
  for (std::size_t k = 0; k < effects.size(); ++k)
    if (std::holds_alternative<SetScale>(effects[k]))
      return static_cast<int>(k);
  return -1;
}

}  // namespace msp
