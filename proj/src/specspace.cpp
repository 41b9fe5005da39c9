#include "msp/specspace.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "msp/errors.hpp"

namespace msp {

int hamming_weight(const Config& c) {
  int w = 0;
  for (auto b : c) w += (b != 0);
  return w;
}

bool lex_less(const Config& a, const Config& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::size_t SpecSpace::size() const {
  if (admissible) return admissible->size();
  return std::size_t{1} << axes.size();
}

void SpecSpace::validate() const {
  require_config(!axes.empty(), "specification space needs at least one axis");
  require_config(K() <= kMaxAxes,
                 "specification space exceeds the enumerable axis cap");
  std::set<std::string> names;
  for (const auto& a : axes) {
    require_config(!a.name.empty(), "axis with empty name");
    require_config(names.insert(a.name).second,
                   "duplicate axis name: " + a.name);
  }
  if (admissible) {
    require_config(!admissible->empty(), "admissible set is empty");
    bool has_baseline = false;
    std::set<Config> seen;
    for (const auto& c : *admissible) {
      require_config(static_cast<int>(c.size()) == K(),
                     "admissible config has wrong length");
      for (auto b : c)
        require_config(b == 0 || b == 1, "config bits must be 0 or 1");
      require_config(seen.insert(c).second, "duplicate admissible config");
      if (hamming_weight(c) == 0) has_baseline = true;
    }
    require_config(has_baseline,
                   "admissible set must contain the baseline configuration");
  }
}

std::vector<Config> SpecSpace::configs() const {
  if (admissible) return *admissible;
  const int k = K();
  std::vector<Config> out;
  out.reserve(std::size_t{1} << k);
  for (std::uint32_t m = 0; m < (std::uint32_t{1} << k); ++m)
    out.push_back(config_from_mask(m, k));
  return out;
}

int SpecSpace::axis_index(const std::string& name) const {
  for (int i = 0; i < K(); ++i)
    if (axes[static_cast<std::size_t>(i)].name == name) return i;
  return -1;
}

Config config_from_mask(std::uint32_t mask, int k) {
  Config c(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < k; ++i)
    c[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
  return c;
}

std::uint32_t mask_from_config(const Config& c) {
  std::uint32_t m = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i]) m |= (std::uint32_t{1} << i);
  return m;
}

bool EvaluatedGrid::has_draws() const {
  return !records.empty() &&
         std::all_of(records.begin(), records.end(),
                     [](const GridRecord& r) { return !r.draws.empty(); });
}

void EvaluatedGrid::validate() const {
  space.validate();
  method.validate();
  const auto cs = space.configs();
  require_internal(records.size() == cs.size(),
                   "grid records do not cover the space");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    require_internal(records[i].config == cs[i],
                     "grid record order does not match the space");
    require_internal(records[i].ci_lower <= records[i].ci_upper,
                     "grid interval with lower > upper");
  }
}

const GridRecord* EvaluatedGrid::find(const Config& c) const {
  for (const auto& r : records)
    if (r.config == c) return &r;
  return nullptr;
}

std::vector<Config> feasible_set(const EvaluatedGrid& grid) {
  std::vector<Config> out;
  for (const auto& r : grid.records)
    if (r.null_compatible()) out.push_back(r.config);
  return out;
}

MSPResult compute_msp(const EvaluatedGrid& grid) {
  MSPResult res;
  for (const auto& r : grid.records) {
    if (!r.null_compatible()) continue;
    ++res.feasible_count;
    const int w = hamming_weight(r.config);
    if (!res.value || w < *res.value ||
        (w == *res.value && lex_less(r.config, *res.witness))) {
      res.value = w;
      res.witness = r.config;
    }
  }
  return res;
}

void AxisWeights::validate(int k) const {
  require_config(static_cast<int>(w.size()) == k,
                 "axis weight count does not match the space");
  for (double v : w) require_config(v > 0.0, "axis weights must be positive");
}

WeightedMSPResult weighted_msp(const EvaluatedGrid& grid,
                               const AxisWeights& weights) {
  weights.validate(grid.space.K());
  WeightedMSPResult res;
  for (const auto& r : grid.records) {
    if (!r.null_compatible()) continue;
    double cost = 0.0;
    for (std::size_t i = 0; i < r.config.size(); ++i)
      if (r.config[i]) cost += weights.w[i];
    if (!res.value || cost < *res.value ||
        (cost == *res.value && lex_less(r.config, *res.witness))) {
      res.value = cost;
      res.witness = r.config;
    }
  }
  return res;
}

Embedding Embedding::append_zero_axes(const SpecSpace& coarse, int refined_k) {
  require_config(refined_k >= coarse.K(),
                 "refined space has fewer axes than the coarse space");
  Embedding e;
  for (const auto& c : coarse.configs()) {
    Config img = c;
    img.resize(static_cast<std::size_t>(refined_k), 0);
    e.image.emplace(c, std::move(img));
  }
  return e;
}

const Config* Embedding::map_config(const Config& coarse) const {
  auto it = image.find(coarse);
  return it == image.end() ? nullptr : &it->second;
}

RefinementReport check_refinement(const EvaluatedGrid& coarse,
                                  const EvaluatedGrid& refined,
                                  const Embedding& emb) {
  RefinementReport rep;
  rep.feasibility_preserved = true;
  for (const auto& r : coarse.records) {
    const Config* img = emb.map_config(r.config);
    require_config(img != nullptr,
                   "embedding does not cover every coarse configuration");
    if (hamming_weight(*img) != hamming_weight(r.config))
      rep.weight_violations.push_back(r.config);
    if (r.null_compatible()) {
      const GridRecord* tgt = refined.find(*img);
      if (tgt == nullptr || !tgt->null_compatible())
        rep.feasibility_preserved = false;
    }
  }
  rep.coarse = compute_msp(coarse);
  rep.refined = compute_msp(refined);
  // Infeasible ranks above every finite value.
  const auto rank = [](const MSPResult& m) {
    return m.value ? *m.value : std::numeric_limits<int>::max();
  };
  rep.monotone = rank(rep.refined) <= rank(rep.coarse);
  return rep;
}

std::vector<AlphaCurvePoint> msp_alpha_curve(const EvaluatedGrid& grid,
                                             std::vector<double> alphas) {
  require_config(grid.has_draws(),
                 "alpha curve needs grids evaluated with stored draws");
  require_config(grid.method.kind != CIKind::kBootWald,
                 "alpha curve supports percentile and bias-corrected intervals");
  require_config(!alphas.empty(), "alpha curve needs at least one level");
  for (double a : alphas)
    require_config(a > 0.0 && a <= 0.5, "alpha must lie in (0, 0.5]");
  std::sort(alphas.begin(), alphas.end());

  std::vector<AlphaCurvePoint> curve;
  curve.reserve(alphas.size());
  for (double a : alphas) {
    CIMethod m = grid.method;
    m.alpha = a;
    EvaluatedGrid g;
    g.space = grid.space;
    g.method = m;
    g.records = grid.records;
    for (auto& r : g.records) {
      const CIResult ci = bootstrap_ci(r.draws, r.estimate, m);
      r.ci_lower = ci.lower;
      r.ci_upper = ci.upper;
    }
    curve.push_back({a, compute_msp(g)});
  }
  // Narrower intervals at larger alpha shrink the feasible set, so the
  // MSP can only rise along the curve; anything else is a bug.
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto rank = [](const MSPResult& m) {
      return m.value ? *m.value : std::numeric_limits<int>::max();
    };
    require_internal(rank(curve[i].msp) >= rank(curve[i - 1].msp),
                     "alpha curve not monotone");
  }
  return curve;
}

std::optional<int> subgrid_msp(const EvaluatedGrid& grid, int axis, int bit) {
  require_config(axis >= 0 && axis < grid.space.K(),
                 "subgrid axis out of range");
  std::optional<int> best;
  for (const auto& r : grid.records) {
    if (r.config[static_cast<std::size_t>(axis)] != bit) continue;
    if (!r.null_compatible()) continue;
    const int w = hamming_weight(r.config);
    if (!best || w < *best) best = w;
  }
  return best;
}

}  // namespace msp
