#pragma once

// Independent reference answers for the tests.  Everything in here recomputes
// its result from first principles: bit-vector sweeps, integer dynamic
// programming, textbook formulas, bisection.  None of it calls the library's
// solvers or numeric kernels, so a bug cannot hide by appearing on both sides
// of a CHECK.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "msp/solver.hpp"

namespace oracle {

// Tiny LCG used to generate test inputs.  Deliberately a different generator
// family from the library's, so generated cases do not inherit its stream
// structure.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : state_(seed * 2 + 1) {}

  std::uint64_t next() {
    state_ = state_ * 6364136223846793005ull + 1442695040888963407ull;
    return state_;
  }

  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Draw from the high bits: the low bits of a power-of-two LCG cycle with
  // tiny periods (bit zero alternates), which would make below(2) useless.
  int below(int n) {
    return static_cast<int>((next() >> 33) % static_cast<unsigned>(n));
  }

  // Central-limit normal, good enough for generating test surfaces.
  double normalish() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

 private:
  std::uint64_t state_;
};

struct BruteAnswer {
  std::optional<int> msp;      // empty when no configuration is feasible
  std::vector<int> witness;    // lexicographically smallest among minimal
  long feasible_count = 0;
};

// Exhaustive sweep of the surface cube via a bit-vector odometer.  Reads the
// surface's plain data members only; tau and width are re-derived here rather
// than through tau_at/width_at.
inline BruteAnswer brute_force_msp(const msp::AdditiveSurface& s) {
  BruteAnswer best;
  std::vector<int> bits(s.K, 0);
  for (;;) {
    double tau = s.tau0;
    double width = s.c0;
    int weight = 0;
    for (int k = 0; k < s.K; ++k) {
      if (!bits[k]) continue;
      ++weight;
      tau += s.delta[k];
      if (!s.delta_c.empty()) width += s.delta_c[k];
    }
    for (const auto& g : s.gamma)
      if (bits[g.j] && bits[g.k]) tau += g.value;

    if (std::abs(tau) <= width) {
      ++best.feasible_count;
      const bool better =
          !best.msp || weight < *best.msp ||
          (weight == *best.msp &&
           std::lexicographical_compare(bits.begin(), bits.end(),
                                        best.witness.begin(),
                                        best.witness.end()));
      if (better) {
        best.msp = weight;
        best.witness = bits;
      }
    }

    // Odometer increment; the scan order is irrelevant because the
    // comparison above is total.
    int k = s.K - 1;
    while (k >= 0 && bits[k] == 1) bits[k--] = 0;
    if (k < 0) break;
    bits[k] = 1;
  }
  return best;
}

// Minimum cardinality of a subset of `values` summing exactly to `target`,
// by dynamic programming over reachable sums.  Exact integer arithmetic.
inline std::optional<int> subset_sum_min_count(
    const std::vector<std::int64_t>& values, std::int64_t target) {
  std::map<std::int64_t, int> card;
  card[0] = 0;
  for (const std::int64_t v : values) {
    // Snapshot so each value is used at most once.
    const std::map<std::int64_t, int> before = card;
    for (const auto& [sum, count] : before) {
      const std::int64_t next = sum + v;
      auto it = card.find(next);
      if (it == card.end() || count + 1 < it->second) card[next] = count + 1;
    }
  }
  const auto it = card.find(target);
  if (it == card.end()) return std::nullopt;
  return it->second;
}

// Hazen/Excel "type 7" quantile: linear interpolation at h = (n-1)p.
inline double quantile_type7(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of nothing");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  if (hi >= v.size()) return v.back();
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

inline double norm_cdf_ref(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Standard normal quantile by bisection on the erfc-based CDF.  Slow and
// sure; accurate to ~1e-13 over the range the tests use.
inline double norm_quantile_bisect(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p outside (0,1)");
  double lo = -12.0, hi = 12.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (norm_cdf_ref(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Least squares through the normal equations, solved by Gaussian elimination
// with partial pivoting.  `columns` are the design columns (including any
// intercept); returns one coefficient per column.  Only used on small,
// well-conditioned test designs.
inline std::vector<double> ols_coefs(
    const std::vector<std::vector<double>>& columns,
    const std::vector<double>& y) {
  const std::size_t p = columns.size();
  const std::size_t n = y.size();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t r = 0; r < n; ++r) a[i][j] += columns[i][r] * columns[j][r];
    for (std::size_t r = 0; r < n; ++r) a[i][p] += columns[i][r] * y[r];
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    if (std::abs(a[col][col]) < 1e-12)
      throw std::runtime_error("singular test design");
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t j = col; j <= p; ++j) a[r][j] -= f * a[col][j];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
  return beta;
}

// ROC area by explicit threshold sweep and trapezoid integration.  Scores
// are "higher means more positive".  Mathematically equal to the pairwise
// count with ties at half, but computed along a different route.
inline double auc_trapezoid(std::vector<double> pos, std::vector<double> neg) {
  std::vector<double> thresholds;
  thresholds.reserve(pos.size() + neg.size());
  thresholds.insert(thresholds.end(), pos.begin(), pos.end());
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  // Sweep the cutoff from above the largest score down to below the
  // smallest, collecting (FPR, TPR) corners.
  std::vector<std::pair<double, double>> roc;
  roc.emplace_back(0.0, 0.0);
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it) {
    const double cut = *it;
    long tp = 0, fp = 0;
    for (const double v : pos)
      if (v >= cut) ++tp;
    for (const double v : neg)
      if (v >= cut) ++fp;
    roc.emplace_back(static_cast<double>(fp) / neg.size(),
                     static_cast<double>(tp) / pos.size());
  }
  roc.emplace_back(1.0, 1.0);

  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    area += 0.5 * (roc[i].first - roc[i - 1].first) *
            (roc[i].second + roc[i - 1].second);
  return area;
}

struct GridAnswer {
  std::optional<int> flips;
  std::optional<double> cost;
  std::vector<int> witness;
};

// Minimum Hamming weight over grid rows whose interval straddles zero
// (closed at both ends), ties broken toward the lexicographically smallest
// bit vector.
inline GridAnswer grid_min_flips(const std::vector<std::vector<int>>& configs,
                                 const std::vector<double>& lo,
                                 const std::vector<double>& hi) {
  GridAnswer best;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!(lo[i] <= 0.0 && 0.0 <= hi[i])) continue;
    const int w = static_cast<int>(
        std::count(configs[i].begin(), configs[i].end(), 1));
    const bool better =
        !best.flips || w < *best.flips ||
        (w == *best.flips &&
         std::lexicographical_compare(configs[i].begin(), configs[i].end(),
                                      best.witness.begin(),
                                      best.witness.end()));
    if (better) {
      best.flips = w;
      best.witness = configs[i];
    }
  }
  return best;
}

// Weighted variant: minimize the sum of weights over flipped axes.
inline GridAnswer grid_min_cost(const std::vector<std::vector<int>>& configs,
                                const std::vector<double>& lo,
                                const std::vector<double>& hi,
                                const std::vector<double>& w) {
  GridAnswer best;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (!(lo[i] <= 0.0 && 0.0 <= hi[i])) continue;
    double cost = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
      if (configs[i][k]) cost += w[k];
    const bool better =
        !best.cost || cost < *best.cost ||
        (cost == *best.cost &&
         std::lexicographical_compare(configs[i].begin(), configs[i].end(),
                                      best.witness.begin(),
                                      best.witness.end()));
    if (better) {
      best.cost = cost;
      best.witness = configs[i];
    }
  }
  return best;
}

}  // namespace oracle
