#pragma once

#include <span>
#include <string>

namespace msp {

enum class CIKind { kPercentile, kBiasCorrected, kBootWald };

struct CIMethod {
  CIKind kind = CIKind::kPercentile;
  double alpha = 0.05;  // two-sided level; interval is 1 - alpha

  void validate() const;
  std::string name() const;  // "percentile" / "bias_corrected" / "boot_wald"
};

struct CIResult {
  double lower = 0.0;
  double upper = 0.0;
  // Set when the draws carry no usable spread (all equal) or when the
  // bias correction hit a 0/1 fraction and had to be clamped.
  bool degenerate = false;

  bool contains_zero() const { return lower <= 0.0 && 0.0 <= upper; }
};

// Interval from stored bootstrap draws around a point estimate.  The point
// is only used by the bias-corrected and Wald variants.  Implemented in
// bootstrap.cpp; declared here so grid types can re-threshold intervals
// without pulling in the resampling machinery.
CIResult bootstrap_ci(std::span<const double> draws, double point,
                      const CIMethod& method);

}  // namespace msp
