#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace hillriesz {

/// Every finite-window proxy for an asymptotic statement reads its thresholds from here.
struct Thresholds {
  // sequence equivalence a_m ~ b_m
  double equiv_ratio_spread = 20.0;
  double equiv_drift = 0.15;
  double equiv_drift_indeterminate = 0.3;
  // "bounded" trend of a nonnegative sequence
  double bounded_slope = 0.15;
  // lambda - free = O(rho)
  double deviation_slope = 0.1;
  double deviation_spread = 20.0;
  // Gram growth
  double gram_consistent_slope = 0.2;
  double gram_failure_slope = 0.5;
  // multiplicity classification
  double cluster_factor = 100.0;
  double tol_rank = 1e-4;
  // min(|u|,|v|) decay that counts as a failing uv equivalence
  double uv_decay_slope = -0.3;
};

/// Least-squares slope of log(y) against log(x). Requires positive data.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) return 0.0;
  return (n * sxy - sx * sy) / den;
}

inline double loglog_slope(const std::map<int, double>& seq) {
  std::vector<double> x, y;
  for (auto [m, v] : seq) {
    x.push_back(m);
    y.push_back(v);
  }
  return loglog_slope(x, y);
}

/// Slope fit of a nonnegative sequence whose entries carry a numerical resolution floor.
/// Values below the largest floor in the window are indistinguishable from zero and are
/// clamped to it; a sequence entirely below resolution has slope 0.
struct ClampedTrend {
  double slope = 0.0;
  double floor = 0.0;
  bool below_resolution = false;
};

inline ClampedTrend clamped_slope(const std::map<int, double>& values, const std::map<int, double>& floors) {
  ClampedTrend t;
  for (auto [m, f] : floors) t.floor = std::max(t.floor, f);
  t.floor = std::max(t.floor, std::numeric_limits<double>::min());
  std::map<int, double> clamped;
  bool any_above = false;
  for (auto [m, v] : values) {
    if (v > t.floor) any_above = true;
    clamped[m] = std::max(v, t.floor);
  }
  if (!any_above) {
    t.below_resolution = true;
    return t;
  }
  t.slope = loglog_slope(clamped);
  return t;
}

inline double spread(const std::map<int, double>& seq) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (auto [m, v] : seq) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace hillriesz
