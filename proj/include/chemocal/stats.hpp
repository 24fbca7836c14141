#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace chemocal {

struct MeanSem {
  double mean = std::numeric_limits<double>::quiet_NaN();
  /// Sample std (n-1) over sqrt(n); NaN for fewer than two values.
  double sem = std::numeric_limits<double>::quiet_NaN();
};

/// Accumulated relative to the first value, so identical inputs give that
/// value back with SEM exactly 0.
inline MeanSem mean_sem(std::span<const double> v) {
  MeanSem out;
  if (v.empty()) return out;
  const double k = static_cast<double>(v.size());
  double shift = 0.0;
  for (double x : v) shift += x - v[0];
  shift /= k;
  out.mean = v[0] + shift;
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - v[0] - shift) * (x - v[0] - shift);
  out.sem = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
  return out;
}

}  // namespace chemocal
