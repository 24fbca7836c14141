#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "chemocal/calib.hpp"
#include "chemocal/csv.hpp"
#include "chemocal/error.hpp"
#include "chemocal/parallel.hpp"

namespace chemocal {

inline constexpr std::size_t kSkewTestMinN = 8;
inline constexpr std::size_t kKurtosisTestMinN = 5;
inline constexpr std::size_t kKurtosisTestWarnN = 20;

/// Central moments with divisor n; g1 = m3 / m2^1.5, g2 = m4 / m2^2 - 3.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
};

inline Moments sample_moments(std::span<const double> x) {
  if (x.size() < 2) throw PreconditionError("sample_moments: need at least 2 values");
  Moments m;
  m.n = x.size();
  const double n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= n;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  if (!(m.m2 > 0.0) || m.m2 <= 1e-28 * m.mean * m.mean) throw DegenerateError("sample_moments: zero variance");
  m.g1 = m.m3 / std::pow(m.m2, 1.5);
  m.g2 = m.m4 / (m.m2 * m.m2) - 3.0;
  return m;
}

/// Two-sided standard normal tail probability of |z|.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

struct ZTest {
  double z = 0.0;
  double p = 1.0;
};

/// D'Agostino's skewness test: sqrt(b1) standardized by its null variance and
/// mapped through Johnson's S_U (asinh) transformation to an approximate N(0,1).
inline ZTest skew_test_from_g1(double g1, std::size_t n_count) {
  if (n_count < kSkewTestMinN) throw PreconditionError("skew_test: need n >= 8");
  const double n = static_cast<double>(n_count);
  const double y = g1 * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  const double z = delta * std::asinh(y / alpha);
  return {z, normal_two_sided_p(z)};
}

inline ZTest skew_test(std::span<const double> x) {
  if (x.size() < kSkewTestMinN) throw PreconditionError("skew_test: need n >= 8");
  return skew_test_from_g1(sample_moments(x).g1, x.size());
}

/// Anscombe-Glynn kurtosis test: b2 standardized by its exact null mean
/// 3(n-1)/(n+1) and variance, then a cube-root (Wilson-Hilferty type)
/// transformation fitted to the third moment of b2.
inline ZTest kurtosis_test_from_b2(double b2, std::size_t n_count) {
  if (n_count < kKurtosisTestMinN) throw PreconditionError("kurtosis_test: need n >= 5");
  const double n = static_cast<double>(n_count);
  const double mean = 3.0 * (n - 1.0) / (n + 1.0);
  const double var = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - mean) / std::sqrt(var);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  // denom == 0 only for b2 exactly on the pole of the transform; treat as an extreme value.
  const double term2 = denom == 0.0 ? -std::numeric_limits<double>::infinity()
                                    : std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  const double z = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
  return {z, normal_two_sided_p(z)};
}

inline ZTest kurtosis_test(std::span<const double> x) {
  if (x.size() < kKurtosisTestMinN) throw PreconditionError("kurtosis_test: need n >= 5");
  const Moments m = sample_moments(x);
  return kurtosis_test_from_b2(m.g2 + 3.0, x.size());
}

struct OmnibusTest {
  double k2 = 0.0;
  double p = 1.0;
};

/// K2 = Z_skew^2 + Z_kurt^2; p from the chi-square(2) survival exp(-K2/2).
inline OmnibusTest omnibus_from_z(double z_skew, double z_kurt) {
  const double k2 = z_skew * z_skew + z_kurt * z_kurt;
  return {k2, std::exp(-k2 / 2.0)};
}

inline OmnibusTest omnibus_test(std::span<const double> x) {
  const ZTest s = skew_test(x);
  const ZTest k = kurtosis_test(x);
  return omnibus_from_z(s.z, k.z);
}

/// Every statistic for one sample in one pass over the data.
struct NormalityStats {
  Moments moments;
  ZTest skew;
  ZTest kurt;
  OmnibusTest omnibus;
};

inline NormalityStats normality_stats(std::span<const double> x) {
  if (x.size() < kSkewTestMinN) throw PreconditionError("normality tests need n >= 8");
  NormalityStats s;
  s.moments = sample_moments(x);
  s.skew = skew_test_from_g1(s.moments.g1, x.size());
  s.kurt = kurtosis_test_from_b2(s.moments.g2 + 3.0, x.size());
  s.omnibus = omnibus_from_z(s.skew.z, s.kurt.z);
  return s;
}

// ---------------------------------------------------------------------------

struct BulkDistribution {
  std::string bulk_id;
  Split split = Split::train;
  std::size_t n = 0;
  double y_bm = std::numeric_limits<double>::quiet_NaN();
  /// Too few subsamples for the tests; statistics below are NaN.
  bool undersized = false;
  /// Enough for the tests but below the recommended size for the kurtosis test.
  bool small_sample_warning = false;
  double g1 = std::numeric_limits<double>::quiet_NaN();
  double z_skew = std::numeric_limits<double>::quiet_NaN();
  double p_skew = std::numeric_limits<double>::quiet_NaN();
  double g2 = std::numeric_limits<double>::quiet_NaN();
  double z_kurt = std::numeric_limits<double>::quiet_NaN();
  double p_kurt = std::numeric_limits<double>::quiet_NaN();
  double k2 = std::numeric_limits<double>::quiet_NaN();
  double p_omnibus = std::numeric_limits<double>::quiet_NaN();
};

using DistributionReport = std::vector<BulkDistribution>;

/// Groups the ensemble subsample predictions of one split view by bulk and
/// runs all moments and tests per bulk. Rows are ordered by bulk_id.
/// Bulks with fewer than 8 subsamples (or zero variance) are flagged, not fatal.
inline DistributionReport per_bulk_report(const std::vector<ViewRow>& view, Split split, const ReferenceTable& table,
                                          unsigned threads = 1) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : view) groups[r.bulk_id].push_back(r.yhat);
  DistributionReport out;
  std::vector<const std::vector<double>*> values;
  for (const auto& [id, v] : groups) {
    BulkDistribution d;
    d.bulk_id = id;
    d.split = split;
    d.n = v.size();
    d.y_bm = table.at(id);
    out.push_back(d);
    values.push_back(&v);
  }
  parallel_for(out.size(), threads, [&](std::size_t i) {
    BulkDistribution& d = out[i];
    if (d.n < kSkewTestMinN) {
      d.undersized = true;
      return;
    }
    NormalityStats s;
    try {
      s = normality_stats(*values[i]);
    } catch (const DegenerateError&) {
      d.undersized = true;
      return;
    }
    d.small_sample_warning = d.n < kKurtosisTestWarnN;
    d.g1 = s.moments.g1;
    d.z_skew = s.skew.z;
    d.p_skew = s.skew.p;
    d.g2 = s.moments.g2;
    d.z_kurt = s.kurt.z;
    d.p_kurt = s.kurt.p;
    d.k2 = s.omnibus.k2;
    d.p_omnibus = s.omnibus.p;
  });
  return out;
}

/// CSV `bulk_id,split,n,y_bm,g1,z_skew,p_skew,g2,z_kurt,p_kurt,k2,p_omnibus`;
/// statistics of flagged bulks are left empty.
inline std::string distribution_to_csv(const DistributionReport& rows) {
  std::string out = "bulk_id,split,n,y_bm,g1,z_skew,p_skew,g2,z_kurt,p_kurt,k2,p_omnibus\n";
  auto num = [](double v) { return std::isfinite(v) ? format_number(v) : std::string(); };
  for (const auto& d : rows) {
    out += d.bulk_id + "," + std::string(to_string(d.split)) + "," + std::to_string(d.n) + "," + num(d.y_bm);
    for (double v : {d.g1, d.z_skew, d.p_skew, d.g2, d.z_kurt, d.p_kurt, d.k2, d.p_omnibus}) out += "," + num(v);
    out += '\n';
  }
  return out;
}

/// Fraction of tested (non-flagged) bulks whose omnibus p-value is below alpha.
inline double omnibus_rejection_rate(const DistributionReport& rows, double alpha) {
  std::size_t tested = 0, rejected = 0;
  for (const auto& d : rows) {
    if (d.undersized) continue;
    ++tested;
    rejected += d.p_omnibus < alpha;
  }
  return tested == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(rejected) / static_cast<double>(tested);
}

}  // namespace chemocal
