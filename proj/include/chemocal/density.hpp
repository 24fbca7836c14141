#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "chemocal/correct.hpp"
#include "chemocal/csv.hpp"
#include "chemocal/error.hpp"
#include "chemocal/stats.hpp"
#include "chemocal/json_io.hpp"

namespace chemocal {

enum class DensityMetric { rmse, acc };

inline std::string_view to_string(DensityMetric m) { return m == DensityMetric::rmse ? "rmse" : "acc"; }

/// Rows shared by all constituents: density and reference per row, and one
/// prediction vector per constituent.
struct DensityInput {
  std::vector<double> density;
  std::vector<double> y;
  std::vector<std::vector<double>> yhat;  // [constituent][row]

  void validate() const {
    if (density.empty()) throw PreconditionError("density: no rows");
    if (y.size() != density.size()) throw PreconditionError("density: reference count differs from row count");
    if (yhat.empty()) throw PreconditionError("density: need at least one constituent");
    for (const auto& p : yhat)
      if (p.size() != density.size()) throw PreconditionError("density: constituent prediction count differs from row count");
  }
};

inline constexpr int kDensityGridLo = 2;   // 0.10 = 2/20
inline constexpr int kDensityGridHi = 20;  // 1.00 = 20/20
inline constexpr int kDensityGridDen = 20; // step 0.05
inline constexpr std::size_t kMinRowsPerPoint = 5;

inline double density_edge(int k) { return static_cast<double>(k) / kDensityGridDen; }

struct DensityPoint {
  double lo = 0.0;  // bin lower edge, or the minimum density of a cumulative point
  double hi = 0.0;  // bin upper edge; equals 1.0 for cumulative points
  std::size_t count = 0;
  bool present = false;
  bool low_count = false;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sem = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_constituent;
};

struct DensitySweep {
  DensityMetric metric = DensityMetric::rmse;
  std::vector<DensityPoint> bins;
  std::vector<DensityPoint> cumulative;
};

inline double metric_on(DensityMetric metric, const std::vector<double>& y, const std::vector<double>& yhat,
                        const std::vector<std::size_t>& rows) {
  if (metric == DensityMetric::rmse) {
    double ss = 0.0;
    for (std::size_t i : rows) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return std::sqrt(ss / static_cast<double>(rows.size()));
  }
  std::size_t hits = 0;
  for (std::size_t i : rows) hits += std::lround(y[i]) == std::lround(yhat[i]);
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

/// Metric over `rows` per constituent, then mean and SEM (std n-1 / sqrt K)
/// across constituents. SEM is 0 with a single constituent.
inline DensityPoint aggregate_point(const DensityInput& in, DensityMetric metric, const std::vector<std::size_t>& rows) {
  DensityPoint p;
  p.count = rows.size();
  p.low_count = rows.size() < kMinRowsPerPoint;
  if (rows.empty()) return p;
  p.present = true;
  for (const auto& yhat : in.yhat) p.per_constituent.push_back(metric_on(metric, in.y, yhat, rows));
  const MeanSem ms = mean_sem(p.per_constituent);
  p.mean = ms.mean;
  p.sem = p.per_constituent.size() < 2 ? 0.0 : ms.sem;
  return p;
}

/// Index of the 0.05-wide bin over [0.1, 1.0] holding `d`; bins are half-open
/// on the right except the last, which is closed at 1.0. -1 outside the range.
inline int density_bin(double d) {
  if (d < density_edge(kDensityGridLo) || d > density_edge(kDensityGridHi)) return -1;
  for (int k = kDensityGridLo; k < kDensityGridHi - 1; ++k)
    if (d < density_edge(k + 1)) return k - kDensityGridLo;
  return kDensityGridHi - 1 - kDensityGridLo;
}

inline std::vector<DensityPoint> binned_metric(const DensityInput& in, DensityMetric metric) {
  in.validate();
  const int nbins = kDensityGridHi - kDensityGridLo;
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(nbins));
  for (std::size_t i = 0; i < in.density.size(); ++i) {
    const int b = density_bin(in.density[i]);
    if (b >= 0) members[static_cast<std::size_t>(b)].push_back(i);
  }
  std::vector<DensityPoint> out;
  for (int b = 0; b < nbins; ++b) {
    DensityPoint p = aggregate_point(in, metric, members[static_cast<std::size_t>(b)]);
    p.lo = density_edge(kDensityGridLo + b);
    p.hi = density_edge(kDensityGridLo + b + 1);
    out.push_back(std::move(p));
  }
  return out;
}

/// For each minimum density d on the 0.05 grid from 0.10 to 1.00, the metric
/// over rows with density >= d. Points with no rows are marked absent.
inline std::vector<DensityPoint> cumulative_metric(const DensityInput& in, DensityMetric metric) {
  in.validate();
  std::vector<DensityPoint> out;
  for (int k = kDensityGridLo; k <= kDensityGridHi; ++k) {
    const double d = density_edge(k);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < in.density.size(); ++i)
      if (in.density[i] >= d) rows.push_back(i);
    DensityPoint p = aggregate_point(in, metric, rows);
    p.lo = d;
    p.hi = 1.0;
    out.push_back(std::move(p));
  }
  return out;
}

inline DensitySweep density_sweep(const DensityInput& in, DensityMetric metric) {
  return {metric, binned_metric(in, metric), cumulative_metric(in, metric)};
}

struct ClassifierDensityReport {
  DensitySweep sweep;
  /// Accuracy in the lowest-density bin holding any rows.
  double lowest_bin_acc = std::numeric_limits<double>::quiet_NaN();
  double lowest_bin_lo = std::numeric_limits<double>::quiet_NaN();
};

inline ClassifierDensityReport classifier_density_report(const DensityInput& in) {
  ClassifierDensityReport r;
  r.sweep = density_sweep(in, DensityMetric::acc);
  for (const auto& b : r.sweep.bins) {
    if (!b.present) continue;
    r.lowest_bin_acc = b.mean;
    r.lowest_bin_lo = b.lo;
    break;
  }
  return r;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("spearman: need two equal-length samples of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n, my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (!(sxx > 0.0 && syy > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman correlation between bin midpoint and metric over the present bins.
inline double bin_trend(const std::vector<DensityPoint>& bins) {
  std::vector<double> mid, val;
  for (const auto& b : bins) {
    if (!b.present) continue;
    mid.push_back((b.lo + b.hi) / 2.0);
    val.push_back(b.mean);
  }
  return mid.size() < 2 ? std::numeric_limits<double>::quiet_NaN() : spearman(mid, val);
}

inline std::string bins_to_csv(const std::vector<DensityPoint>& bins) {
  std::string out = "bin_lo,bin_hi,count,metric_mean,metric_sem,low_count\n";
  for (const auto& p : bins) {
    out += format_number(p.lo) + "," + format_number(p.hi) + "," + std::to_string(p.count) + ",";
    if (p.present) out += format_number(p.mean) + "," + format_number(p.sem);
    else out += ",";
    out += p.low_count ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::string cumulative_to_csv(const std::vector<DensityPoint>& curve) {
  std::string out = "min_density,count,metric_mean,metric_sem,low_count\n";
  for (const auto& p : curve) {
    out += format_number(p.lo) + "," + std::to_string(p.count) + ",";
    if (p.present) out += format_number(p.mean) + "," + format_number(p.sem);
    else out += ",";
    out += p.low_count ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace chemocal
