#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemocal/dataset.hpp"
#include "chemocal/error.hpp"
#include "chemocal/json_io.hpp"

namespace chemocal {

inline void check_pair(std::span<const double> y, std::span<const double> yhat, const char* what) {
  if (y.size() != yhat.size()) throw PreconditionError(std::string(what) + ": length mismatch");
  if (y.empty()) throw PreconditionError(std::string(what) + ": empty input");
}

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "rmse");
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return std::sqrt(ss / static_cast<double>(y.size()));
}

template <typename T>
double acc(std::span<const T> y, std::span<const T> yhat) {
  if (y.size() != yhat.size()) throw PreconditionError("acc: length mismatch");
  if (y.empty()) throw PreconditionError("acc: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] == yhat[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

inline double acc(const std::vector<int>& y, const std::vector<int>& yhat) {
  return acc<int>(std::span<const int>(y), std::span<const int>(yhat));
}

enum class FitLevel { bm, ss, bulk };

inline std::string_view to_string(FitLevel l) {
  switch (l) {
    case FitLevel::bm: return "bm";
    case FitLevel::ss: return "ss";
    case FitLevel::bulk: return "bulk";
  }
  return "?";
}

/// y = bias + scale * yhat + residual, fitted by ordinary least squares.
struct LinearFit {
  double bias = 0.0;
  double scale = 1.0;
  std::vector<double> residuals;
  /// Residual standard error with n-2 degrees of freedom; NaN when n < 3.
  double syx = std::numeric_limits<double>::quiet_NaN();
  std::optional<Split> source_split;
  FitLevel level = FitLevel::bm;

  std::size_t n() const { return residuals.size(); }
  double sse() const {
    double s = 0.0;
    for (double e : residuals) s += e * e;
    return s;
  }
};

/// Closed-form least squares of y on [1, yhat]. Solved in centered form
/// (slope = cov/var, intercept backed out from the means), which equals
/// (Yhat^T Yhat)^-1 Yhat^T y in exact arithmetic.
inline LinearFit ols_fit(std::span<const double> yhat, std::span<const double> y,
                         std::optional<Split> source = std::nullopt, FitLevel level = FitLevel::bm) {
  check_pair(y, yhat, "ols_fit");
  const std::size_t n = y.size();
  if (n < 2) throw PreconditionError("ols_fit: need at least 2 points");
  double mx = 0.0, my = 0.0, amax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += yhat[i];
    my += y[i];
    amax = std::max(amax, std::abs(yhat[i]));
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = yhat[i] - mx;
    sxx += dx * dx;
    sxy += dx * (y[i] - my);
  }
  const double floor = static_cast<double>(n) * std::pow(1e-14 * amax, 2);
  if (!(sxx > floor)) throw DegenerateError("ols_fit: predictions are constant (singular normal equations)");
  LinearFit fit;
  fit.scale = sxy / sxx;
  fit.bias = my - fit.scale * mx;
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) fit.residuals[i] = y[i] - (yhat[i] * fit.scale + fit.bias);
  if (n >= 3) fit.syx = std::sqrt(fit.sse() / static_cast<double>(n - 2));
  fit.source_split = source;
  fit.level = level;
  return fit;
}

/// sqrt(sum (y - (yhat*scale + bias))^2 / (n-2)) with the OLS parameters of the same data.
inline double syx(std::span<const double> y, std::span<const double> yhat) {
  check_pair(y, yhat, "syx");
  if (y.size() < 3) throw PreconditionError("syx: need n >= 3 (n-2 degrees of freedom)");
  return ols_fit(yhat, y).syx;
}

/// yhat * scale + bias. Parameters fitted on the test split are rejected.
inline std::vector<double> apply_correction(std::span<const double> yhat, const LinearFit& fit) {
  if (!fit.source_split) throw PreconditionError("apply_correction: fit has no source split");
  if (*fit.source_split == Split::test) throw LeakageError("apply_correction: correction parameters fitted on the test split");
  std::vector<double> out(yhat.size());
  for (std::size_t i = 0; i < yhat.size(); ++i) out[i] = yhat[i] * fit.scale + fit.bias;
  return out;
}

// ---------------------------------------------------------------------------

/// Reference/prediction pairs of one split at one aggregation level.
struct LevelData {
  std::vector<double> y;
  std::vector<double> yhat;
};

struct SplitInputs {
  LevelData bm;
  std::optional<LevelData> ss;
};

struct LevelSummary {
  std::size_t n = 0;
  double rmse = 0.0;
  double syx = std::numeric_limits<double>::quiet_NaN();
  double bias = 0.0;
  double scale = 1.0;
};

inline LevelSummary summarize(const LevelData& d) {
  LevelSummary s;
  s.n = d.y.size();
  s.rmse = rmse(d.y, d.yhat);
  if (s.n < 2) {
    // A single point has RMSE but no regression line.
    s.bias = s.scale = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const LinearFit fit = ols_fit(d.yhat, d.y);
  s.syx = fit.syx;
  s.bias = fit.bias;
  s.scale = fit.scale;
  return s;
}

enum class CorrectionSource { train, val, both };

struct CorrectedTest {
  Split source = Split::train;
  double bias = 0.0;
  double scale = 1.0;
  double rmse_before = 0.0;
  double rmse_after = 0.0;
  std::vector<double> corrected;
};

struct CorrectionReport {
  std::map<Split, LevelSummary> bm;
  std::map<Split, LevelSummary> ss;
  std::vector<CorrectedTest> corrected_test;
};

/// Bulk-mean (and optionally subsample-level) RMSE, sYX and OLS parameters per
/// split, plus the test split corrected with train- and/or val-sourced
/// parameters. Test-fitted parameters are reported but never applied.
inline CorrectionReport correction_report(const std::map<Split, SplitInputs>& splits,
                                          CorrectionSource source = CorrectionSource::both) {
  for (Split s : {Split::train, Split::val, Split::test})
    if (!splits.contains(s)) throw PreconditionError("correction_report: missing split '" + std::string(to_string(s)) + "'");
  CorrectionReport r;
  for (const auto& [split, in] : splits) {
    r.bm[split] = summarize(in.bm);
    if (in.ss) r.ss[split] = summarize(*in.ss);
  }
  const LevelData& test = splits.at(Split::test).bm;
  std::vector<Split> sources;
  if (source != CorrectionSource::val) sources.push_back(Split::train);
  if (source != CorrectionSource::train) sources.push_back(Split::val);
  for (Split src : sources) {
    const LevelData& fit_data = splits.at(src).bm;
    const LinearFit fit = ols_fit(fit_data.yhat, fit_data.y, src, FitLevel::bm);
    CorrectedTest c;
    c.source = src;
    c.bias = fit.bias;
    c.scale = fit.scale;
    c.corrected = apply_correction(test.yhat, fit);
    c.rmse_before = rmse(test.y, test.yhat);
    c.rmse_after = rmse(test.y, c.corrected);
    r.corrected_test.push_back(std::move(c));
  }
  return r;
}

inline Json summary_to_json(const LevelSummary& s) {
  Json j;
  j["rmse"] = s.rmse;
  j["syx"] = s.syx;
  j["bias"] = s.bias;
  j["scale"] = s.scale;
  j["n"] = s.n;
  // Inverse relation for plotting yhat against y: yhat = (y - bias) / scale.
  j["plot_line"] = Json{{"intercept", -s.bias / s.scale}, {"slope", 1.0 / s.scale}};
  return j;
}

inline Json report_to_json(const CorrectionReport& r) {
  Json j;
  Json bm, ss;
  for (const auto& [split, s] : r.bm) bm[std::string(to_string(split))] = summary_to_json(s);
  for (const auto& [split, s] : r.ss) ss[std::string(to_string(split))] = summary_to_json(s);
  j["bm"] = bm;
  if (!r.ss.empty()) j["ss"] = ss;
  Json corrected = Json::array();
  for (const auto& c : r.corrected_test) {
    corrected.push_back(Json{{"source", std::string(to_string(c.source))},
                             {"bias", c.bias},
                             {"scale", c.scale},
                             {"rmse_before", c.rmse_before},
                             {"rmse_after", c.rmse_after}});
  }
  j["corrected_test"] = corrected;
  return j;
}

}  // namespace chemocal
