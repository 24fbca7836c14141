#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "chemocal/error.hpp"
#include "chemocal/json_io.hpp"

namespace chemocal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Standard normal variate: (x - mean) / sample std (divisor n-1).
inline Vector snv(const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 2) throw PreconditionError("snv: need at least 2 bands");
  const Eigen::ArrayXd d = x.array() - x.mean();
  const Eigen::ArrayXd c = d - d.mean();
  const double sd = std::sqrt(c.square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateError("snv: zero variance spectrum");
  return c / sd;
}

inline void validate_savgol(int window, int polyorder, int derivorder) {
  if (window < 1 || window % 2 == 0) throw PreconditionError("savgol: window must be odd and positive");
  if (polyorder < 0 || polyorder >= window) throw PreconditionError("savgol: need 0 <= polyorder < window");
  if (derivorder < 0 || derivorder > polyorder) throw PreconditionError("savgol: need 0 <= derivorder <= polyorder");
}

/// Weights w such that sum_j w[j] * x[j] over a window of `window` samples is
/// the `derivorder`-th derivative, at sample `pos` of the window, of the
/// least-squares polynomial of degree `polyorder` (unit sample spacing).
inline Vector savgol_coefficients(int window, int polyorder, int derivorder, int pos) {
  validate_savgol(window, polyorder, derivorder);
  if (pos < 0 || pos >= window) throw PreconditionError("savgol: evaluation position outside window");
  Matrix vander(window, polyorder + 1);
  for (int j = 0; j < window; ++j) {
    const double x = static_cast<double>(j - pos);
    double p = 1.0;
    for (int k = 0; k <= polyorder; ++k) {
      vander(j, k) = p;
      p *= x;
    }
  }
  // Row `derivorder` of the pseudo-inverse, scaled by derivorder!.
  const Matrix pinv = vander.colPivHouseholderQr().solve(Matrix::Identity(window, window));
  double factorial = 1.0;
  for (int k = 2; k <= derivorder; ++k) factorial *= k;
  return factorial * pinv.row(derivorder).transpose();
}

/// Savitzky-Golay smoothing/derivative with output length equal to input
/// length. Interior points use the centered window; the first and last
/// window/2 points use the outermost full window evaluated off-center.
class SavGolFilter {
 public:
  SavGolFilter(int window, int polyorder, int derivorder)
      : window_(window), polyorder_(polyorder), derivorder_(derivorder) {
    validate_savgol(window, polyorder, derivorder);
    for (int pos = 0; pos < window; ++pos) weights_.push_back(savgol_coefficients(window, polyorder, derivorder, pos));
  }

  Vector operator()(const Vector& x) const {
    const int n = static_cast<int>(x.size());
    if (n < window_) throw PreconditionError("savgol: spectrum shorter than window");
    const int half = window_ / 2;
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      int start, pos;
      if (i < half) {
        start = 0;
        pos = i;
      } else if (i >= n - half) {
        start = n - window_;
        pos = i - start;
      } else {
        start = i - half;
        pos = half;
      }
      const Vector& w = weights_[static_cast<std::size_t>(pos)];
      double acc = 0.0;
      for (int j = 0; j < window_; ++j) acc += w[j] * x[start + j];
      y[i] = acc;
    }
    return y;
  }

  int window() const { return window_; }
  int polyorder() const { return polyorder_; }
  int derivorder() const { return derivorder_; }

 private:
  int window_, polyorder_, derivorder_;
  std::vector<Vector> weights_;
};

inline Vector savgol(const Vector& x, int window = 7, int polyorder = 2, int derivorder = 2) {
  return SavGolFilter(window, polyorder, derivorder)(x);
}

/// Training-set centering statistics. Applying them never recomputes anything
/// from the data being transformed.
struct CenterStats {
  Vector x_mean;
  Vector y_mean;
};

inline CenterStats fit_center(const Matrix& train, const Matrix& refs) {
  if (train.rows() < 1) throw PreconditionError("fit_center: empty training matrix");
  if (refs.rows() != train.rows()) throw PreconditionError("fit_center: reference count differs from row count");
  return {train.colwise().mean().transpose(), refs.colwise().mean().transpose()};
}

inline CenterStats fit_center(const Matrix& train, const Vector& refs) {
  return fit_center(train, Matrix(refs));
}

// ---------------------------------------------------------------------------

struct SnvStep {};
struct SavGolStep {
  int window = 7;
  int polyorder = 2;
  int derivorder = 2;
};
struct CenterXStep {
  std::optional<Vector> mean;
};
struct CenterYStep {
  std::optional<Vector> mean;
};
using PreprocStep = std::variant<SnvStep, SavGolStep, CenterXStep, CenterYStep>;

/// Ordered preprocessing steps. SNV and Savitzky-Golay act row-wise on
/// spectra; CenterX subtracts stored training column means; CenterY records
/// the training reference mean (applied by the model, not to X).
class PreprocPipeline {
 public:
  PreprocPipeline() = default;
  explicit PreprocPipeline(std::vector<PreprocStep> steps) : steps_(std::move(steps)) {
    for (const auto& s : steps_)
      if (auto* sg = std::get_if<SavGolStep>(&s)) validate_savgol(sg->window, sg->polyorder, sg->derivorder);
  }

  /// Named presets: "snv_sg" = SNV, SG(7,2,2), center X and Y;
  /// "center" = center X and Y; "none" = no preprocessing at all.
  static PreprocPipeline preset(const std::string& name) {
    if (name == "snv_sg") return PreprocPipeline({SnvStep{}, SavGolStep{7, 2, 2}, CenterXStep{}, CenterYStep{}});
    if (name == "center") return PreprocPipeline({CenterXStep{}, CenterYStep{}});
    if (name == "none") return PreprocPipeline(std::vector<PreprocStep>{});
    throw PreconditionError("unknown pipeline '" + name + "' (expected snv_sg, center or none)");
  }

  const std::vector<PreprocStep>& steps() const { return steps_; }

  bool fitted() const {
    for (const auto& s : steps_) {
      if (auto* c = std::get_if<CenterXStep>(&s); c && !c->mean) return false;
      if (auto* c = std::get_if<CenterYStep>(&s); c && !c->mean) return false;
    }
    return true;
  }

  bool centers_x() const { return has<CenterXStep>(); }
  bool centers_y() const { return has<CenterYStep>(); }

  /// Fits centering statistics on the row-transformed training data and
  /// returns the transformed, centered training matrix.
  Matrix fit_transform(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw PreconditionError("pipeline: X and Y row counts differ");
    Matrix out = x;
    for (auto& step : steps_) {
      std::visit(
          [&](auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CenterXStep>) {
              s.mean = fit_center(out, y).x_mean;
              out.rowwise() -= s.mean->transpose();
            } else if constexpr (std::is_same_v<T, CenterYStep>) {
              s.mean = fit_center(out, y).y_mean;
            } else {
              out = apply_rowwise(s, out);
            }
          },
          step);
    }
    return out;
  }

  Matrix apply(const Matrix& x) const {
    Matrix out = x;
    for (const auto& step : steps_) {
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, CenterXStep>) {
              if (!s.mean) throw PreconditionError("pipeline: CenterX applied before fit");
              if (s.mean->size() != out.cols()) throw PreconditionError("pipeline: band count mismatch");
              out.rowwise() -= s.mean->transpose();
            } else if constexpr (std::is_same_v<T, CenterYStep>) {
              if (!s.mean) throw PreconditionError("pipeline: CenterY applied before fit");
            } else {
              out = apply_rowwise(s, out);
            }
          },
          step);
    }
    return out;
  }

  /// Stored centering statistics, zero when the pipeline does not center.
  Vector x_mean(Eigen::Index bands) const { return stored<CenterXStep>().value_or(Vector::Zero(bands)); }
  Vector y_mean(Eigen::Index responses) const { return stored<CenterYStep>().value_or(Vector::Zero(responses)); }

  Json to_json() const {
    Json arr = Json::array();
    for (const auto& step : steps_) {
      Json j;
      std::visit(
          [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SnvStep>) {
              j["op"] = "snv";
            } else if constexpr (std::is_same_v<T, SavGolStep>) {
              j["op"] = "savgol";
              j["window"] = s.window;
              j["polyorder"] = s.polyorder;
              j["derivorder"] = s.derivorder;
            } else {
              j["op"] = std::is_same_v<T, CenterXStep> ? "center_x" : "center_y";
              if (s.mean) j["mean"] = std::vector<double>(s.mean->data(), s.mean->data() + s.mean->size());
            }
          },
          step);
      arr.push_back(std::move(j));
    }
    return Json{{"steps", arr}};
  }

  static PreprocPipeline from_json(const Json& j) {
    std::vector<PreprocStep> steps;
    for (const auto& s : j.at("steps")) {
      const auto op = s.at("op").get<std::string>();
      auto mean = [&]() -> std::optional<Vector> {
        if (!s.contains("mean")) return std::nullopt;
        const auto v = s.at("mean").get<std::vector<double>>();
        return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      };
      if (op == "snv") steps.emplace_back(SnvStep{});
      else if (op == "savgol")
        steps.emplace_back(SavGolStep{s.at("window").get<int>(), s.at("polyorder").get<int>(), s.at("derivorder").get<int>()});
      else if (op == "center_x") steps.emplace_back(CenterXStep{mean()});
      else if (op == "center_y") steps.emplace_back(CenterYStep{mean()});
      else throw FormatError("pipeline: unknown step '" + op + "'");
    }
    return PreprocPipeline(std::move(steps));
  }

 private:
  template <typename T>
  bool has() const {
    for (const auto& s : steps_)
      if (std::holds_alternative<T>(s)) return true;
    return false;
  }

  template <typename T>
  std::optional<Vector> stored() const {
    for (const auto& s : steps_)
      if (auto* c = std::get_if<T>(&s)) return c->mean;
    return std::nullopt;
  }

  static Matrix apply_rowwise(const SnvStep&, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = snv(x.row(r).transpose()).transpose();
    return out;
  }

  static Matrix apply_rowwise(const SavGolStep& s, const Matrix& x) {
    const SavGolFilter filter(s.window, s.polyorder, s.derivorder);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = filter(x.row(r).transpose()).transpose();
    return out;
  }

  std::vector<PreprocStep> steps_;
};

inline Matrix apply_pipeline(const PreprocPipeline& pipeline, const Matrix& x) { return pipeline.apply(x); }

}  // namespace chemocal
