#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chemocal/error.hpp"
#include "chemocal/json_io.hpp"
#include "chemocal/parallel.hpp"
#include "chemocal/specprep.hpp"

namespace chemocal {

enum class Task { regression, discriminant };

inline std::string_view to_string(Task t) { return t == Task::regression ? "regression" : "discriminant"; }

struct NipalsOptions {
  double tolerance = 1e-10;
  int max_iterations = 500;
};

/// Fitted latent-variable model. predict(X) = pipeline(X) * B + y_mean.
struct PlsModel {
  int n_components = 0;
  Matrix x_weights;     // b x A
  Matrix x_loadings;    // b x A
  Matrix y_loadings;    // m x A
  Matrix coefficients;  // b x m
  Vector x_mean;
  Vector y_mean;
  PreprocPipeline pipeline;
  Task task = Task::regression;
  /// Class label of each response column (discriminant models only).
  std::vector<int> classes;

  Eigen::Index bands() const { return coefficients.rows(); }
  Eigen::Index responses() const { return coefficients.cols(); }
};

namespace detail {

inline Matrix matrix_from_json(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(m.cols())) throw FormatError("model: ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// All NIPALS factors up to a maximum component count. Any prefix of the
/// factors defines a model, so one fit serves a whole component grid.
struct PlsPath {
  Matrix weights;   // W, b x A_eff
  Matrix loadings;  // P, b x A_eff
  Matrix y_loadings;  // Q, m x A_eff
  Matrix scores;    // T, n x A_eff
  Vector x_mean;
  Vector y_mean;
  PreprocPipeline pipeline;
  Task task = Task::regression;
  std::vector<int> classes;

  /// Number of components actually extracted. Less than requested when the
  /// deflated X carries no further covariance with Y.
  int effective() const { return static_cast<int>(weights.cols()); }

  /// B = W_a (P_a^T W_a)^-1 Q_a^T using the first min(a, effective) components.
  Matrix coefficients(int a) const {
    const Eigen::Index k = std::min(a, effective());
    if (k == 0) return Matrix::Zero(weights.rows(), y_loadings.rows());
    const Matrix w = weights.leftCols(k);
    const Matrix r = loadings.leftCols(k).transpose() * w;
    return w * r.partialPivLu().solve(y_loadings.leftCols(k).transpose());
  }

  PlsModel model(int a) const {
    const Eigen::Index k = std::min(a, effective());
    PlsModel m;
    m.n_components = a;
    m.x_weights = weights.leftCols(k);
    m.x_loadings = loadings.leftCols(k);
    m.y_loadings = y_loadings.leftCols(k);
    m.coefficients = coefficients(a);
    m.x_mean = x_mean;
    m.y_mean = y_mean;
    m.pipeline = pipeline;
    m.task = task;
    m.classes = classes;
    return m;
  }
};

/// NIPALS on already centered matrices. X is deflated every component; Y is
/// deflated only for multi-response fits. Weight sign is fixed so that the
/// largest-magnitude entry is positive.
inline void nipals(Matrix x, Matrix y, int components, const NipalsOptions& opt, PlsPath& path) {
  const Eigen::Index n = x.rows(), b = x.cols(), m = y.cols();
  path.weights.resize(b, 0);
  path.loadings.resize(b, 0);
  path.y_loadings.resize(m, 0);
  path.scores.resize(n, 0);
  std::vector<Vector> ws, ps, qs, ts;
  double reference_norm = 0.0;
  for (int a = 0; a < components; ++a) {
    Eigen::Index pick = 0;
    y.colwise().squaredNorm().maxCoeff(&pick);
    Vector u = y.col(pick);
    if (!(u.squaredNorm() > 0.0)) break;
    if (m > 1) {
      // Start at the fixed point: the dominant left singular vector of X'Y.
      const Matrix cross = x.transpose() * y;
      Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeThinU);
      if (svd.singularValues()(0) > 0.0) u = y * (cross.transpose() * svd.matrixU().col(0));
    }
    Vector w, t, q, w_old;
    bool converged = false;
    bool exhausted = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      w = x.transpose() * u;
      const double norm = w.norm();
      if (a == 0 && it == 0) reference_norm = norm;
      if (!(norm > 1e-10 * reference_norm) || !(norm > 0.0)) {
        exhausted = true;
        break;
      }
      w /= norm;
      t = x * w;
      const double tt = t.squaredNorm();
      if (!(tt > 0.0)) {
        exhausted = true;
        break;
      }
      q = y.transpose() * t / tt;
      if (m == 1) {
        converged = true;
        break;
      }
      u = y * q / q.squaredNorm();
      if (w_old.size() != 0 && (w - w_old).norm() < opt.tolerance) {
        converged = true;
        break;
      }
      w_old = w;
    }
    if (exhausted) {
      if (a == 0) throw DegenerateError("pls: X has no variance (or no covariance with Y) after preprocessing");
      break;
    }
    if (!converged) throw ConvergenceError("pls: NIPALS did not converge within " + std::to_string(opt.max_iterations) +
                                           " iterations at component " + std::to_string(a + 1));
    Eigen::Index big = 0;
    w.cwiseAbs().maxCoeff(&big);
    if (w[big] < 0.0) {
      w = -w;
      t = -t;
      q = -q;
    }
    const double tt = t.squaredNorm();
    Vector p = x.transpose() * t / tt;
    x.noalias() -= t * p.transpose();
    if (m > 1) y.noalias() -= t * q.transpose();
    ws.push_back(std::move(w));
    ps.push_back(std::move(p));
    qs.push_back(std::move(q));
    ts.push_back(std::move(t));
  }
  const auto k = static_cast<Eigen::Index>(ws.size());
  path.weights.resize(b, k);
  path.loadings.resize(b, k);
  path.y_loadings.resize(m, k);
  path.scores.resize(n, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    path.weights.col(i) = ws[static_cast<std::size_t>(i)];
    path.loadings.col(i) = ps[static_cast<std::size_t>(i)];
    path.y_loadings.col(i) = qs[static_cast<std::size_t>(i)];
    path.scores.col(i) = ts[static_cast<std::size_t>(i)];
  }
}

inline void check_component_count(int components, Eigen::Index n, Eigen::Index b) {
  if (components < 1) throw PreconditionError("pls: need at least one component");
  const Eigen::Index cap = std::min(n - 1, b);
  if (components > cap) {
    throw PreconditionError("pls: " + std::to_string(components) + " components exceeds min(n-1, b) = " + std::to_string(cap));
  }
}

inline PlsPath fit_pls_path(const Matrix& x, const Matrix& y, int components,
                            PreprocPipeline pipeline = PreprocPipeline::preset("center"),
                            const NipalsOptions& opt = {}) {
  if (x.rows() < 2) throw PreconditionError("pls: need at least 2 samples");
  if (y.rows() != x.rows()) throw PreconditionError("pls: X and Y row counts differ");
  if (y.cols() < 1) throw PreconditionError("pls: Y has no columns");
  if (!x.allFinite() || !y.allFinite()) throw PreconditionError("pls: non-finite input");
  check_component_count(components, x.rows(), x.cols());
  PlsPath path;
  const Matrix xt = pipeline.fit_transform(x, y);
  path.x_mean = pipeline.x_mean(x.cols());
  path.y_mean = pipeline.y_mean(y.cols());
  Matrix yc = y;
  yc.rowwise() -= path.y_mean.transpose();
  path.pipeline = std::move(pipeline);
  nipals(xt, yc, components, opt, path);
  return path;
}

inline PlsModel fit_pls(const Matrix& x, const Matrix& y, int components,
                        PreprocPipeline pipeline = PreprocPipeline::preset("center"), const NipalsOptions& opt = {}) {
  return fit_pls_path(x, y, components, std::move(pipeline), opt).model(components);
}

inline PlsModel fit_pls(const Matrix& x, const Vector& y, int components,
                        PreprocPipeline pipeline = PreprocPipeline::preset("center"), const NipalsOptions& opt = {}) {
  return fit_pls(x, Matrix(y), components, std::move(pipeline), opt);
}

inline Matrix predict(const PlsModel& model, const Matrix& x) {
  if (x.cols() != model.bands()) {
    throw PreconditionError("predict: model expects " + std::to_string(model.bands()) + " bands, got " + std::to_string(x.cols()));
  }
  if (!model.pipeline.fitted()) throw PreconditionError("predict: model pipeline is not fitted");
  Matrix out = model.pipeline.apply(x) * model.coefficients;
  out.rowwise() += model.y_mean.transpose();
  return out;
}

/// Responses of `x` for every component count 1..coefficients.size().
inline std::vector<Matrix> predict_path(const PlsPath& path, const Matrix& x, const std::vector<int>& grid) {
  const Matrix xt = path.pipeline.apply(x);
  std::vector<Matrix> out;
  out.reserve(grid.size());
  for (int a : grid) {
    Matrix yhat = xt * path.coefficients(a);
    yhat.rowwise() += path.y_mean.transpose();
    out.push_back(std::move(yhat));
  }
  return out;
}

/// Argmax over response columns; ties go to the lowest column.
inline std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

inline std::vector<int> classify(const PlsModel& model, const Matrix& x) {
  if (model.task != Task::discriminant) throw PreconditionError("classify: model is not discriminant");
  std::vector<int> cols = argmax_rows(predict(model, x));
  for (int& c : cols) c = model.classes[static_cast<std::size_t>(c)];
  return cols;
}

/// One-hot indicator matrix over the sorted distinct labels.
inline Matrix one_hot(const std::vector<int>& labels, std::vector<int>& classes) {
  classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto col = std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin();
    y(static_cast<Eigen::Index>(i), col) = 1.0;
  }
  return y;
}

inline PlsPath fit_plsda_path(const Matrix& x, const std::vector<int>& labels, int components,
                              PreprocPipeline pipeline = PreprocPipeline::preset("center"), const NipalsOptions& opt = {}) {
  if (labels.size() != static_cast<std::size_t>(x.rows())) throw PreconditionError("plsda: label count differs from row count");
  std::vector<int> classes;
  const Matrix y = one_hot(labels, classes);
  if (classes.size() < 2) throw PreconditionError("plsda: need at least two classes");
  PlsPath path = fit_pls_path(x, y, components, std::move(pipeline), opt);
  path.task = Task::discriminant;
  path.classes = std::move(classes);
  return path;
}

inline PlsModel fit_plsda(const Matrix& x, const std::vector<int>& labels, int components,
                          PreprocPipeline pipeline = PreprocPipeline::preset("center"), const NipalsOptions& opt = {}) {
  return fit_plsda_path(x, labels, components, std::move(pipeline), opt).model(components);
}

inline double matrix_rmse(const Matrix& y, const Matrix& yhat) {
  return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

struct ComponentScore {
  int components = 0;
  double score = 0.0;  // mean validation RMSE (regression) or accuracy (discriminant)
};

/// Cross-validated choice of component count. `fold_of_row` assigns each row
/// to a validation fold in [0, K); rows with fold -1 are always training.
/// Regression minimizes mean validation RMSE, discriminant maximizes mean
/// accuracy; ties go to the smallest count.
inline int select_components(const Matrix& x, const Matrix& y, const std::vector<int>& fold_of_row, int folds,
                             std::vector<int> grid, Task task = Task::regression,
                             const std::string& pipeline = "center", unsigned threads = 1,
                             std::vector<ComponentScore>* scores = nullptr) {
  if (grid.empty()) throw PreconditionError("select_components: empty grid");
  if (fold_of_row.size() != static_cast<std::size_t>(x.rows())) throw PreconditionError("select_components: fold vector length");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<std::vector<double>> fold_scores(static_cast<std::size_t>(folds));
  parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t k) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i)
      (fold_of_row[i] == static_cast<int>(k) ? va : tr).push_back(static_cast<Eigen::Index>(i));
    if (va.empty()) throw PreconditionError("select_components: fold " + std::to_string(k) + " is empty");
    const Matrix xtr = x(tr, Eigen::all), ytr = y(tr, Eigen::all), xva = x(va, Eigen::all), yva = y(va, Eigen::all);
    check_component_count(grid.back(), xtr.rows(), xtr.cols());
    const PlsPath path = fit_pls_path(xtr, ytr, grid.back(), PreprocPipeline::preset(pipeline));
    const auto preds = predict_path(path, xva, grid);
    auto& out = fold_scores[k];
    for (const auto& p : preds) {
      if (task == Task::discriminant) {
        const auto want = argmax_rows(yva), got = argmax_rows(p);
        std::size_t hit = 0;
        for (std::size_t i = 0; i < want.size(); ++i) hit += want[i] == got[i];
        out.push_back(static_cast<double>(hit) / static_cast<double>(want.size()));
      } else {
        out.push_back(matrix_rmse(yva, p));
      }
    }
  });
  int best = grid.front();
  double best_score = task == Task::discriminant ? -1.0 : std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0;
    for (const auto& f : fold_scores) mean += f[g];
    mean /= static_cast<double>(folds);
    if (scores) scores->push_back({grid[g], mean});
    const bool better = task == Task::discriminant ? mean > best_score : mean < best_score;
    if (better) {
      best_score = mean;
      best = grid[g];
    }
  }
  return best;
}

/// Row-interleaved folds (row i in fold i mod K) for plain row-level CV.
inline std::vector<int> interleaved_folds(Eigen::Index rows, int folds) {
  std::vector<int> f(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return f;
}

inline Json model_to_json(const PlsModel& m) {
  Json j;
  j["task"] = std::string(to_string(m.task));
  j["n_components"] = m.n_components;
  j["bands"] = m.bands();
  j["responses"] = m.responses();
  if (m.task == Task::discriminant) j["classes"] = m.classes;
  j["pipeline"] = m.pipeline.to_json();
  j["x_mean"] = detail::vector_to_json(m.x_mean);
  j["y_mean"] = detail::vector_to_json(m.y_mean);
  j["x_weights"] = detail::matrix_to_json(m.x_weights);
  j["x_loadings"] = detail::matrix_to_json(m.x_loadings);
  j["y_loadings"] = detail::matrix_to_json(m.y_loadings);
  j["coefficients"] = detail::matrix_to_json(m.coefficients);
  return j;
}

inline PlsModel model_from_json(const Json& j) {
  try {
    PlsModel m;
    m.task = j.at("task").get<std::string>() == "discriminant" ? Task::discriminant : Task::regression;
    m.n_components = j.at("n_components").get<int>();
    if (j.contains("classes")) m.classes = j.at("classes").get<std::vector<int>>();
    m.pipeline = PreprocPipeline::from_json(j.at("pipeline"));
    m.x_mean = detail::vector_from_json(j.at("x_mean"));
    m.y_mean = detail::vector_from_json(j.at("y_mean"));
    m.x_weights = detail::matrix_from_json(j.at("x_weights"));
    m.x_loadings = detail::matrix_from_json(j.at("x_loadings"));
    m.y_loadings = detail::matrix_from_json(j.at("y_loadings"));
    m.coefficients = detail::matrix_from_json(j.at("coefficients"));
    const auto bands = j.at("bands").get<Eigen::Index>(), responses = j.at("responses").get<Eigen::Index>();
    if (m.coefficients.rows() != bands || m.coefficients.cols() != responses || m.y_mean.size() != responses ||
        m.x_mean.size() != bands) {
      throw FormatError("model: dimension fields disagree with stored matrices");
    }
    if (!m.coefficients.allFinite()) throw FormatError("model: non-finite coefficients");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: malformed JSON: ") + e.what());
  }
}

}  // namespace chemocal
