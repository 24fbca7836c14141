#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chemocal/csv.hpp"
#include "chemocal/dataset.hpp"
#include "chemocal/error.hpp"
#include "chemocal/stats.hpp"
#include "chemocal/json_io.hpp"
#include "chemocal/parallel.hpp"
#include "chemocal/pls.hpp"
#include "chemocal/rng.hpp"

namespace chemocal {

inline constexpr int kDefaultFolds = 5;

/// Every subsample inherits its bulk's reference value.
inline std::vector<double> assign_bulk_references(const std::vector<Subsample>& rows, const ReferenceTable& table) {
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!table.contains(rows[i].bulk_id)) throw PreconditionError("no reference for bulk_id " + rows[i].bulk_id);
    y[i] = table.at(rows[i].bulk_id);
  }
  return y;
}

/// Partitions bulks into K near-equal folds: sorted ids are shuffled
/// (Fisher-Yates on a seeded stream) and dealt round-robin.
inline std::map<std::string, int> split_folds(std::vector<std::string> bulks, int folds, std::uint64_t seed) {
  if (folds < 2) throw PreconditionError("split_folds: need at least 2 folds");
  std::sort(bulks.begin(), bulks.end());
  bulks.erase(std::unique(bulks.begin(), bulks.end()), bulks.end());
  if (bulks.size() < static_cast<std::size_t>(folds)) {
    throw PreconditionError("split_folds: " + std::to_string(bulks.size()) + " bulks cannot fill " + std::to_string(folds) + " folds");
  }
  Rng rng(stream_seed(seed, 0xF01D));
  for (std::size_t i = bulks.size() - 1; i > 0; --i) std::swap(bulks[i], bulks[rng.below(i + 1)]);
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < bulks.size(); ++i) out[bulks[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return out;
}

/// Cross-validation rows: everything outside the test split.
inline bool is_cv(const Subsample& s) { return s.split != Split::test; }

/// Checks that every CV row has a fold in [0, K) and that no bulk straddles folds.
inline std::map<std::string, int> fold_of_bulk(const std::vector<Subsample>& rows, int folds) {
  std::map<std::string, int> out;
  for (const auto& s : rows) {
    if (!is_cv(s)) continue;
    if (!s.fold) throw PreconditionError("subsample " + s.subsample_id + " has no fold");
    if (*s.fold < 0 || *s.fold >= folds) throw PreconditionError("subsample " + s.subsample_id + ": fold out of range");
    auto [it, inserted] = out.emplace(s.bulk_id, *s.fold);
    if (!inserted && it->second != *s.fold) throw PreconditionError("bulk " + s.bulk_id + " straddles folds");
  }
  return out;
}

struct ModelConfig {
  std::string pipeline = "snv_sg";
  std::vector<int> grid;  // empty: 1..30
  Task task = Task::regression;
  int folds = kDefaultFolds;
  unsigned threads = 1;
};

inline constexpr int kDefaultMaxComponents = 30;

struct EnsembleModel {
  std::string mode = "subsample";  // or "bulk"
  Task task = Task::regression;
  int components = 0;
  std::vector<ComponentScore> component_scores;
  std::map<std::string, int> fold_of_bulk;
  std::vector<PlsModel> constituents;
  /// Bulk ids each constituent was trained on.
  std::vector<std::vector<std::string>> training_bulks;
};

namespace detail {

inline Matrix spectra_matrix(const std::vector<const Subsample*>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  const auto b = static_cast<Eigen::Index>(rows.front()->mean_spectrum.size());
  Matrix x(static_cast<Eigen::Index>(rows.size()), b);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i]->mean_spectrum.size()) != b) throw PreconditionError("band count differs between subsamples");
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(rows[i]->mean_spectrum.data(), b);
  }
  return x;
}

inline std::vector<int> resolve_grid(const ModelConfig& cfg, Eigen::Index min_train_rows, Eigen::Index bands) {
  const int cap = static_cast<int>(std::min<Eigen::Index>(min_train_rows - 1, bands));
  std::vector<int> grid = cfg.grid;
  if (grid.empty()) {
    for (int a = 1; a <= std::min(kDefaultMaxComponents, cap); ++a) grid.push_back(a);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() < 1 || grid.back() > cap) {
    throw PreconditionError("component grid must lie in [1, " + std::to_string(cap) + "]");
  }
  return grid;
}

/// Fits one constituent per fold on the other folds' rows, picks the
/// component count with the best mean validation score, and truncates every
/// constituent to it.
inline EnsembleModel fit_folds(const std::vector<const Subsample*>& rows, const std::vector<double>& refs,
                               const std::vector<int>& fold, const ModelConfig& cfg) {
  const int k_folds = cfg.folds;
  const Matrix x = spectra_matrix(rows);
  Matrix y;
  std::vector<int> classes;
  if (cfg.task == Task::discriminant) {
    std::vector<int> labels(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) labels[i] = static_cast<int>(std::lround(refs[i]));
    y = one_hot(labels, classes);
    if (classes.size() < 2) throw PreconditionError("discriminant calibration needs at least two classes");
  } else {
    y = Eigen::Map<const Vector>(refs.data(), static_cast<Eigen::Index>(refs.size()));
  }
  Eigen::Index min_train = std::numeric_limits<Eigen::Index>::max();
  for (int k = 0; k < k_folds; ++k) {
    const auto n = static_cast<Eigen::Index>(std::count_if(fold.begin(), fold.end(), [k](int f) { return f != k; }));
    min_train = std::min(min_train, n);
  }
  const std::vector<int> grid = resolve_grid(cfg, min_train, x.cols());

  std::vector<PlsPath> paths(static_cast<std::size_t>(k_folds));
  std::vector<std::vector<double>> scores(static_cast<std::size_t>(k_folds));
  parallel_for(static_cast<std::size_t>(k_folds), cfg.threads, [&](std::size_t k) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == static_cast<int>(k) ? va : tr).push_back(static_cast<Eigen::Index>(i));
    if (va.empty()) throw PreconditionError("fold " + std::to_string(k) + " has no rows");
    const Matrix xtr = x(tr, Eigen::all), ytr = y(tr, Eigen::all);
    PlsPath path;
    try {
      path = fit_pls_path(xtr, ytr, grid.back(), PreprocPipeline::preset(cfg.pipeline));
    } catch (const DegenerateError& e) {
      throw DegenerateError("constituent " + std::to_string(k) + ": " + e.what());
    }
    path.task = cfg.task;
    path.classes = classes;
    const Matrix yva = y(va, Eigen::all);
    for (const Matrix& p : predict_path(path, x(va, Eigen::all), grid)) {
      if (cfg.task == Task::discriminant) {
        const auto want = argmax_rows(yva), got = argmax_rows(p);
        std::size_t hit = 0;
        for (std::size_t i = 0; i < want.size(); ++i) hit += want[i] == got[i];
        scores[k].push_back(static_cast<double>(hit) / static_cast<double>(want.size()));
      } else {
        scores[k].push_back(matrix_rmse(yva, p));
      }
    }
    paths[k] = std::move(path);
  });

  EnsembleModel model;
  model.task = cfg.task;
  double best = cfg.task == Task::discriminant ? -1.0 : std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double mean = 0.0;
    for (const auto& s : scores) mean += s[g];
    mean /= static_cast<double>(k_folds);
    model.component_scores.push_back({grid[g], mean});
    if (cfg.task == Task::discriminant ? mean > best : mean < best) {
      best = mean;
      model.components = grid[g];
    }
  }
  for (const auto& p : paths) model.constituents.push_back(p.model(model.components));
  return model;
}

}  // namespace detail

/// Bulk-stratified K-fold ensemble on subsample spectra with bulk-mean labels.
/// Test-split rows are never used.
inline EnsembleModel fit_ensemble(const std::vector<Subsample>& rows, const ReferenceTable& table, const ModelConfig& cfg) {
  const auto folds = fold_of_bulk(rows, cfg.folds);
  std::vector<const Subsample*> cv;
  std::vector<int> fold;
  for (const auto& s : rows) {
    if (!is_cv(s)) continue;
    cv.push_back(&s);
    fold.push_back(*s.fold);
  }
  if (cv.empty()) throw PreconditionError("fit_ensemble: no cross-validation rows");
  std::vector<double> refs(cv.size());
  for (std::size_t i = 0; i < cv.size(); ++i) {
    if (!table.contains(cv[i]->bulk_id)) throw PreconditionError("no reference for bulk_id " + cv[i]->bulk_id);
    refs[i] = table.at(cv[i]->bulk_id);
  }
  EnsembleModel model = detail::fit_folds(cv, refs, fold, cfg);
  model.mode = "subsample";
  model.fold_of_bulk = folds;
  for (int k = 0; k < cfg.folds; ++k) {
    std::vector<std::string> ids;
    for (const auto& [bulk, f] : folds)
      if (f != k) ids.push_back(bulk);
    model.training_bulks.push_back(std::move(ids));
  }
  return model;
}

struct BulkSpectrum {
  std::string bulk_id;
  Split split = Split::train;
  std::optional<int> fold;
  std::size_t subsamples = 0;
  std::vector<double> spectrum;
};

/// Grain-pixel-weighted mean of each bulk's subsample mean spectra (weights
/// proportional to density, i.e. pooling all grain pixels of the bulk).
inline std::vector<BulkSpectrum> bulk_mean_spectra(const std::vector<Subsample>& rows) {
  std::map<std::string, BulkSpectrum> acc;
  std::map<std::string, double> weight;
  for (const auto& s : rows) {
    auto [it, inserted] = acc.try_emplace(s.bulk_id);
    BulkSpectrum& b = it->second;
    if (inserted) {
      b.bulk_id = s.bulk_id;
      b.split = s.split;
      b.fold = s.fold;
      b.spectrum.assign(s.mean_spectrum.size(), 0.0);
    } else if (b.split != s.split || b.fold != s.fold) {
      throw PreconditionError("bulk " + s.bulk_id + " has subsamples in different splits or folds");
    }
    if (s.mean_spectrum.size() != b.spectrum.size()) throw PreconditionError("band count differs between subsamples");
    ++b.subsamples;
    weight[s.bulk_id] += s.density;
    for (std::size_t i = 0; i < s.mean_spectrum.size(); ++i) b.spectrum[i] += s.density * s.mean_spectrum[i];
  }
  std::vector<BulkSpectrum> out;
  for (auto& [id, b] : acc) {
    const double w = weight[id];
    if (!(w > 0.0)) throw DegenerateError("bulk " + id + " has zero total grain density");
    for (double& v : b.spectrum) v /= w;
    out.push_back(std::move(b));
  }
  return out;
}

/// One row per bulk holding its mean spectrum, subsample_id = bulk_id, density 1.
inline std::vector<Subsample> bulk_rows(const std::vector<Subsample>& rows, bool include_test = true) {
  std::vector<Subsample> out;
  for (auto& b : bulk_mean_spectra(rows)) {
    if (!include_test && b.split == Split::test) continue;
    Subsample s;
    s.subsample_id = b.bulk_id;
    s.bulk_id = b.bulk_id;
    s.split = b.split;
    s.fold = b.fold;
    s.density = 1.0;
    s.mean_spectrum = std::move(b.spectrum);
    out.push_back(std::move(s));
  }
  return out;
}

/// The bulk-calibrated variant: one mean spectrum per CV bulk, same fold
/// protocol, so each constituent trains on the bulks of K-1 folds.
inline EnsembleModel fit_bulk_model(const std::vector<Subsample>& rows, const ReferenceTable& table, const ModelConfig& cfg) {
  const auto folds = fold_of_bulk(rows, cfg.folds);
  const std::vector<Subsample> pseudo = bulk_rows(rows, false);
  std::vector<const Subsample*> cv;
  std::vector<int> fold;
  std::vector<double> refs;
  for (const auto& s : pseudo) {
    cv.push_back(&s);
    fold.push_back(*s.fold);
    refs.push_back(table.at(s.bulk_id));
  }
  if (cv.empty()) throw PreconditionError("fit_bulk_model: no cross-validation bulks");
  EnsembleModel model = detail::fit_folds(cv, refs, fold, cfg);
  model.mode = "bulk";
  model.fold_of_bulk = folds;
  for (int k = 0; k < cfg.folds; ++k) {
    std::vector<std::string> ids;
    for (const auto& [bulk, f] : folds)
      if (f != k) ids.push_back(bulk);
    model.training_bulks.push_back(std::move(ids));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Predictions

inline constexpr int kEnsembleRow = -1;

struct PredictionRow {
  std::string subsample_id;
  std::string bulk_id;
  Split split = Split::train;
  std::optional<int> fold;
  int constituent = kEnsembleRow;  // -1: value is already an ensemble output
  double yhat = 0.0;
};

using PredictionSet = std::vector<PredictionRow>;

/// Per-constituent outputs for every subsample, constituent order 0..K-1.
inline PredictionSet predict_ensemble(const EnsembleModel& model, const std::vector<Subsample>& rows, unsigned threads = 1) {
  std::vector<const Subsample*> ptrs;
  for (const auto& s : rows) ptrs.push_back(&s);
  const Matrix x = detail::spectra_matrix(ptrs);
  const std::size_t k = model.constituents.size();
  std::vector<std::vector<double>> out(k);
  parallel_for(k, threads, [&](std::size_t c) {
    const PlsModel& m = model.constituents[c];
    if (m.task == Task::discriminant) {
      const auto labels = classify(m, x);
      out[c].assign(labels.begin(), labels.end());
    } else {
      const Matrix p = predict(m, x);
      out[c].assign(p.data(), p.data() + p.rows());
    }
  });
  PredictionSet set;
  set.reserve(rows.size() * k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      set.push_back({rows[i].subsample_id, rows[i].bulk_id, rows[i].split, rows[i].fold, static_cast<int>(c), out[c][i]});
    }
  }
  return set;
}

/// Ensemble semantics per split view: test = mean of all constituents;
/// train = mean of the constituents whose training data held the row (all
/// but its own fold); val = the row's own-fold constituent alone.
inline double ensemble_predict(std::span<const double> outputs, Split view, std::optional<int> fold) {
  if (outputs.empty()) throw PreconditionError("ensemble_predict: no constituent outputs");
  if (view == Split::test) {
    double s = 0.0;
    for (double v : outputs) s += v;
    return s / static_cast<double>(outputs.size());
  }
  if (!fold || *fold < 0 || static_cast<std::size_t>(*fold) >= outputs.size()) {
    throw PreconditionError("ensemble_predict: unknown fold for a train/val row");
  }
  if (view == Split::val) return outputs[static_cast<std::size_t>(*fold)];
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    if (static_cast<int>(c) == *fold) continue;
    s += outputs[c];
    ++n;
  }
  if (n == 0) throw PreconditionError("ensemble_predict: no constituent saw this row in training");
  return s / static_cast<double>(n);
}

/// One subsample's ensemble value in one split view, with the outputs of the
/// constituents that contributed to it.
struct ViewRow {
  std::string subsample_id;
  std::string bulk_id;
  double yhat = 0.0;
  std::vector<std::pair<int, double>> contributions;
};

/// Ensemble view of every split. Rows from the cross-validation part appear in
/// both the train and val views; test rows in the test view. Rows already
/// marked as ensemble outputs pass through in their own split.
inline std::map<Split, std::vector<ViewRow>> ensemble_views(const PredictionSet& set) {
  struct Pending {
    const PredictionRow* first = nullptr;
    std::vector<std::pair<int, double>> outputs;
    std::optional<double> direct;
  };
  std::map<std::string, Pending> by_id;
  std::vector<std::string> order;
  for (const auto& r : set) {
    auto [it, inserted] = by_id.try_emplace(r.subsample_id);
    Pending& p = it->second;
    if (inserted) {
      p.first = &r;
      order.push_back(r.subsample_id);
    } else if (p.first->bulk_id != r.bulk_id || p.first->split != r.split || p.first->fold != r.fold) {
      throw PreconditionError("prediction rows for " + r.subsample_id + " disagree on bulk/split/fold");
    }
    if (r.constituent == kEnsembleRow) {
      if (p.direct) throw PreconditionError("duplicate ensemble row for " + r.subsample_id);
      p.direct = r.yhat;
    } else {
      p.outputs.emplace_back(r.constituent, r.yhat);
    }
  }
  std::map<Split, std::vector<ViewRow>> views;
  for (const auto& id : order) {
    Pending& p = by_id[id];
    const PredictionRow& r = *p.first;
    if (p.direct) {
      views[r.split].push_back({id, r.bulk_id, *p.direct, {}});
      continue;
    }
    std::sort(p.outputs.begin(), p.outputs.end());
    for (std::size_t c = 0; c < p.outputs.size(); ++c) {
      if (p.outputs[c].first != static_cast<int>(c)) {
        throw PreconditionError("prediction rows for " + id + ": constituents must be 0..K-1 without gaps");
      }
    }
    std::vector<double> values;
    for (const auto& o : p.outputs) values.push_back(o.second);
    auto view_row = [&](Split view) {
      ViewRow v{id, r.bulk_id, ensemble_predict(values, view, r.fold), {}};
      for (const auto& o : p.outputs) {
        const bool used = view == Split::test || (view == Split::val ? o.first == *r.fold : o.first != *r.fold);
        if (used) v.contributions.push_back(o);
      }
      return v;
    };
    if (r.split == Split::test) {
      views[Split::test].push_back(view_row(Split::test));
    } else {
      views[Split::train].push_back(view_row(Split::train));
      views[Split::val].push_back(view_row(Split::val));
    }
  }
  return views;
}

struct BulkAggregate {
  std::string bulk_id;
  Split split = Split::train;
  std::size_t n = 0;
  double y_bm = std::numeric_limits<double>::quiet_NaN();
  double yhat_bm = 0.0;
  /// Sample std (n-1) of per-constituent bulk means over sqrt(#constituents);
  /// NaN when fewer than two constituents contribute.
  double sem = std::numeric_limits<double>::quiet_NaN();
};

/// Per-bulk mean of the ensemble subsample predictions of one view, ordered by bulk_id.
inline std::vector<BulkAggregate> aggregate_bulk_means(const std::vector<ViewRow>& view, Split split,
                                                       const ReferenceTable* table = nullptr) {
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
    std::map<int, std::pair<double, std::size_t>> per_constituent;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : view) {
    Acc& a = acc[r.bulk_id];
    ++a.n;
    a.sum += r.yhat;
    for (const auto& [c, v] : r.contributions) {
      auto& pc = a.per_constituent[c];
      pc.first += v;
      ++pc.second;
    }
  }
  std::vector<BulkAggregate> out;
  for (const auto& [id, a] : acc) {
    if (a.n == 0) throw PreconditionError("aggregate_bulk_means: empty bulk " + id);
    BulkAggregate b;
    b.bulk_id = id;
    b.split = split;
    b.n = a.n;
    b.yhat_bm = a.sum / static_cast<double>(a.n);
    if (table) b.y_bm = table->at(id);
    if (a.per_constituent.size() >= 2) {
      std::vector<double> means;
      for (const auto& [c, pc] : a.per_constituent) means.push_back(pc.first / static_cast<double>(pc.second));
      b.sem = mean_sem(means).sem;
    }
    out.push_back(b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string predictions_to_csv(const PredictionSet& set) {
  std::string out = "subsample_id,bulk_id,split,fold,constituent,yhat\n";
  out.reserve(set.size() * 48);
  for (const auto& r : set) {
    out += r.subsample_id;
    out += ',';
    out += r.bulk_id;
    out += ',';
    out += to_string(r.split);
    out += ',';
    if (r.fold) out += std::to_string(*r.fold);
    out += ',';
    out += r.constituent == kEnsembleRow ? std::string("ensemble") : std::to_string(r.constituent);
    out += ',';
    append_number(out, r.yhat);
    out += '\n';
  }
  return out;
}

inline PredictionSet predictions_from_csv(const CsvTable& t) {
  const std::size_t c_id = t.column("subsample_id"), c_bulk = t.column("bulk_id"), c_split = t.column("split"),
                    c_fold = t.column("fold"), c_con = t.column("constituent"), c_y = t.column("yhat");
  PredictionSet set(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    PredictionRow& p = set[r];
    p.subsample_id = t.cell(r, c_id);
    p.bulk_id = t.cell(r, c_bulk);
    auto split = parse_split(t.cell(r, c_split));
    if (!split) throw FormatError(t.where(r) + ": unknown split '" + t.cell(r, c_split) + "'");
    p.split = *split;
    p.fold = t.optional_integer(r, c_fold);
    if (t.cell(r, c_con) == "ensemble") p.constituent = kEnsembleRow;
    else {
      p.constituent = static_cast<int>(t.integer(r, c_con));
      if (p.constituent < 0) throw FormatError(t.where(r) + ": negative constituent index");
    }
    p.yhat = t.number(r, c_y);
    if (!std::isfinite(p.yhat)) throw FormatError(t.where(r) + ": non-finite prediction");
  }
  return set;
}

inline std::string bulk_aggregates_to_csv(const std::vector<BulkAggregate>& rows) {
  std::string out = "bulk_id,split,y_bm,yhat_bm,sem\n";
  for (const auto& b : rows) {
    out += b.bulk_id + "," + std::string(to_string(b.split)) + ",";
    out += format_number(b.y_bm) + "," + format_number(b.yhat_bm) + ",";
    if (std::isfinite(b.sem)) out += format_number(b.sem);
    out += '\n';
  }
  return out;
}

inline Json ensemble_to_json(const EnsembleModel& m) {
  Json j;
  j["format"] = "chemocal-ensemble";
  j["mode"] = m.mode;
  j["task"] = std::string(to_string(m.task));
  j["folds"] = m.constituents.size();
  j["components"] = m.components;
  Json scores = Json::array();
  for (const auto& s : m.component_scores) scores.push_back(Json{{"components", s.components}, {"score", s.score}});
  j["component_scores"] = scores;
  Json folds = Json::object();
  for (const auto& [bulk, f] : m.fold_of_bulk) folds[bulk] = f;
  j["fold_of_bulk"] = folds;
  j["training_bulks"] = m.training_bulks;
  Json cons = Json::array();
  for (const auto& c : m.constituents) cons.push_back(model_to_json(c));
  j["constituents"] = cons;
  return j;
}

inline EnsembleModel ensemble_from_json(const Json& j) {
  try {
    if (j.value("format", std::string()) != "chemocal-ensemble") throw FormatError("model: not a chemocal ensemble file");
    EnsembleModel m;
    m.mode = j.at("mode").get<std::string>();
    m.task = j.at("task").get<std::string>() == "discriminant" ? Task::discriminant : Task::regression;
    m.components = j.at("components").get<int>();
    for (const auto& s : j.at("component_scores")) m.component_scores.push_back({s.at("components").get<int>(), s.at("score").get<double>()});
    for (auto it = j.at("fold_of_bulk").begin(); it != j.at("fold_of_bulk").end(); ++it) m.fold_of_bulk[it.key()] = it.value().get<int>();
    m.training_bulks = j.at("training_bulks").get<std::vector<std::vector<std::string>>>();
    for (const auto& c : j.at("constituents")) m.constituents.push_back(model_from_json(c));
    if (m.constituents.empty()) throw FormatError("model: no constituents");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: malformed JSON: ") + e.what());
  }
}

}  // namespace chemocal
