// chemocal: command line front end.
//
// Exit status: 0 success, 1 usage error, 2 data error. Every failure prints
// one line `chemocal: error[<kind>]: <message>` on stderr.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "chemocal/chemocal.hpp"

namespace fs = std::filesystem;
using namespace chemocal;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned resolve_threads(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("CHEMOCAL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError("CHEMOCAL_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return 1;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": cannot create directory: " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

/// "5", "1-30" or "1,2,4,8".
std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  if (text.empty()) return grid;
  auto to_int = [&](const std::string& s) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty()) throw UsageError("--components: cannot parse '" + text + "'");
    return v;
  };
  if (auto dash = text.find('-'); dash != std::string::npos && dash > 0) {
    const int lo = to_int(text.substr(0, dash)), hi = to_int(text.substr(dash + 1));
    if (lo < 1 || hi < lo) throw UsageError("--components: empty range '" + text + "'");
    for (int a = lo; a <= hi; ++a) grid.push_back(a);
    return grid;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    grid.push_back(to_int(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  std::set<int> unique(grid.begin(), grid.end());
  if (unique.size() != grid.size() || *unique.begin() < 1) throw UsageError("--components: values must be distinct and >= 1");
  return {unique.begin(), unique.end()};
}

std::vector<Subsample> load_subsamples(const std::string& path) { return subsamples_from_csv(CsvTable::read(path)); }
ReferenceTable load_references(const std::string& path) { return ReferenceTable::from_csv(CsvTable::read(path)); }
PredictionSet load_predictions(const std::string& path) { return predictions_from_csv(CsvTable::read(path)); }

const std::vector<Split> kViews = {Split::train, Split::val, Split::test};

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string size = "tiny";
  std::uint64_t seed = 0;
  std::string out = "fixture";
  std::string deviation = "skew_normal";
  std::string task = "regression";
  double lambda = 0.8;
  int cubes = -1;
  int per_bulk = 0;
  bool flat_noise = false;
  double noise = -1.0;
};

int run_synth(const SynthArgs& a, unsigned threads) {
  if (a.size != "tiny" && a.size != "desk") throw UsageError("--size must be tiny or desk");
  SynthConfig cfg = fixture_config(a.size == "tiny" ? FixtureSize::tiny : FixtureSize::desk, a.seed);
  cfg.deviation.kind = parse_deviation(a.deviation);
  if (a.task == "classification") cfg.task = SynthTask::classification;
  else if (a.task != "regression") throw UsageError("--task must be regression or classification");
  if (a.per_bulk > 0) cfg.subsamples_per_bulk = a.per_bulk;
  if (a.flat_noise) cfg.density_scaled = false;
  if (a.noise >= 0.0) cfg.additive_noise_sd = a.noise;
  AttenuationConfig oracle;
  oracle.lambda = a.lambda;
  oracle.seed = a.seed;
  if (cfg.deviation.kind == DeviationKind::normal) oracle.noise.kind = DeviationKind::normal;
  const int cubes = a.cubes >= 0 ? a.cubes : (a.size == "tiny" ? 1 : 0);
  export_fixture(cfg, oracle, a.out, cubes, threads);
  return 0;
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  std::string manifest, cube, bulk_id, split = "train", out;
  int fold = -1;
  double min_density = 0.1;
  bool invert = false;
  std::string mask_dir;
};

struct CubeEntry {
  std::string path, bulk_id;
  Split split;
  std::optional<int> fold;
};

int run_preprocess(const PreprocessArgs& a, unsigned threads) {
  std::vector<CubeEntry> entries;
  if (!a.manifest.empty()) {
    if (!a.cube.empty()) throw UsageError("--manifest and --cube are mutually exclusive");
    const CsvTable t = CsvTable::read(a.manifest);
    const auto c_path = t.column("cube_path"), c_bulk = t.column("bulk_id"), c_split = t.column("split"), c_fold = t.column("fold");
    const fs::path base = fs::path(a.manifest).parent_path();
    for (std::size_t r = 0; r < t.size(); ++r) {
      auto split = parse_split(t.cell(r, c_split));
      if (!split) throw FormatError(t.where(r) + ": unknown split '" + t.cell(r, c_split) + "'");
      fs::path p(t.cell(r, c_path));
      if (p.is_relative()) p = base / p;
      entries.push_back({p.string(), t.cell(r, c_bulk), *split, t.optional_integer(r, c_fold)});
    }
  } else {
    if (a.cube.empty() || a.bulk_id.empty()) throw UsageError("need --manifest, or --cube with --bulk-id");
    auto split = parse_split(a.split);
    if (!split) throw UsageError("--split must be train, val or test");
    entries.push_back({a.cube, a.bulk_id, *split, a.fold >= 0 ? std::optional<int>(a.fold) : std::nullopt});
  }
  CropSpec spec;
  spec.min_density = a.min_density;
  std::vector<Subsample> all;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    HsiCube cube = load_cube(e.path);
    const GrainMask mask = otsu_mask(cube, a.invert);
    if (!a.mask_dir.empty()) {
      ensure_dir(a.mask_dir);
      write_mask(mask, join(a.mask_dir, fs::path(e.path).stem().string() + "_mask.u8"));
    }
    if (cube.domain == Domain::reflectance) cube = to_pseudo_absorbance(cube);
    if (cube.bands == kRawBands) cube = spectral_bin(cube);
    auto rows = crop(cube, mask, spec, threads);
    for (auto& s : rows) {
      s.subsample_id = e.bulk_id + "_" + std::to_string(i) + "_" + s.subsample_id;
      s.bulk_id = e.bulk_id;
      s.split = e.split;
      s.fold = e.fold;
      all.push_back(std::move(s));
    }
  }
  if (all.empty()) throw DegenerateError("preprocess: no crop reached the minimum grain density");
  write_text_file(a.out, subsamples_to_csv(all));
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate / predict

struct CalibrateArgs {
  std::string subsamples, references, out, mode = "subsample", pipeline = "snv_sg", components, task = "regression";
  int folds = kDefaultFolds;
  std::optional<std::uint64_t> seed;
};

int run_calibrate(const CalibrateArgs& a, unsigned threads) {
  if (a.mode != "subsample" && a.mode != "bulk") throw UsageError("--mode must be subsample or bulk");
  if (a.folds < 2) throw UsageError("--folds must be >= 2");
  ModelConfig cfg;
  cfg.pipeline = a.pipeline;
  PreprocPipeline::preset(cfg.pipeline);
  cfg.grid = parse_grid(a.components);
  if (a.task == "discriminant") cfg.task = Task::discriminant;
  else if (a.task != "regression") throw UsageError("--task must be regression or discriminant");
  cfg.folds = a.folds;
  cfg.threads = threads;
  std::vector<Subsample> rows = load_subsamples(a.subsamples);
  const ReferenceTable refs = load_references(a.references);
  for (const auto& s : rows)
    if (!refs.contains(s.bulk_id)) throw PreconditionError(a.references + ": no reference for bulk_id " + s.bulk_id);
  bool missing = false;
  for (const auto& s : rows) missing = missing || (is_cv(s) && !s.fold);
  if (missing) {
    if (!a.seed) throw UsageError("--seed is required when subsamples carry no fold assignment");
    std::vector<std::string> ids;
    for (const auto& s : rows)
      if (is_cv(s)) ids.push_back(s.bulk_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto folds = split_folds(ids, cfg.folds, *a.seed);
    for (auto& s : rows) {
      if (!is_cv(s)) continue;
      if (s.fold && *s.fold != folds.at(s.bulk_id))
        throw PreconditionError("subsample " + s.subsample_id + ": partial fold assignment conflicts with seeded split");
      s.fold = folds.at(s.bulk_id);
    }
  }
  const EnsembleModel model = a.mode == "bulk" ? fit_bulk_model(rows, refs, cfg) : fit_ensemble(rows, refs, cfg);
  write_text_file(a.out, to_json_text(ensemble_to_json(model)));
  return 0;
}

struct PredictArgs {
  std::string model, subsamples, out;
};

int run_predict(const PredictArgs& a, unsigned threads) {
  const EnsembleModel model = ensemble_from_json(read_json_file(a.model));
  std::vector<Subsample> rows = load_subsamples(a.subsamples);
  for (auto& s : rows) {
    if (!is_cv(s)) continue;
    auto it = model.fold_of_bulk.find(s.bulk_id);
    if (it == model.fold_of_bulk.end()) {
      if (!s.fold) throw PreconditionError("subsample " + s.subsample_id + ": bulk " + s.bulk_id + " has no fold in the model");
      continue;
    }
    if (s.fold && *s.fold != it->second)
      throw PreconditionError("subsample " + s.subsample_id + ": fold differs from the model's assignment");
    s.fold = it->second;
  }
  if (model.mode == "bulk") rows = bulk_rows(rows);
  write_text_file(a.out, predictions_to_csv(predict_ensemble(model, rows, threads)));
  return 0;
}

// ---------------------------------------------------------------------------
// correct

struct CorrectArgs {
  std::string predictions, references, out_dir, source = "both";
};

struct ViewData {
  std::map<Split, std::vector<ViewRow>> views;
  std::map<Split, std::vector<BulkAggregate>> bulks;
};

ViewData build_views(const PredictionSet& set, const ReferenceTable& refs) {
  ViewData d;
  d.views = ensemble_views(set);
  for (const auto& [split, rows] : d.views) {
    for (const auto& r : rows)
      if (!refs.contains(r.bulk_id)) throw PreconditionError("no reference for bulk_id " + r.bulk_id);
    d.bulks[split] = aggregate_bulk_means(rows, split, &refs);
  }
  return d;
}

svg::Chart calibration_chart(const std::string& title, const std::vector<BulkAggregate>& bulks, const LevelSummary& s) {
  svg::Chart chart(title, "reference", "prediction");
  chart.identity_line();
  svg::Series pts;
  pts.label = "bulk means";
  for (const auto& b : bulks) {
    pts.points.push_back({b.y_bm, b.yhat_bm});
    pts.error.push_back(b.sem);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& b : bulks) lo = std::min(lo, b.y_bm), hi = std::max(hi, b.y_bm);
  chart.add(std::move(pts));
  if (std::isfinite(lo) && s.scale != 0.0) {
    svg::Series line;
    line.label = "OLS fit";
    line.color = "#d62728";
    line.line = true;
    line.markers = false;
    for (double y : {lo, hi}) line.points.push_back({y, (y - s.bias) / s.scale});
    chart.add(std::move(line));
  }
  char note[160];
  std::snprintf(note, sizeof note, "RMSE %.4g  sYX %.4g  bias %.4g  scale %.4g  n %zu", s.rmse, s.syx, s.bias, s.scale, s.n);
  chart.note(note);
  return chart;
}

Json run_correct_into(const PredictionSet& set, const ReferenceTable& refs, const std::string& out_dir, CorrectionSource source) {
  const ViewData d = build_views(set, refs);
  std::map<Split, SplitInputs> inputs;
  std::vector<BulkAggregate> all;
  for (Split s : kViews) {
    if (!d.bulks.contains(s)) throw PreconditionError("predictions contain no rows for the " + std::string(to_string(s)) + " view");
    SplitInputs in;
    for (const auto& b : d.bulks.at(s)) {
      in.bm.y.push_back(b.y_bm);
      in.bm.yhat.push_back(b.yhat_bm);
      all.push_back(b);
    }
    LevelData ss;
    for (const auto& r : d.views.at(s)) {
      ss.y.push_back(refs.at(r.bulk_id));
      ss.yhat.push_back(r.yhat);
    }
    in.ss = std::move(ss);
    inputs[s] = std::move(in);
  }
  const CorrectionReport report = correction_report(inputs, source);
  const Json j = report_to_json(report);
  ensure_dir(out_dir);
  write_text_file(join(out_dir, "correction.json"), to_json_text(j));
  write_text_file(join(out_dir, "bulk_aggregates.csv"), bulk_aggregates_to_csv(all));
  for (Split s : kViews) {
    const std::string name(to_string(s));
    write_text_file(join(out_dir, "calibration_" + name + ".svg"),
                    calibration_chart("bulk means, " + name, d.bulks.at(s), report.bm.at(s)).render());
  }
  for (const auto& c : report.corrected_test) {
    const std::string src(to_string(c.source));
    std::vector<BulkAggregate> corrected = d.bulks.at(Split::test);
    for (std::size_t i = 0; i < corrected.size(); ++i) {
      corrected[i].yhat_bm = c.corrected[i];
      corrected[i].sem *= std::abs(c.scale);
    }
    LevelData ld;
    for (const auto& b : corrected) ld.y.push_back(b.y_bm), ld.yhat.push_back(b.yhat_bm);
    write_text_file(join(out_dir, "corrected_test_" + src + ".svg"),
                    calibration_chart("test bulk means, " + src + "-sourced correction", corrected, summarize(ld)).render());
  }
  return j;
}

CorrectionSource parse_source(const std::string& s) {
  if (s == "train") return CorrectionSource::train;
  if (s == "val") return CorrectionSource::val;
  if (s == "both") return CorrectionSource::both;
  throw UsageError("--source must be train, val or both");
}

int run_correct(const CorrectArgs& a) {
  const CorrectionSource source = parse_source(a.source);
  run_correct_into(load_predictions(a.predictions), load_references(a.references), a.out_dir, source);
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseArgs {
  std::string predictions, references, out_dir, split = "all";
  double alpha = 0.05;
};

double z_critical(double alpha) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_two_sided_p(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Json run_diagnose_into(const PredictionSet& set, const ReferenceTable& refs, const std::string& out_dir, const std::string& which,
                       double alpha, unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
  std::vector<Split> splits;
  if (which == "all") splits = kViews;
  else if (auto s = parse_split(which)) splits = {*s};
  else throw UsageError("--split must be train, val, test or all");
  const auto views = ensemble_views(set);
  DistributionReport all;
  Json summary;
  summary["alpha"] = alpha;
  Json per = Json::object();
  for (Split s : splits) {
    if (!views.contains(s)) continue;
    const DistributionReport r = per_bulk_report(views.at(s), s, refs, threads);
    std::size_t tested = 0;
    for (const auto& b : r) tested += b.undersized ? 0 : 1;
    per[std::string(to_string(s))] =
        Json{{"bulks", r.size()}, {"tested", tested}, {"omnibus_rejection_rate", omnibus_rejection_rate(r, alpha)}};
    all.insert(all.end(), r.begin(), r.end());
  }
  summary["splits"] = per;
  ensure_dir(out_dir);
  write_text_file(join(out_dir, "distribution.csv"), distribution_to_csv(all));
  write_text_file(join(out_dir, "distribution_summary.json"), to_json_text(summary));

  const double zc = z_critical(alpha);
  struct Stat {
    const char* name;
    double BulkDistribution::*field;
    bool pvalue;
  };
  const Stat stats[] = {{"z_skew", &BulkDistribution::z_skew, false},
                        {"z_kurt", &BulkDistribution::z_kurt, false},
                        {"k2", &BulkDistribution::k2, false},
                        {"p_omnibus", &BulkDistribution::p_omnibus, true}};
  const char* colors[] = {"#1f77b4", "#2ca02c", "#ff7f0e"};
  for (const auto& st : stats) {
    svg::Chart chart(std::string(st.name) + " per bulk", "reference", st.name);
    for (std::size_t i = 0; i < kViews.size(); ++i) {
      svg::Series series;
      series.label = std::string(to_string(kViews[i]));
      series.color = colors[i];
      for (const auto& b : all)
        if (b.split == kViews[i] && !b.undersized) series.points.push_back({b.y_bm, b.*st.field});
      if (!series.points.empty()) chart.add(std::move(series));
    }
    char label[64];
    if (st.pvalue) {
      std::snprintf(label, sizeof label, "alpha = %g", alpha);
      chart.add(svg::HLine{alpha, "#d62728", label});
    } else if (std::string(st.name) == "k2") {
      std::snprintf(label, sizeof label, "critical value, alpha = %g", alpha);
      chart.add(svg::HLine{-2.0 * std::log(alpha), "#d62728", label});
    } else {
      std::snprintf(label, sizeof label, "+/- %.3g", zc);
      chart.add(svg::HLine{zc, "#d62728", label});
      chart.add(svg::HLine{-zc, "#d62728", ""});
    }
    write_text_file(join(out_dir, std::string("distribution_") + st.name + ".svg"), chart.render());
  }
  return summary;
}

int run_diagnose(const DiagnoseArgs& a, unsigned threads) {
  run_diagnose_into(load_predictions(a.predictions), load_references(a.references), a.out_dir, a.split, a.alpha, threads);
  return 0;
}

// ---------------------------------------------------------------------------
// density

struct DensityArgs {
  std::string predictions, subsamples, references, out_dir, metric = "rmse", split = "test";
};

Json run_density_into(const PredictionSet& set, const std::vector<Subsample>& rows, const ReferenceTable& refs,
                      const std::string& out_dir, const std::string& metric_name, const std::string& split_name) {
  DensityMetric metric;
  if (metric_name == "rmse") metric = DensityMetric::rmse;
  else if (metric_name == "acc") metric = DensityMetric::acc;
  else throw UsageError("--metric must be rmse or acc");
  const auto split = parse_split(split_name);
  if (!split) throw UsageError("--split must be train, val or test");
  std::map<std::string, double> density;
  for (const auto& s : rows) density.emplace(s.subsample_id, s.density);
  const auto views = ensemble_views(set);
  if (!views.contains(*split)) throw PreconditionError("predictions contain no rows for the " + split_name + " view");
  const auto& view = views.at(*split);
  DensityInput in;
  std::size_t k = 0;
  for (const auto& r : view) k = std::max(k, r.contributions.size());
  const bool per_constituent = *split == Split::test;
  in.yhat.assign(per_constituent ? k : 1, {});
  for (const auto& r : view) {
    auto it = density.find(r.subsample_id);
    if (it == density.end()) throw PreconditionError("subsample " + r.subsample_id + " missing from the subsample table");
    in.density.push_back(it->second);
    in.y.push_back(refs.at(r.bulk_id));
    if (per_constituent && r.contributions.size() == k) {
      for (std::size_t c = 0; c < k; ++c) in.yhat[c].push_back(r.contributions[c].second);
    } else if (per_constituent) {
      for (std::size_t c = 0; c < k; ++c) in.yhat[c].push_back(r.yhat);
    } else {
      in.yhat[0].push_back(r.yhat);
    }
  }
  const DensitySweep sweep = density_sweep(in, metric);
  ensure_dir(out_dir);
  write_text_file(join(out_dir, "density_bins.csv"), bins_to_csv(sweep.bins));
  write_text_file(join(out_dir, "density_cumulative.csv"), cumulative_to_csv(sweep.cumulative));

  svg::Chart chart(std::string(to_string(metric)) + " vs. grain density (" + split_name + ")", "grain density",
                   std::string(to_string(metric)));
  svg::Bars bars;
  bars.color = "#9ecae1";
  svg::Series curve;
  curve.label = "cumulative, density >= d";
  curve.color = "#d62728";
  curve.line = true;
  for (const auto& p : sweep.bins) {
    if (!p.present) continue;
    bars.lo.push_back(p.lo);
    bars.hi.push_back(p.hi);
    bars.height.push_back(p.mean);
  }
  for (const auto& p : sweep.cumulative) {
    if (!p.present) continue;
    curve.points.push_back({p.lo, p.mean});
    curve.error.push_back(p.sem);
  }
  chart.add(std::move(bars));
  chart.add(std::move(curve));
  write_text_file(join(out_dir, "density.svg"), chart.render());

  Json summary;
  summary["metric"] = std::string(to_string(metric));
  summary["split"] = split_name;
  summary["rows"] = in.density.size();
  summary["bin_spearman"] = bin_trend(sweep.bins);
  summary["global"] = sweep.cumulative.empty() ? Json(nullptr) : Json(sweep.cumulative.front().mean);
  write_text_file(join(out_dir, "density_summary.json"), to_json_text(summary));
  return summary;
}

int run_density(const DensityArgs& a) {
  run_density_into(load_predictions(a.predictions), load_subsamples(a.subsamples), load_references(a.references), a.out_dir,
                   a.metric, a.split);
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string predictions, subsamples, references, out_dir, source = "both", metric = "rmse";
  double alpha = 0.05;
};

int run_report(const ReportArgs& a, unsigned threads) {
  const CorrectionSource source = parse_source(a.source);
  const PredictionSet set = load_predictions(a.predictions);
  const ReferenceTable refs = load_references(a.references);
  Json j;
  if (a.metric == "rmse") {
    j["correction"] = run_correct_into(set, refs, a.out_dir, source);
    j["distribution"] = run_diagnose_into(set, refs, a.out_dir, "all", a.alpha, threads);
  }
  if (!a.subsamples.empty()) j["density"] = run_density_into(set, load_subsamples(a.subsamples), refs, a.out_dir, a.metric, "test");
  write_text_file(join(a.out_dir, "report.json"), to_json_text(j));
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chemocal: subsample calibration toolkit for hyperspectral grain data"};
  app.require_subcommand(1);
  int threads_flag = 0;
  app.add_option("--threads", threads_flag, "worker threads (fallback: CHEMOCAL_THREADS, else 1)")->check(CLI::PositiveNumber);

  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads_flag, "worker threads (fallback: CHEMOCAL_THREADS, else 1)")->check(CLI::PositiveNumber);
  };

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic fixture");
  synth->add_option("--size", sa.size, "tiny or desk")->required();
  synth->add_option("--seed", sa.seed, "root seed")->required();
  synth->add_option("--out", sa.out, "output directory");
  synth->add_option("--deviation", sa.deviation, "normal, skew_normal or contaminated");
  synth->add_option("--task", sa.task, "regression or classification");
  synth->add_option("--lambda", sa.lambda, "attenuation of the oracle predictions, in (0, 1]");
  synth->add_option("--cubes", sa.cubes, "number of synthetic reflectance cubes (default: 1 for tiny, 0 for desk)");
  synth->add_option("--subsamples-per-bulk", sa.per_bulk, "override the fixture's subsample count");
  synth->add_option("--additive-noise", sa.noise, "white-noise standard deviation per band");
  synth->add_flag("--flat-noise", sa.flat_noise, "do not scale deviations and noise by 1/sqrt(density)");
  add_threads(synth);

  PreprocessArgs pa;
  auto* pre = app.add_subcommand("preprocess", "cubes to subsample table");
  pre->add_option("--manifest", pa.manifest, "CSV cube_path,bulk_id,split,fold");
  pre->add_option("--cube", pa.cube, "single cube payload");
  pre->add_option("--bulk-id", pa.bulk_id);
  pre->add_option("--split", pa.split);
  pre->add_option("--fold", pa.fold);
  pre->add_option("--out", pa.out, "subsample CSV")->required();
  pre->add_option("--min-density", pa.min_density)->check(CLI::Range(0.0, 1.0));
  pre->add_flag("--invert-mask", pa.invert, "grain is the darker class");
  pre->add_option("--mask-dir", pa.mask_dir, "also write grain masks here");
  add_threads(pre);

  CalibrateArgs ca;
  std::uint64_t cal_seed = 0;
  auto* cal = app.add_subcommand("calibrate", "fit a K-fold PLS ensemble");
  cal->add_option("--subsamples", ca.subsamples)->required();
  cal->add_option("--references", ca.references)->required();
  cal->add_option("--out", ca.out, "model JSON")->required();
  cal->add_option("--mode", ca.mode, "subsample or bulk");
  cal->add_option("--pipeline", ca.pipeline, "snv_sg, center or none");
  cal->add_option("--components", ca.components, "N, LO-HI or a comma list (default 1-30)");
  cal->add_option("--task", ca.task, "regression or discriminant");
  cal->add_option("--folds", ca.folds);
  auto* seed_opt = cal->add_option("--seed", cal_seed, "fold assignment seed (required when folds are absent)");
  add_threads(cal);

  PredictArgs pr;
  auto* pred = app.add_subcommand("predict", "per-constituent predictions");
  pred->add_option("--model", pr.model)->required();
  pred->add_option("--subsamples", pr.subsamples)->required();
  pred->add_option("--out", pr.out, "predictions CSV")->required();
  add_threads(pred);

  CorrectArgs co;
  auto* cor = app.add_subcommand("correct", "bias/scale report and corrected test predictions");
  cor->add_option("--predictions", co.predictions)->required();
  cor->add_option("--references", co.references)->required();
  cor->add_option("--out-dir", co.out_dir)->required();
  cor->add_option("--source", co.source, "train, val or both");
  add_threads(cor);

  DiagnoseArgs da;
  auto* dia = app.add_subcommand("diagnose", "per-bulk normality tests");
  dia->add_option("--predictions", da.predictions)->required();
  dia->add_option("--references", da.references)->required();
  dia->add_option("--out-dir", da.out_dir)->required();
  dia->add_option("--alpha", da.alpha);
  dia->add_option("--split", da.split, "train, val, test or all");
  add_threads(dia);

  DensityArgs de;
  auto* den = app.add_subcommand("density", "metric vs. grain density sweeps");
  den->add_option("--predictions", de.predictions)->required();
  den->add_option("--subsamples", de.subsamples)->required();
  den->add_option("--references", de.references)->required();
  den->add_option("--out-dir", de.out_dir)->required();
  den->add_option("--metric", de.metric, "rmse or acc");
  den->add_option("--split", de.split);
  add_threads(den);

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "correction, distribution and density reports in one directory");
  rep->add_option("--predictions", ra.predictions)->required();
  rep->add_option("--references", ra.references)->required();
  rep->add_option("--subsamples", ra.subsamples, "enables the density sweep");
  rep->add_option("--out-dir", ra.out_dir)->required();
  rep->add_option("--source", ra.source);
  rep->add_option("--alpha", ra.alpha);
  rep->add_option("--metric", ra.metric, "rmse or acc");
  add_threads(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "chemocal: error[usage]: " << one_line(e.what()) << "\n";
    return 1;
  }

  try {
    const unsigned threads = resolve_threads(threads_flag);
    if (*synth) return run_synth(sa, threads);
    if (*pre) return run_preprocess(pa, threads);
    if (*cal) {
      if (seed_opt->count()) ca.seed = cal_seed;
      return run_calibrate(ca, threads);
    }
    if (*pred) return run_predict(pr, threads);
    if (*cor) return run_correct(co);
    if (*dia) return run_diagnose(da, threads);
    if (*den) return run_density(de);
    if (*rep) return run_report(ra, threads);
  } catch (const UsageError& e) {
    std::cerr << "chemocal: error[usage]: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "chemocal: error[" << e.kind() << "]: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "chemocal: error[internal]: " << one_line(e.what()) << "\n";
    return 2;
  }
  return 1;
}
