#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "chemocal/calib.hpp"
#include "chemocal/cube.hpp"
#include "chemocal/dataset.hpp"
#include "chemocal/error.hpp"
#include "chemocal/json_io.hpp"
#include "chemocal/parallel.hpp"
#include "chemocal/rng.hpp"

namespace chemocal {

enum class DeviationKind { normal, skew_normal, contaminated };

inline std::string_view to_string(DeviationKind k) {
  switch (k) {
    case DeviationKind::normal: return "normal";
    case DeviationKind::skew_normal: return "skew_normal";
    case DeviationKind::contaminated: return "contaminated";
  }
  return "?";
}

inline DeviationKind parse_deviation(const std::string& s) {
  if (s == "normal") return DeviationKind::normal;
  if (s == "skew_normal") return DeviationKind::skew_normal;
  if (s == "contaminated") return DeviationKind::contaminated;
  throw PreconditionError("unknown deviation model '" + s + "'");
}

/// Zero-mean random deviation. normal: sigma*N; skew_normal: SN(alpha, omega)
/// minus its mean; contaminated: sigma*N plus a one-sided shift with
/// probability outlier_rate, minus the mean shift.
struct Deviation {
  DeviationKind kind = DeviationKind::skew_normal;
  double sigma = 0.7;
  double alpha = 5.0;
  double omega = 1.15;
  double outlier_rate = 0.05;
  double outlier_shift = 3.0;

  void validate() const {
    if (!(sigma >= 0.0 && omega >= 0.0)) throw PreconditionError("deviation scales must be >= 0");
    if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw PreconditionError("outlier_rate outside [0,1]");
  }

  bool zero() const {
    switch (kind) {
      case DeviationKind::normal: return sigma == 0.0;
      case DeviationKind::skew_normal: return omega == 0.0;
      case DeviationKind::contaminated: return sigma == 0.0 && (outlier_rate == 0.0 || outlier_shift == 0.0);
    }
    return false;
  }

  double draw(Rng& rng) const {
    switch (kind) {
      case DeviationKind::normal: return sigma * rng.normal();
      case DeviationKind::skew_normal: return skew_normal(rng, alpha, omega) - skew_normal_mean(alpha, omega);
      case DeviationKind::contaminated: {
        const double base = sigma * rng.normal();
        const double shift = rng.uniform() < outlier_rate ? outlier_shift : 0.0;
        return base + shift - outlier_rate * outlier_shift;
      }
    }
    return 0.0;
  }

  Json to_json() const {
    return Json{{"kind", std::string(to_string(kind))}, {"sigma", sigma}, {"alpha", alpha}, {"omega", omega},
                {"outlier_rate", outlier_rate}, {"outlier_shift", outlier_shift}};
  }
};

/// Smooth absorbance-like background shared by every spectrum.
inline std::vector<double> default_baseline(std::size_t bands) {
  std::vector<double> v(bands);
  const double scale = 101.0 / std::max<double>(1.0, static_cast<double>(bands) - 1.0);
  for (std::size_t i = 0; i < bands; ++i) {
    const double b = static_cast<double>(i) * scale;
    v[i] = 0.45 + 0.25 * std::exp(-std::pow((b - 20.0) / 14.0, 2)) + 0.35 * std::exp(-std::pow((b - 62.0) / 10.0, 2)) +
           0.15 * b / 101.0;
  }
  return v;
}

/// Absorbance change per protein percentage point.
inline std::vector<double> default_signature(std::size_t bands) {
  std::vector<double> v(bands);
  const double scale = 101.0 / std::max<double>(1.0, static_cast<double>(bands) - 1.0);
  for (std::size_t i = 0; i < bands; ++i) {
    const double b = static_cast<double>(i) * scale;
    v[i] = 0.012 * std::exp(-std::pow((b - 35.0) / 3.0, 2)) + 0.008 * std::exp(-std::pow((b - 78.0) / 4.0, 2)) -
           0.005 * std::exp(-std::pow((b - 55.0) / 3.0, 2));
  }
  return v;
}

enum class SynthTask { regression, classification };


struct SynthConfig {
  int n_bulks = 63;
  int n_test_bulks = 13;
  int subsamples_per_bulk = 1000;
  int folds = kDefaultFolds;
  std::size_t bands = kBinnedBands;
  double protein_lo = 8.0;
  double protein_hi = 16.0;
  Deviation deviation;
  std::vector<double> baseline;   // empty: default_baseline
  std::vector<double> signature;  // empty: default_signature
  double scatter_gain_sd = 0.05;
  double additive_noise_sd = 0.002;
  double density_lo = 0.1;
  double density_hi = 1.0;
  /// Scale deviations and white noise by 1/sqrt(density).
  bool density_scaled = true;
  SynthTask task = SynthTask::regression;
  int n_classes = 8;
  /// Amplitude of the class-specific absorbance pattern.
  double class_separation = 0.004;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_bulks < 1 || n_test_bulks < 0 || n_test_bulks >= n_bulks) throw PreconditionError("synth: need 0 <= n_test_bulks < n_bulks");
    if (n_bulks - n_test_bulks < folds) throw PreconditionError("synth: fewer CV bulks than folds");
    if (subsamples_per_bulk < 1) throw PreconditionError("synth: need at least one subsample per bulk");
    if (bands < 7) throw PreconditionError("synth: need at least 7 bands");
    if (!(protein_hi >= protein_lo)) throw PreconditionError("synth: empty protein range");
    if (!(scatter_gain_sd >= 0.0 && additive_noise_sd >= 0.0)) throw PreconditionError("synth: scales must be >= 0");
    if (!(density_lo > 0.0 && density_hi <= 1.0 && density_lo <= density_hi)) throw PreconditionError("synth: density range must lie in (0,1]");
    if (!baseline.empty() && baseline.size() != bands) throw PreconditionError("synth: baseline length != bands");
    if (!signature.empty() && signature.size() != bands) throw PreconditionError("synth: signature length != bands");
    if (task == SynthTask::classification && n_classes < 2) throw PreconditionError("synth: need at least two classes");
    deviation.validate();
  }

  Json to_json() const {
    return Json{{"n_bulks", n_bulks}, {"n_test_bulks", n_test_bulks}, {"subsamples_per_bulk", subsamples_per_bulk},
                {"folds", folds}, {"bands", bands}, {"protein_range", {protein_lo, protein_hi}},
                {"deviation", deviation.to_json()}, {"scatter_gain_sd", scatter_gain_sd},
                {"additive_noise_sd", additive_noise_sd}, {"density_range", {density_lo, density_hi}},
                {"density_scaled", density_scaled},
                {"task", task == SynthTask::regression ? "regression" : "classification"}, {"n_classes", n_classes},
                {"class_separation", class_separation}, {"seed", seed}};
  }
};

struct SynthData {
  std::vector<Subsample> rows;
  ReferenceTable references;
  /// Hidden per-subsample ground truth aligned with `rows` (regression only).
  std::vector<double> truth;
};

inline std::string bulk_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "B%03d", i);
  return buf;
}

/// Class pattern: one Gaussian band whose position depends on the class.
inline std::vector<double> class_pattern(int cls, int n_classes, std::size_t bands, double amplitude) {
  std::vector<double> v(bands);
  const double center = 10.0 + 80.0 * (static_cast<double>(cls) + 0.5) / static_cast<double>(n_classes);
  const double scale = 101.0 / std::max<double>(1.0, static_cast<double>(bands) - 1.0);
  for (std::size_t i = 0; i < bands; ++i) {
    const double b = static_cast<double>(i) * scale;
    v[i] = amplitude * std::exp(-std::pow((b - center) / 3.0, 2));
  }
  return v;
}

/// Seeded generator. Bulk b draws its reference from stream (seed, b+1, 0);
/// subsample s of bulk b draws everything from stream (seed, b+1, s+1), so
/// the output does not depend on generation order or thread count.
/// The last n_test_bulks bulks form the test split; the rest are dealt into
/// folds by split_folds with the same seed.
inline SynthData generate(const SynthConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const std::vector<double> baseline = cfg.baseline.empty() ? default_baseline(cfg.bands) : cfg.baseline;
  const std::vector<double> signature = cfg.signature.empty() ? default_signature(cfg.bands) : cfg.signature;
  const int cv_bulks = cfg.n_bulks - cfg.n_test_bulks;
  std::vector<std::string> cv_ids;
  for (int b = 0; b < cv_bulks; ++b) cv_ids.push_back(bulk_name(b));
  const auto folds = split_folds(cv_ids, cfg.folds, cfg.seed);

  SynthData data;
  std::vector<double> reference(static_cast<std::size_t>(cfg.n_bulks));
  for (int b = 0; b < cfg.n_bulks; ++b) {
    Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(b) + 1, 0));
    reference[static_cast<std::size_t>(b)] = cfg.task == SynthTask::classification
                                                 ? static_cast<double>(b % cfg.n_classes)
                                                 : rng.uniform(cfg.protein_lo, cfg.protein_hi);
    data.references.set(bulk_name(b), reference[static_cast<std::size_t>(b)]);
  }
  std::vector<std::vector<double>> patterns;
  if (cfg.task == SynthTask::classification)
    for (int c = 0; c < cfg.n_classes; ++c) patterns.push_back(class_pattern(c, cfg.n_classes, cfg.bands, cfg.class_separation));

  const std::size_t per = static_cast<std::size_t>(cfg.subsamples_per_bulk);
  const std::size_t total = per * static_cast<std::size_t>(cfg.n_bulks);
  data.rows.resize(total);
  data.truth.resize(total);
  parallel_for(total, threads, [&](std::size_t i) {
    const int b = static_cast<int>(i / per);
    const std::size_t s = i % per;
    Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(b) + 1, s + 1));
    Subsample& row = data.rows[i];
    char id[32];
    std::snprintf(id, sizeof id, "B%03d_S%04zu", b, s);
    row.subsample_id = id;
    row.bulk_id = bulk_name(b);
    row.split = b < cv_bulks ? Split::train : Split::test;
    if (b < cv_bulks) row.fold = folds.at(row.bulk_id);
    row.density = rng.uniform(cfg.density_lo, cfg.density_hi);
    row.row = static_cast<int>(s);
    row.col = 0;
    const double factor = cfg.density_scaled ? 1.0 / std::sqrt(row.density) : 1.0;
    const double y_bm = reference[static_cast<std::size_t>(b)];
    const double gain = 1.0 + cfg.scatter_gain_sd * rng.normal();
    row.mean_spectrum.resize(cfg.bands);
    if (cfg.task == SynthTask::classification) {
      data.truth[i] = y_bm;
      const auto& pattern = patterns[static_cast<std::size_t>(b % cfg.n_classes)];
      for (std::size_t k = 0; k < cfg.bands; ++k) {
        const double v = gain * (baseline[k] + pattern[k]) + cfg.additive_noise_sd * factor * rng.normal();
        row.mean_spectrum[k] = static_cast<float>(v);
      }
    } else {
      const double truth = y_bm + cfg.deviation.draw(rng) * factor;
      data.truth[i] = truth;
      for (std::size_t k = 0; k < cfg.bands; ++k) {
        const double v = gain * (baseline[k] + truth * signature[k]) + cfg.additive_noise_sd * factor * rng.normal();
        row.mean_spectrum[k] = static_cast<float>(v);
      }
    }
  });
  return data;
}

// ---------------------------------------------------------------------------

/// Oracle predictor: yhat = mu + lambda * (truth - mu) + noise, with mu the
/// mean truth over all rows. The noise has a component shared by all
/// constituents (a model's systematic error) and an independent jitter per
/// constituent.
struct AttenuationConfig {
  double lambda = 0.8;
  Deviation noise{DeviationKind::skew_normal, 0.3, 5.0, 0.3, 0.0, 0.0};
  double jitter_sd = 0.05;
  int constituents = kDefaultFolds;
  std::uint64_t seed = 0;

  Json to_json() const {
    return Json{{"lambda", lambda}, {"noise", noise.to_json()}, {"jitter_sd", jitter_sd}, {"constituents", constituents},
                {"seed", seed}};
  }
};

inline PredictionSet induce_attenuation(const std::vector<Subsample>& rows, const std::vector<double>& truth,
                                        const AttenuationConfig& cfg) {
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw PreconditionError("induce_attenuation: lambda must lie in (0, 1]");
  if (truth.size() != rows.size()) throw PreconditionError("induce_attenuation: ground truth missing or misaligned");
  if (cfg.constituents < 1) throw PreconditionError("induce_attenuation: need at least one constituent");
  if (!(cfg.jitter_sd >= 0.0)) throw PreconditionError("induce_attenuation: jitter_sd must be >= 0");
  cfg.noise.validate();
  double mu = 0.0;
  for (double t : truth) mu += t;
  mu /= static_cast<double>(truth.size());
  PredictionSet set;
  set.reserve(rows.size() * static_cast<std::size_t>(cfg.constituents));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Rng rng(stream_seed(cfg.seed ^ 0xA77E4A7E5EEDULL, i + 1, 0));
    const double shared = cfg.noise.zero() ? 0.0 : cfg.noise.draw(rng);
    const double base = mu + cfg.lambda * (truth[i] - mu) + shared;
    for (int c = 0; c < cfg.constituents; ++c) {
      const double jitter = cfg.jitter_sd == 0.0 ? 0.0 : cfg.jitter_sd * rng.normal();
      set.push_back({rows[i].subsample_id, rows[i].bulk_id, rows[i].split, rows[i].fold, c, base + jitter});
    }
  }
  return set;
}

inline std::string truth_to_csv(const std::vector<Subsample>& rows, const std::vector<double>& truth) {
  std::string out = "subsample_id,true_protein\n";
  for (std::size_t i = 0; i < rows.size(); ++i) out += rows[i].subsample_id + "," + format_number(truth[i]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic cubes

/// Reflectance cube (224 raw bands) of scattered round kernels on a dark
/// background. Grain absorbance follows baseline + protein * signature on the
/// binned grid; each raw band takes the value of the binned band it feeds.
inline HsiCube synth_cube(std::size_t height, std::size_t width, double protein, double coverage, std::uint64_t seed) {
  const auto baseline = default_baseline(kBinnedBands);
  const auto signature = default_signature(kBinnedBands);
  HsiCube cube(height, width, kRawBands, Domain::reflectance);
  Rng rng(stream_seed(seed, 0xC0BE, 0));
  GrainMask grain(height, width);
  const double radius = 6.0;
  const auto kernels = static_cast<std::size_t>(coverage * static_cast<double>(height * width) / (3.14159 * radius * radius));
  for (std::size_t k = 0; k < kernels; ++k) {
    const double cr = rng.uniform(0.0, static_cast<double>(height));
    const double cc = rng.uniform(0.0, static_cast<double>(width));
    for (std::size_t r = 0; r < height; ++r)
      for (std::size_t c = 0; c < width; ++c)
        if (std::pow(static_cast<double>(r) - cr, 2) + std::pow(static_cast<double>(c) - cc, 2) <= radius * radius) grain.at(r, c) = 1;
  }
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double gain = 1.0 + 0.02 * rng.normal();
      for (std::size_t j = 0; j < kRawBands; ++j) {
        const std::size_t b = std::min<std::size_t>(kBinnedBands - 1, (j < kTrimmedEdgeBands ? 0 : (j - kTrimmedEdgeBands) / 2));
        double v;
        if (grain.at(r, c)) v = std::pow(10.0, -gain * (baseline[b] + protein * signature[b]));
        else v = 0.02 + 0.002 * rng.normal();
        cube.at(r, c, j) = std::max(v, 1e-4);
      }
    }
  }
  return cube;
}

// ---------------------------------------------------------------------------

enum class FixtureSize { tiny, desk };

inline SynthConfig fixture_config(FixtureSize size, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  if (size == FixtureSize::tiny) {
    cfg.n_bulks = 6;
    cfg.n_test_bulks = 1;
    cfg.subsamples_per_bulk = 40;
  } else {
    cfg.n_bulks = 63;
    cfg.n_test_bulks = 13;
    cfg.subsamples_per_bulk = 1000;
  }
  return cfg;
}

struct FixtureFiles {
  std::string subsamples, references, truth, oracle_predictions, config;
  std::vector<std::string> cubes;
};

/// Writes subsamples.csv, references.csv, truth.csv, oracle_predictions.csv,
/// synth_config.json and `cubes` synthetic reflectance cubes (with a
/// manifest.csv for the preprocess command) into `dir`.
inline FixtureFiles export_fixture(const SynthConfig& cfg, const AttenuationConfig& oracle, const std::string& dir,
                                   int cubes = 0, unsigned threads = 1) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": cannot create directory: " + ec.message());
  const SynthData data = generate(cfg, threads);
  FixtureFiles f;
  const std::filesystem::path base(dir);
  f.subsamples = (base / "subsamples.csv").string();
  f.references = (base / "references.csv").string();
  f.truth = (base / "truth.csv").string();
  f.oracle_predictions = (base / "oracle_predictions.csv").string();
  f.config = (base / "synth_config.json").string();
  write_text_file(f.subsamples, subsamples_to_csv(data.rows));
  write_text_file(f.references, data.references.to_csv());
  write_text_file(f.truth, truth_to_csv(data.rows, data.truth));
  if (cfg.task == SynthTask::regression) {
    write_text_file(f.oracle_predictions, predictions_to_csv(induce_attenuation(data.rows, data.truth, oracle)));
  } else {
    f.oracle_predictions.clear();
  }
  write_text_file(f.config, to_json_text(Json{{"synth", cfg.to_json()}, {"oracle", oracle.to_json()}}));
  if (cubes > 0) {
    std::string manifest = "cube_path,bulk_id,split,fold\n";
    for (int i = 0; i < cubes; ++i) {
      const int b = i % cfg.n_bulks;
      const std::string id = bulk_name(b);
      char name[32];
      std::snprintf(name, sizeof name, "cube_%03d.f32", i);
      const std::string path = (base / name).string();
      const HsiCube cube = synth_cube(128, 192, data.references.at(id), 0.35, stream_seed(cfg.seed, 0xCB, static_cast<std::uint64_t>(i)));
      write_cube(cube, path);
      f.cubes.push_back(path);
      const bool test = b >= cfg.n_bulks - cfg.n_test_bulks;
      std::string fold;
      for (const auto& s : data.rows)
        if (s.bulk_id == id && s.fold) {
          fold = std::to_string(*s.fold);
          break;
        }
      manifest += std::string(name) + "," + id + "," + (test ? "test" : "train") + "," + fold + "\n";
    }
    write_text_file((base / "manifest.csv").string(), manifest);
  }
  return f;
}

}  // namespace chemocal
