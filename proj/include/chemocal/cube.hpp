#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemocal/dataset.hpp"
#include "chemocal/error.hpp"
#include "chemocal/json_io.hpp"
#include "chemocal/parallel.hpp"

namespace chemocal {

enum class Domain { reflectance, pseudo_absorbance };

inline constexpr std::size_t kRawBands = 224;
inline constexpr std::size_t kBinnedBands = 102;
inline constexpr std::size_t kTrimmedEdgeBands = 10;
inline constexpr double kBinnedStartNm = 938.0;
inline constexpr double kBinnedEndNm = 1662.0;

/// Hyperspectral raster, band-sequential: value (r, c, b) lives at
/// b * height * width + r * width + c.
struct HsiCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::vector<double> data;
  Domain domain = Domain::reflectance;
  double wavelength_start_nm = std::numeric_limits<double>::quiet_NaN();
  double wavelength_end_nm = std::numeric_limits<double>::quiet_NaN();

  HsiCube() = default;
  HsiCube(std::size_t h, std::size_t w, std::size_t b, Domain d = Domain::reflectance)
      : height(h), width(w), bands(b), data(h * w * b, 0.0), domain(d) {}

  std::size_t pixels() const { return height * width; }
  double& at(std::size_t r, std::size_t c, std::size_t b) { return data[b * pixels() + r * width + c]; }
  double at(std::size_t r, std::size_t c, std::size_t b) const { return data[b * pixels() + r * width + c]; }
  std::span<const double> band(std::size_t b) const { return {data.data() + b * pixels(), pixels()}; }
};

/// Binary grain mask, row-major, 1 = grain.
struct GrainMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> values;

  GrainMask() = default;
  GrainMask(std::size_t h, std::size_t w) : height(h), width(w), values(h * w, 0) {}
  std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
};

struct CropSpec {
  std::size_t window = 128;
  std::size_t stride = 64;
  double min_density = 0.1;

  void validate() const {
    if (window == 0 || stride == 0 || stride > window) throw PreconditionError("crop: need 0 < stride <= window");
    if (!(min_density >= 0.0 && min_density <= 1.0)) throw PreconditionError("crop: min_density outside [0,1]");
  }
};

/// Square window of a raster.
struct Window {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t size = 0;
};

// ---------------------------------------------------------------------------
// File format: raw payload plus a JSON sidecar at `<payload>.json`:
// {height,width,bands,dtype,byte_order,interleave,domain[,wavelength_*_nm]}

inline std::string sidecar_path(const std::string& payload) { return payload + ".json"; }

namespace detail {

inline std::vector<char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::string& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError(path + ": write failed");
}

inline Json read_sidecar(const std::string& payload) {
  const std::string path = sidecar_path(payload);
  if (!std::filesystem::exists(path)) throw IoError(path + ": missing header sidecar");
  return read_json_file(path);
}

template <typename T>
T sidecar_field(const Json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw FormatError(path + ": sidecar lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(path + ": sidecar field '" + key + "' has wrong type");
  }
}

}  // namespace detail

inline HsiCube load_cube(const std::string& path) {
  const Json meta = detail::read_sidecar(path);
  const std::string side = sidecar_path(path);
  const auto dtype = detail::sidecar_field<std::string>(meta, "dtype", side);
  if (dtype != "f32") throw FormatError(side + ": unknown dtype '" + dtype + "' (expected f32)");
  const auto order = detail::sidecar_field<std::string>(meta, "byte_order", side);
  if (order != "le" && order != "be") throw FormatError(side + ": unknown byte_order '" + order + "'");
  const auto interleave = detail::sidecar_field<std::string>(meta, "interleave", side);
  if (interleave != "bsq") throw FormatError(side + ": unsupported interleave '" + interleave + "'");
  const auto domain = detail::sidecar_field<std::string>(meta, "domain", side);
  if (domain != "reflectance" && domain != "pseudo_absorbance") {
    throw FormatError(side + ": unknown domain '" + domain + "'");
  }

  HsiCube cube;
  cube.height = detail::sidecar_field<std::size_t>(meta, "height", side);
  cube.width = detail::sidecar_field<std::size_t>(meta, "width", side);
  cube.bands = detail::sidecar_field<std::size_t>(meta, "bands", side);
  cube.domain = domain == "reflectance" ? Domain::reflectance : Domain::pseudo_absorbance;
  if (meta.contains("wavelength_start_nm")) cube.wavelength_start_nm = meta["wavelength_start_nm"].get<double>();
  if (meta.contains("wavelength_end_nm")) cube.wavelength_end_nm = meta["wavelength_end_nm"].get<double>();

  const std::vector<char> bytes = detail::read_bytes(path);
  const std::size_t count = cube.height * cube.width * cube.bands;
  if (bytes.size() != count * sizeof(float)) {
    throw FormatError(path + ": size mismatch: header declares " + std::to_string(count) +
                      " f32 values, payload holds " + std::to_string(bytes.size()) + " bytes");
  }
  const bool swap = (order == "le") != (std::endian::native == std::endian::little);
  cube.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + i * 4, 4);
    if (swap) bits = __builtin_bswap32(bits);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v)) throw FormatError(path + ": non-finite value at index " + std::to_string(i));
    if (v < 0.0f && cube.domain == Domain::reflectance)
      throw FormatError(path + ": negative reflectance at index " + std::to_string(i));
    cube.data[i] = v;
  }
  return cube;
}

inline void write_cube(const HsiCube& cube, const std::string& path) {
  std::vector<std::uint32_t> words(cube.data.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(cube.data[i]));
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    words[i] = bits;
  }
  detail::write_bytes(path, words.data(), words.size() * 4);
  Json meta;
  meta["height"] = cube.height;
  meta["width"] = cube.width;
  meta["bands"] = cube.bands;
  meta["dtype"] = "f32";
  meta["byte_order"] = "le";
  meta["interleave"] = "bsq";
  meta["domain"] = cube.domain == Domain::reflectance ? "reflectance" : "pseudo_absorbance";
  if (std::isfinite(cube.wavelength_start_nm)) meta["wavelength_start_nm"] = cube.wavelength_start_nm;
  if (std::isfinite(cube.wavelength_end_nm)) meta["wavelength_end_nm"] = cube.wavelength_end_nm;
  write_text_file(sidecar_path(path), to_json_text(meta));
}

inline GrainMask load_mask(const std::string& path) {
  const Json meta = detail::read_sidecar(path);
  const std::string side = sidecar_path(path);
  if (detail::sidecar_field<std::string>(meta, "dtype", side) != "u8") throw FormatError(side + ": mask dtype must be u8");
  GrainMask mask(detail::sidecar_field<std::size_t>(meta, "height", side),
                 detail::sidecar_field<std::size_t>(meta, "width", side));
  const std::vector<char> bytes = detail::read_bytes(path);
  if (bytes.size() != mask.values.size()) throw FormatError(path + ": size mismatch for u8 mask");
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[i]);
    if (v > 1) throw FormatError(path + ": mask value not in {0,1}");
    mask.values[i] = v;
  }
  return mask;
}

inline void write_mask(const GrainMask& mask, const std::string& path) {
  detail::write_bytes(path, mask.values.data(), mask.values.size());
  Json meta;
  meta["height"] = mask.height;
  meta["width"] = mask.width;
  meta["bands"] = 1;
  meta["dtype"] = "u8";
  meta["byte_order"] = "le";
  meta["interleave"] = "bsq";
  meta["domain"] = "mask";
  write_text_file(sidecar_path(path), to_json_text(meta));
}

// ---------------------------------------------------------------------------

/// a = -log10(max(r, floor)), element-wise.
inline HsiCube to_pseudo_absorbance(const HsiCube& cube, double floor = 1e-6) {
  if (cube.domain != Domain::reflectance) throw PreconditionError("to_pseudo_absorbance: cube is already in absorbance domain");
  if (!(floor > 0.0)) throw PreconditionError("to_pseudo_absorbance: floor must be positive");
  HsiCube out = cube;
  for (double& v : out.data) v = -std::log10(std::max(v, floor));
  out.domain = Domain::pseudo_absorbance;
  return out;
}

/// Drops the 10 outermost channels on each side of a 224-channel cube and
/// averages the remaining 204 in disjoint adjacent pairs.
inline HsiCube spectral_bin(const HsiCube& cube) {
  if (cube.bands != kRawBands) {
    throw PreconditionError("spectral_bin: expected " + std::to_string(kRawBands) + " bands, got " +
                            std::to_string(cube.bands));
  }
  HsiCube out(cube.height, cube.width, kBinnedBands, cube.domain);
  out.wavelength_start_nm = kBinnedStartNm;
  out.wavelength_end_nm = kBinnedEndNm;
  const std::size_t n = cube.pixels();
  for (std::size_t b = 0; b < kBinnedBands; ++b) {
    const double* lo = cube.data.data() + (2 * b + kTrimmedEdgeBands) * n;
    const double* hi = lo + n;
    double* dst = out.data.data() + b * n;
    for (std::size_t i = 0; i < n; ++i) dst[i] = (lo[i] + hi[i]) / 2.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Otsu segmentation

inline constexpr int kOtsuBins = 256;

struct OtsuResult {
  /// Pixels whose bin index is strictly greater than `bin` form the upper class.
  int bin = 0;
  /// Upper edge of `bin` in scalar units.
  double threshold = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Bin index of `v` for 256 uniform bins over [lo, hi]; hi falls in the last bin.
inline int otsu_bin_of(double v, double lo, double hi) {
  const double t = (v - lo) / (hi - lo) * kOtsuBins;
  return std::clamp(static_cast<int>(t), 0, kOtsuBins - 1);
}

/// Between-class variance criterion for a split with n0 pixels (index sum s0)
/// below and the rest above, up to the constant factor 1/n^2:
/// (n*s0 - n0*s)^2 / (n0*n1). Class sums are integer bin-index sums.
inline double otsu_criterion(std::int64_t n, std::int64_t s, std::int64_t n0, std::int64_t s0) {
  const std::int64_t n1 = n - n0;
  if (n0 == 0 || n1 == 0) return -1.0;
  const double d = static_cast<double>(n * s0 - n0 * s);
  return d * d / (static_cast<double>(n0) * static_cast<double>(n1));
}

namespace detail {

using u128 = unsigned __int128;

/// a/b < c/d for positive denominators, exactly (continued-fraction descent).
inline bool fraction_less(u128 a, u128 b, u128 c, u128 d) {
  for (;;) {
    const u128 qa = a / b, qc = c / d;
    if (qa != qc) return qa < qc;
    const u128 ra = a % b, rc = c % d;
    if (ra == 0) return rc != 0;
    if (rc == 0) return false;
    // ra/b < rc/d  <=>  d/rc < b/ra
    a = d, c = b;
    b = rc, d = ra;
  }
}

}  // namespace detail

/// Histogram Otsu threshold: maximizes between-class variance over the 255
/// boundaries between 256 bins; ties go to the lowest boundary.
inline OtsuResult otsu_threshold(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("otsu: empty input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  if (!(hi > lo)) throw DegenerateError("otsu: constant image (zero variance)");
  std::array<std::int64_t, kOtsuBins> hist{};
  for (double v : values) ++hist[static_cast<std::size_t>(otsu_bin_of(v, lo, hi))];
  std::int64_t n = 0, s = 0;
  for (int k = 0; k < kOtsuBins; ++k) {
    n += hist[k];
    s += hist[k] * k;
  }
  // Scores are compared as exact fractions (n*s0 - n0*s)^2 / (n0*n1).
  OtsuResult best{0, 0.0, lo, hi};
  bool have = false;
  detail::u128 best_num = 0, best_den = 1;
  std::int64_t n0 = 0, s0 = 0;
  for (int k = 0; k < kOtsuBins - 1; ++k) {
    n0 += hist[k];
    s0 += hist[k] * k;
    const std::int64_t n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const __int128 d = static_cast<__int128>(n) * s0 - static_cast<__int128>(n0) * s;
    const detail::u128 mag = static_cast<detail::u128>(d < 0 ? -d : d);
    const detail::u128 num = mag * mag, den = static_cast<detail::u128>(n0) * static_cast<detail::u128>(n1);
    if (!have || detail::fraction_less(best_num, best_den, num, den)) {
      have = true;
      best_num = num;
      best_den = den;
      best.bin = k;
    }
  }
  best.threshold = lo + (hi - lo) * (best.bin + 1) / kOtsuBins;
  return best;
}

/// Per-pixel mean over bands, row-major.
inline std::vector<double> band_mean_image(const HsiCube& cube) {
  if (cube.bands == 0 || cube.pixels() == 0) throw PreconditionError("band_mean_image: empty cube");
  std::vector<double> img(cube.pixels(), 0.0);
  for (std::size_t b = 0; b < cube.bands; ++b) {
    const auto band = cube.band(b);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] += band[i];
  }
  for (double& v : img) v /= static_cast<double>(cube.bands);
  return img;
}

/// Grain = brighter class of band-mean reflectance. Absorbance cubes are
/// segmented on negated band means so the ordering still follows reflectance.
/// `invert` flips the classes for data where the background is brighter.
inline GrainMask otsu_mask(const HsiCube& cube, bool invert = false) {
  std::vector<double> scalar = band_mean_image(cube);
  if (cube.domain == Domain::pseudo_absorbance)
    for (double& v : scalar) v = -v;
  const OtsuResult t = otsu_threshold(scalar);
  GrainMask mask(cube.height, cube.width);
  for (std::size_t i = 0; i < scalar.size(); ++i) {
    const bool upper = otsu_bin_of(scalar[i], t.lo, t.hi) > t.bin;
    mask.values[i] = static_cast<std::uint8_t>(upper != invert);
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Cropping

inline double grain_density(std::span<const std::uint8_t> window) {
  if (window.empty()) throw PreconditionError("grain_density: empty window");
  std::size_t ones = 0;
  for (auto v : window) ones += v != 0;
  return static_cast<double>(ones) / static_cast<double>(window.size());
}

inline double grain_density(const GrainMask& mask, const Window& w) {
  if (w.size == 0) throw PreconditionError("grain_density: empty window");
  std::size_t ones = 0;
  for (std::size_t r = w.row; r < w.row + w.size; ++r)
    for (std::size_t c = w.col; c < w.col + w.size; ++c) ones += mask.at(r, c) != 0;
  return static_cast<double>(ones) / static_cast<double>(w.size * w.size);
}

/// Per-band mean over the grain pixels of the window.
inline std::vector<double> mean_grain_spectrum(const HsiCube& cube, const GrainMask& mask, const Window& w) {
  std::size_t count = 0;
  std::vector<double> sum(cube.bands, 0.0);
  for (std::size_t r = w.row; r < w.row + w.size; ++r) {
    for (std::size_t c = w.col; c < w.col + w.size; ++c) {
      if (!mask.at(r, c)) continue;
      ++count;
      for (std::size_t b = 0; b < cube.bands; ++b) sum[b] += cube.at(r, c, b);
    }
  }
  if (count == 0) throw PreconditionError("mean_grain_spectrum: window has no grain pixels");
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

/// Number of anchors along one axis: only positions where the full window fits.
inline std::size_t crop_anchor_count(std::size_t extent, const CropSpec& spec) {
  return extent < spec.window ? 0 : (extent - spec.window) / spec.stride + 1;
}

/// All window crops at stride multiples, densities computed, sparse crops
/// (density < min_density) dropped. Output is ordered by (row, col).
/// Subsample ids are `r<row>_c<col>`; bulk and split are left to the caller.
inline std::vector<Subsample> crop(const HsiCube& cube, const GrainMask& mask, const CropSpec& spec,
                                   unsigned threads = 1) {
  spec.validate();
  if (mask.height != cube.height || mask.width != cube.width) throw PreconditionError("crop: mask and cube dimensions differ");
  if (cube.height < spec.window || cube.width < spec.window) throw PreconditionError("crop: cube smaller than crop window");
  const std::size_t rows = crop_anchor_count(cube.height, spec);
  const std::size_t cols = crop_anchor_count(cube.width, spec);
  std::vector<std::optional<Subsample>> slots(rows * cols);
  parallel_for(slots.size(), threads, [&](std::size_t i) {
    const Window w{(i / cols) * spec.stride, (i % cols) * spec.stride, spec.window};
    const double density = grain_density(mask, w);
    if (density < spec.min_density || density == 0.0) return;
    Subsample s;
    s.row = static_cast<int>(w.row);
    s.col = static_cast<int>(w.col);
    s.subsample_id = "r" + std::to_string(w.row) + "_c" + std::to_string(w.col);
    s.density = density;
    s.mean_spectrum = mean_grain_spectrum(cube, mask, w);
    slots[i] = std::move(s);
  });
  std::vector<Subsample> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

}  // namespace chemocal
