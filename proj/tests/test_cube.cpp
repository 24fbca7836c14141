#include <gtest/gtest.h>

#include "support.hpp"

using namespace chemocal;
using testing_support::TempDir;

namespace {

HsiCube counting_cube(std::size_t h, std::size_t w, std::size_t b) {
  HsiCube c(h, w, b);
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] = static_cast<double>(i);
  return c;
}

void write_sidecar(const std::string& payload, const std::string& body) { write_text_file(payload + ".json", body); }

// Exhaustive Otsu: for every boundary k, class sizes and bin-index sums are
// recounted from the pixels and the criterion compared as exact fractions.
int brute_force_otsu(const std::vector<double>& v) {
  const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
  std::vector<long long> bin(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) bin[i] = std::min(255LL, static_cast<long long>(std::floor((v[i] - lo) / (hi - lo) * 256.0)));
  int best = -1;
  __int128 best_num = 0, best_den = 1;
  for (int k = 0; k < 255; ++k) {
    long long n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (long long b : bin) (b <= k ? (++n0, s0 += b) : (++n1, s1 += b));
    if (n0 == 0 || n1 == 0) continue;
    // w0*w1*(mu0-mu1)^2 = (n1*s0 - n0*s1)^2 / (n0*n1*n^2)
    const __int128 d = static_cast<__int128>(n1) * s0 - static_cast<__int128>(n0) * s1;
    const __int128 num = d * d, den = static_cast<__int128>(n0) * n1;
    if (best < 0 || num * best_den > best_num * den) best = k, best_num = num, best_den = den;
  }
  return best;
}

}  // namespace

TEST(CubeIo, SmallCubeEchoesValuesInBandSequentialOrder) {
  TempDir dir("cube");
  const std::string p = dir / "c.f32";
  write_cube(counting_cube(2, 2, 3), p);
  const HsiCube c = load_cube(p);
  ASSERT_EQ(c.height, 2u);
  ASSERT_EQ(c.bands, 3u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(c.data[i], static_cast<double>(i));
  EXPECT_EQ(c.at(1, 0, 2), 10.0);
}

TEST(CubeIo, SizeMismatchIsReported) {
  TempDir dir("cube");
  const std::string p = dir / "short.f32";
  std::vector<float> payload(220, 0.5f);
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(payload.data()), 220 * 4);
  write_sidecar(p, R"({"height":1,"width":1,"bands":224,"dtype":"f32","byte_order":"le","interleave":"bsq","domain":"reflectance"})");
  try {
    load_cube(p);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("size mismatch"), std::string::npos);
  }
}

TEST(CubeIo, RejectsUnknownDtypeAndMissingHeader) {
  TempDir dir("cube");
  const std::string p = dir / "c.f32";
  write_cube(counting_cube(1, 1, 2), p);
  EXPECT_THROW(load_cube(dir / "absent.f32"), IoError);
  write_sidecar(p, R"({"height":1,"width":1,"bands":2,"dtype":"f64","byte_order":"le","interleave":"bsq","domain":"reflectance"})");
  EXPECT_THROW(load_cube(p), FormatError);
}

TEST(CubeIo, ReadsBigEndianPayload) {
  TempDir dir("cube");
  const std::string p = dir / "be.f32";
  const float vals[2] = {1.5f, 0.25f};
  unsigned char bytes[8];
  for (int i = 0; i < 2; ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(vals[i]);
    for (int k = 0; k < 4; ++k) bytes[i * 4 + k] = static_cast<unsigned char>(bits >> (24 - 8 * k));
  }
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes), 8);
  write_sidecar(p, R"({"height":1,"width":1,"bands":2,"dtype":"f32","byte_order":"be","interleave":"bsq","domain":"reflectance"})");
  const HsiCube c = load_cube(p);
  EXPECT_EQ(c.data[0], 1.5);
  EXPECT_EQ(c.data[1], 0.25);
}

TEST(CubeIo, RewriteIsByteIdentical) {
  TempDir dir("cube");
  Rng rng(3);
  HsiCube c(5, 7, 11);
  for (double& v : c.data) v = static_cast<float>(rng.uniform());
  const std::string a = dir / "a.f32", b = dir / "b.f32";
  write_cube(c, a);
  write_cube(load_cube(a), b);
  EXPECT_EQ(testing_support::slurp(a), testing_support::slurp(b));
  EXPECT_EQ(testing_support::slurp(a + ".json"), testing_support::slurp(b + ".json"));
}

TEST(CubeIo, MaskRoundTrip) {
  TempDir dir("cube");
  GrainMask m(3, 4);
  m.at(1, 2) = 1;
  m.at(2, 3) = 1;
  write_mask(m, dir / "m.u8");
  const GrainMask back = load_mask(dir / "m.u8");
  EXPECT_EQ(back.values, m.values);
}

TEST(PseudoAbsorbance, HandValues) {
  HsiCube c(1, 3, 1);
  c.data = {1.0, 0.01, 0.0};
  const HsiCube a = to_pseudo_absorbance(c, 1e-6);
  EXPECT_EQ(a.data[0], 0.0);
  EXPECT_NEAR(a.data[1], 2.0, 1e-15);
  EXPECT_NEAR(a.data[2], 6.0, 1e-15);
  EXPECT_EQ(a.domain, Domain::pseudo_absorbance);
  EXPECT_THROW(to_pseudo_absorbance(a), PreconditionError);
}

TEST(PseudoAbsorbance, DecreasingInReflectanceAboveFloor) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    HsiCube c(1, 2, 1);
    const double a = rng.uniform(1e-6, 1.0), b = rng.uniform(1e-6, 1.0);
    c.data = {std::min(a, b), std::max(a, b)};
    if (c.data[0] == c.data[1]) continue;
    const HsiCube t = to_pseudo_absorbance(c);
    EXPECT_GT(t.data[0], t.data[1]);
  }
}

TEST(SpectralBin, ConstantAndIndexCubes) {
  HsiCube c(2, 2, kRawBands);
  std::fill(c.data.begin(), c.data.end(), 0.75);
  HsiCube out = spectral_bin(c);
  ASSERT_EQ(out.bands, kBinnedBands);
  for (double v : out.data) EXPECT_EQ(v, 0.75);
  EXPECT_EQ(out.wavelength_start_nm, 938.0);
  EXPECT_EQ(out.wavelength_end_nm, 1662.0);

  HsiCube idx(1, 1, kRawBands);
  for (std::size_t b = 0; b < kRawBands; ++b) idx.at(0, 0, b) = static_cast<double>(b);
  out = spectral_bin(idx);
  for (std::size_t b = 0; b < kBinnedBands; ++b) EXPECT_EQ(out.at(0, 0, b), 10.5 + 2.0 * static_cast<double>(b));
  EXPECT_EQ(out.at(0, 0, 101), 212.5);
}

TEST(SpectralBin, PairwiseMeanPropertyAndPrecondition) {
  Rng rng(17);
  HsiCube c(3, 2, kRawBands);
  for (double& v : c.data) v = rng.uniform();
  const HsiCube out = spectral_bin(c);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t col = 0; col < 2; ++col)
      for (std::size_t b = 0; b < kBinnedBands; ++b)
        EXPECT_EQ(out.at(r, col, b), (c.at(r, col, 2 * b + 10) + c.at(r, col, 2 * b + 11)) / 2.0);
  EXPECT_THROW(spectral_bin(out), PreconditionError);
}

TEST(Otsu, BimodalImageSeparatesExactly) {
  HsiCube c(1, 6, 1);
  c.data = {0, 0, 0, 1, 1, 1};
  const GrainMask m = otsu_mask(c);
  EXPECT_EQ(m.values, (std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1}));
  c.data = {0, 0, 1, 1, 1, 1};
  EXPECT_EQ(otsu_threshold(c.data).bin, brute_force_otsu(c.data));
  EXPECT_EQ(otsu_mask(c).values, (std::vector<std::uint8_t>{0, 0, 1, 1, 1, 1}));
}

TEST(Otsu, ConstantImageIsDegenerate) {
  HsiCube c(2, 2, 3);
  std::fill(c.data.begin(), c.data.end(), 0.5);
  EXPECT_THROW(otsu_mask(c), DegenerateError);
}

TEST(Otsu, MatchesExhaustiveScanOnRandomSmallImages) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(15);
    std::vector<double> v(n);
    // Mix of continuous values and repeated levels to exercise ties.
    for (double& x : v) x = rng.uniform() < 0.3 ? static_cast<double>(rng.below(4)) : rng.uniform(0.0, 3.0);
    if (*std::min_element(v.begin(), v.end()) == *std::max_element(v.begin(), v.end())) continue;
    ASSERT_EQ(otsu_threshold(v).bin, brute_force_otsu(v)) << "trial " << trial;
  }
}

TEST(Otsu, AbsorbanceCubesKeepTheBrightClassAsGrain) {
  HsiCube r(1, 4, 2);
  r.data = {0.02, 0.5, 0.03, 0.6, 0.02, 0.5, 0.03, 0.6};
  const GrainMask a = otsu_mask(r);
  const GrainMask b = otsu_mask(to_pseudo_absorbance(r));
  EXPECT_EQ(a.values, (std::vector<std::uint8_t>{0, 1, 0, 1}));
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(otsu_mask(r, true).values, (std::vector<std::uint8_t>{1, 0, 1, 0}));
}

TEST(Crop, AnchorCounts) {
  CropSpec spec;
  for (std::size_t side : {128u, 256u, 200u, 191u, 192u, 500u}) {
    HsiCube c(side, side, 1);
    GrainMask m(side, side);
    std::fill(m.values.begin(), m.values.end(), 1);
    const std::size_t expected = ((side - 128) / 64 + 1) * ((side - 128) / 64 + 1);
    EXPECT_EQ(crop(c, m, spec).size(), expected) << side;
  }
  EXPECT_EQ(crop_anchor_count(128, spec), 1u);
  EXPECT_EQ(crop_anchor_count(256, spec), 3u);
  EXPECT_EQ(crop_anchor_count(200, spec), 2u);
  HsiCube small(100, 300, 1);
  EXPECT_THROW(crop(small, GrainMask(100, 300), spec), PreconditionError);
}

TEST(Crop, DensityFilterAndOrdering) {
  HsiCube c(128, 256, 2);
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] = static_cast<double>(i % 97);
  GrainMask m(128, 256);
  // Window at col 0 gets 1638 grain pixels (just under 10%), col 128 gets 1639.
  for (std::size_t k = 0; k < 1638; ++k) m.at(k / 64, k % 64) = 1;
  for (std::size_t k = 0; k < 1639; ++k) m.at(k / 64, 192 + k % 64) = 1;
  const auto rows = crop(c, m, CropSpec{});
  std::vector<int> cols;
  for (const auto& s : rows) {
    cols.push_back(s.col);
    EXPECT_GE(s.density, 0.1);
    EXPECT_EQ(s.mean_spectrum, mean_grain_spectrum(c, m, Window{0, static_cast<std::size_t>(s.col), 128}));
  }
  // col 64 window holds the 1639-pixel block only partially (0 pixels from the first block).
  const double d64 = grain_density(m, Window{0, 64, 128});
  EXPECT_LT(d64, 0.1);
  EXPECT_EQ(cols, (std::vector<int>{128}));
  EXPECT_EQ(rows[0].subsample_id, "r0_c128");
}

TEST(Crop, ThreadCountDoesNotChangeOutput) {
  Rng rng(5);
  HsiCube c(320, 320, 3);
  for (double& v : c.data) v = rng.uniform();
  GrainMask m(320, 320);
  for (auto& v : m.values) v = rng.uniform() < 0.4;
  const auto a = crop(c, m, CropSpec{}, 1), b = crop(c, m, CropSpec{}, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].subsample_id, b[i].subsample_id);
    EXPECT_EQ(a[i].mean_spectrum, b[i].mean_spectrum);
  }
}

TEST(GrainDensity, Examples) {
  std::vector<std::uint8_t> full(128 * 128, 1), none(128 * 128, 0), part(128 * 128, 0);
  std::fill(part.begin(), part.begin() + 1638, 1);
  EXPECT_EQ(grain_density(full), 1.0);
  EXPECT_EQ(grain_density(none), 0.0);
  EXPECT_EQ(grain_density(part), 1638.0 / 16384.0);
  EXPECT_LT(grain_density(part), 0.1);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> w(1 + rng.below(300));
    for (auto& v : w) v = rng.uniform() < 0.5;
    const double d = grain_density(w);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

TEST(MeanGrainSpectrum, Examples) {
  HsiCube c(2, 2, 3);
  for (std::size_t b = 0; b < 3; ++b) {
    c.at(0, 0, b) = 1.0 + static_cast<double>(b);
    c.at(1, 1, b) = -(1.0 + static_cast<double>(b));
    c.at(0, 1, b) = 100.0;
  }
  GrainMask one(2, 2);
  one.at(0, 0) = 1;
  EXPECT_EQ(mean_grain_spectrum(c, one, Window{0, 0, 2}), (std::vector<double>{1, 2, 3}));
  GrainMask two = one;
  two.at(1, 1) = 1;
  EXPECT_EQ(mean_grain_spectrum(c, two, Window{0, 0, 2}), (std::vector<double>{0, 0, 0}));
  EXPECT_THROW(mean_grain_spectrum(c, GrainMask(2, 2), Window{0, 0, 2}), PreconditionError);
}

TEST(MeanGrainSpectrum, MatchesBruteForce) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    HsiCube c(4, 4, 5);
    for (double& v : c.data) v = rng.normal();
    GrainMask m(4, 4);
    std::vector<std::size_t> picked;
    while (picked.size() < 5) {
      const std::size_t p = rng.below(16);
      if (std::find(picked.begin(), picked.end(), p) == picked.end()) picked.push_back(p);
    }
    for (auto p : picked) m.values[p] = 1;
    const auto got = mean_grain_spectrum(c, m, Window{0, 0, 4});
    for (std::size_t b = 0; b < 5; ++b) {
      double s = 0.0;
      for (auto p : picked) s += c.data[b * 16 + p];
      EXPECT_NEAR(got[b], s / 5.0, 1e-12);
    }
  }
}
