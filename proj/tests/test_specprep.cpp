#include <gtest/gtest.h>

#include "support.hpp"

using namespace chemocal;

namespace {

Vector poly_spectrum(std::size_t n, const std::vector<double>& coef, double shift = 0.0) {
  Vector x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) + shift;
    double v = 0.0, p = 1.0;
    for (double c : coef) v += c * p, p *= t;
    x[static_cast<Eigen::Index>(i)] = v;
  }
  return x;
}

}  // namespace

TEST(Snv, HandExampleAndDegenerate) {
  Vector x(3);
  x << 1, 2, 3;
  const Vector s = snv(x);
  EXPECT_DOUBLE_EQ(s[0], -1.0);
  EXPECT_DOUBLE_EQ(s[1], 0.0);
  EXPECT_DOUBLE_EQ(s[2], 1.0);
  Vector flat = Vector::Constant(3, 5.0);
  EXPECT_THROW(snv(flat), DegenerateError);
}

TEST(Snv, RowsAreStandardizedAndIdempotent) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(200));
    Vector x(n);
    const double scale = std::pow(10.0, rng.uniform(-3, 3)), offset = rng.uniform(-100, 100);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = offset + scale * rng.normal();
    const Vector s = snv(x);
    const double mean = s.mean();
    const double sd = std::sqrt((s.array() - mean).square().sum() / static_cast<double>(n - 1));
    EXPECT_LT(std::abs(mean), 1e-12);
    EXPECT_LT(std::abs(sd - 1.0), 1e-12);
    EXPECT_LT((snv(s) - s).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SavGol, ClassicCoefficientTable) {
  // Second-derivative weights of the 7-point quadratic fit.
  const double expected[7] = {5, 0, -3, -4, -3, 0, 5};
  const Vector w = savgol_coefficients(7, 2, 2, 3);
  for (int j = 0; j < 7; ++j) EXPECT_NEAR(w[j], expected[j] / 42.0, 1e-14);
  // Smoothing weights of the 5-point quadratic fit.
  const double smooth[5] = {-3, 12, 17, 12, -3};
  const Vector s = savgol_coefficients(5, 2, 0, 2);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(s[j], smooth[j] / 35.0, 1e-14);
}

TEST(SavGol, ConstantLinearAndSquare) {
  const Vector c = savgol(Vector::Constant(102, 3.25));
  EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-12);
  const Vector lin = savgol(poly_spectrum(102, {0.0, 1.0}));
  EXPECT_LT(lin.cwiseAbs().maxCoeff(), 1e-9);
  const Vector sq = savgol(poly_spectrum(102, {0.0, 0.0, 1.0}));
  for (Eigen::Index i = 3; i < 99; ++i) EXPECT_NEAR(sq[i], 2.0, 1e-9);
  EXPECT_EQ(sq.size(), 102);
}

TEST(SavGol, ReproducesDerivativesOfLowDegreePolynomials) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int poly = 2 + static_cast<int>(rng.below(3));
    const int window = 2 * (poly / 2 + 1 + static_cast<int>(rng.below(3))) + 1;
    const int deriv = static_cast<int>(rng.below(static_cast<std::uint64_t>(poly) + 1));
    const int degree = static_cast<int>(rng.below(static_cast<std::uint64_t>(poly) + 1));
    std::vector<double> coef(static_cast<std::size_t>(degree) + 1);
    for (double& c : coef) c = rng.uniform(-1, 1);
    const std::size_t n = static_cast<std::size_t>(window) + 20;
    const double shift = -static_cast<double>(n) / 2.0;  // keep magnitudes moderate
    const Vector y = SavGolFilter(window, poly, deriv)(poly_spectrum(n, coef, shift));
    // Exact derivative of the polynomial at each point, including edges.
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) + shift;
      double d = 0.0;
      for (int k = deriv; k <= degree; ++k) {
        double falling = 1.0;
        for (int j = 0; j < deriv; ++j) falling *= k - j;
        d += coef[static_cast<std::size_t>(k)] * falling * std::pow(t, k - deriv);
      }
      ASSERT_NEAR(y[static_cast<Eigen::Index>(i)], d, 1e-9 * std::max(1.0, std::abs(d)))
          << "window " << window << " poly " << poly << " deriv " << deriv << " i " << i;
    }
  }
}

TEST(SavGol, Linearity) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x(102), y(102);
    for (Eigen::Index i = 0; i < 102; ++i) x[i] = rng.normal(), y[i] = rng.normal();
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    const Vector lhs = savgol(a * x + b * y), rhs = a * savgol(x) + b * savgol(y);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SavGol, InvalidParameters) {
  EXPECT_THROW(SavGolFilter(6, 2, 2), PreconditionError);
  EXPECT_THROW(SavGolFilter(7, 7, 2), PreconditionError);
  EXPECT_THROW(SavGolFilter(7, 2, 3), PreconditionError);
  EXPECT_THROW(savgol(Vector::Zero(6)), PreconditionError);
}

TEST(Center, HandArithmeticAndTrainingSums) {
  Matrix train(2, 2);
  train << 1, 1, 3, 3;
  const CenterStats st = fit_center(train, Vector(Vector::Zero(2)));
  EXPECT_EQ(st.x_mean, (Vector(2) << 2, 2).finished());
  auto p = PreprocPipeline::preset("center");
  Matrix y(2, 1);
  y << 10, 14;
  const Matrix centered = p.fit_transform(train, y);
  EXPECT_EQ(p.y_mean(1)[0], 12.0);
  Matrix probe(1, 2);
  probe << 2, 2;
  EXPECT_EQ(p.apply(probe), Matrix::Zero(1, 2));

  Rng rng(4);
  const Matrix x = testing_support::random_matrix(rng, 50, 8).array() + 3.0;
  auto q = PreprocPipeline::preset("center");
  const Matrix xc = q.fit_transform(x, Matrix::Zero(50, 1));
  EXPECT_LT(xc.colwise().sum().cwiseAbs().maxCoeff(), 1e-9 * 50);
  EXPECT_THROW(fit_center(Matrix(0, 3), Vector(0)), PreconditionError);
}

TEST(Center, TestRowsUseTrainingStatistics) {
  Rng rng(5);
  const Matrix train = testing_support::random_matrix(rng, 30, 4);
  const Matrix test = testing_support::random_matrix(rng, 10, 4).array() + 5.0;
  auto p = PreprocPipeline::preset("center");
  p.fit_transform(train, Matrix::Zero(30, 1));
  const Matrix with_train = p.apply(test);
  Matrix with_test = test;
  with_test.rowwise() -= test.colwise().mean();
  EXPECT_GT((with_train - with_test).cwiseAbs().maxCoeff(), 1.0);
  Matrix expect = test;
  expect.rowwise() -= train.colwise().mean();
  EXPECT_LT((with_train - expect).cwiseAbs().maxCoeff(), 1e-12);
  // Stored statistics are not refitted by apply.
  const Vector before = p.x_mean(4);
  p.apply(test * 3.0);
  EXPECT_EQ(p.x_mean(4), before);
}

TEST(Pipeline, EmptyIsIdentityAndUnfittedCenteringFails) {
  Rng rng(6);
  const Matrix x = testing_support::random_matrix(rng, 4, 9);
  EXPECT_EQ(apply_pipeline(PreprocPipeline::preset("none"), x), x);
  EXPECT_THROW(apply_pipeline(PreprocPipeline::preset("center"), x), PreconditionError);
  auto p = PreprocPipeline::preset("snv_sg");
  EXPECT_FALSE(p.fitted());
  p.fit_transform(testing_support::random_matrix(rng, 6, 9), Matrix::Zero(6, 1));
  EXPECT_TRUE(p.fitted());
  EXPECT_THROW(p.apply(testing_support::random_matrix(rng, 2, 8)), PreconditionError);
  EXPECT_THROW(PreprocPipeline::preset("msc"), PreconditionError);
}

TEST(Pipeline, SnvSavGolRemovesScaleAndOffset) {
  Rng rng(7);
  const PreprocPipeline p({SnvStep{}, SavGolStep{7, 2, 2}});
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x(1, 102);
    for (Eigen::Index i = 0; i < 102; ++i) x(0, i) = rng.normal() + 0.01 * static_cast<double>(i);
    const Matrix a = p.apply(x), b = p.apply((3.0 * x).array() + 5.0);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pipeline, JsonRoundTripPreservesFittedStatistics) {
  Rng rng(8);
  auto p = PreprocPipeline::preset("snv_sg");
  const Matrix x = testing_support::random_matrix(rng, 12, 20);
  p.fit_transform(x, testing_support::random_matrix(rng, 12, 1));
  const auto back = PreprocPipeline::from_json(nlohmann::ordered_json::parse(to_json_text(p.to_json())));
  EXPECT_EQ(back.apply(x), p.apply(x));
  EXPECT_EQ(back.y_mean(1), p.y_mean(1));
}
