#include <gtest/gtest.h>

#include "support.hpp"

using namespace chemocal;
using testing_support::random_matrix;

namespace {

struct Latent {
  Matrix x, y;
};

/// X = T P' with A latent columns in T; Y = T C.
Latent latent_data(Rng& rng, Eigen::Index n, Eigen::Index b, Eigen::Index a, Eigen::Index m) {
  Latent d;
  const Matrix t = random_matrix(rng, n, a);
  const Matrix p = random_matrix(rng, b, a);
  const Matrix c = random_matrix(rng, a, m);
  d.x = t * p.transpose();
  d.y = t * c;
  return d;
}

/// PLS1 fit as least squares over the Krylov space spanned by
/// s, S s, S^2 s, ... with S = Xc'Xc and s = Xc'yc.
Vector krylov_fit(const Matrix& x, const Vector& y, int a) {
  Matrix xc = x;
  xc.rowwise() -= x.colwise().mean();
  const Vector yc = y.array() - y.mean();
  const Matrix s = xc.transpose() * xc;
  Matrix k(x.cols(), a);
  k.col(0) = xc.transpose() * yc;
  for (int j = 1; j < a; ++j) k.col(j) = s * k.col(j - 1);
  const Matrix basis = Eigen::HouseholderQR<Matrix>(k).householderQ() * Matrix::Identity(x.cols(), a);
  const Matrix z = xc * basis;
  const Vector coef = z.colPivHouseholderQr().solve(yc);
  return (z * coef).array() + y.mean();
}

double rel_err(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(1e-300, want.norm());
}

}  // namespace

TEST(Pls, RankOneExactFit) {
  Rng rng(10);
  const Latent d = latent_data(rng, 20, 15, 1, 1);
  const PlsModel m = fit_pls(d.x, d.y, 1);
  EXPECT_LT(rel_err(predict(m, d.x), d.y), 1e-8);
  EXPECT_EQ(m.n_components, 1);
  EXPECT_EQ(m.bands(), 15);
}

TEST(Pls, RecoversLatentRankData) {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index a = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::Index n = 10 + static_cast<Eigen::Index>(rng.below(30));
    const Eigen::Index b = 5 + static_cast<Eigen::Index>(rng.below(40));
    const Latent d = latent_data(rng, n, b, a, m);
    const PlsModel model = fit_pls(d.x, d.y, static_cast<int>(a));
    Matrix yc = d.y;
    yc.rowwise() -= d.y.colwise().mean();
    EXPECT_LT((predict(model, d.x) - d.y).norm() / yc.norm(), 1e-6) << "a=" << a << " m=" << m;
  }
}

TEST(Pls, TwoOrthogonalFactorsDriveTwoResponses) {
  Rng rng(12);
  const Eigen::Index n = 40, b = 30;
  Matrix t = random_matrix(rng, n, 2);
  Matrix p = Matrix::Zero(b, 2);
  p.block(0, 0, 15, 1).setOnes();
  p.block(15, 1, 15, 1).setOnes();
  const Matrix x = t * p.transpose();
  const Matrix y = t;
  const PlsModel model = fit_pls(x, y, 2);
  const Matrix yhat = predict(model, x);
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double scale = (y.col(c).array() - y.col(c).mean()).matrix().norm();
    EXPECT_LT((yhat.col(c) - y.col(c)).norm() / scale, 1e-6);
  }
}

TEST(Pls, Pls1MatchesKrylovLeastSquares) {
  Rng rng(13);
  for (int trial = 0; trial < 80; ++trial) {
    const Eigen::Index n = 12 + static_cast<Eigen::Index>(rng.below(30));
    const Eigen::Index b = 4 + static_cast<Eigen::Index>(rng.below(20));
    const Matrix x = random_matrix(rng, n, b);
    const Vector y = random_matrix(rng, n, 1).col(0) + x.col(0);
    const int a = 1 + static_cast<int>(rng.below(3));
    const PlsModel m = fit_pls(x, y, a);
    const Vector got = predict(m, x).col(0);
    EXPECT_LT(rel_err(got, krylov_fit(x, y, a)), 1e-8) << "trial " << trial;
  }
}

TEST(Pls, ScoresAreOrthogonal) {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Matrix x = random_matrix(rng, 40, 25);
    const Matrix y = x.leftCols(m) + 0.5 * random_matrix(rng, 40, m);
    const PlsPath path = fit_pls_path(x, y, 8);
    ASSERT_GE(path.effective(), 2);
    for (int i = 0; i < path.effective(); ++i)
      for (int j = i + 1; j < path.effective(); ++j) {
        const double c = path.scores.col(i).normalized().dot(path.scores.col(j).normalized());
        EXPECT_LT(std::abs(c), 1e-8);
      }
  }
}

TEST(Pls, TrainingRmseNonIncreasingInComponents) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Matrix x = random_matrix(rng, 30, 20);
    const Matrix y = random_matrix(rng, 30, m) + x.leftCols(m);
    const PlsPath path = fit_pls_path(x, y, 15);
    double prev = std::numeric_limits<double>::infinity();
    for (int a = 1; a <= 15; ++a) {
      Matrix yhat = path.pipeline.apply(x) * path.coefficients(a);
      yhat.rowwise() += path.y_mean.transpose();
      const double r = matrix_rmse(y, yhat);
      EXPECT_LE(r, prev + 1e-12) << "a=" << a;
      prev = r;
    }
  }
}

TEST(Pls, PredictIsAffineAndRowwise) {
  Rng rng(16);
  const Matrix x = random_matrix(rng, 25, 12);
  const Matrix y = random_matrix(rng, 25, 2) + x.leftCols(2);
  const PlsModel m = fit_pls(x, y, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x1 = random_matrix(rng, 1, 12), x2 = random_matrix(rng, 1, 12);
    const double alpha = rng.uniform(-2, 2);
    const Matrix lhs = predict(m, alpha * x1 + (1 - alpha) * x2);
    const Matrix rhs = alpha * predict(m, x1) + (1 - alpha) * predict(m, x2);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
  }
  const Matrix batch = predict(m, x);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    EXPECT_LT((predict(m, x.row(r)) - batch.row(r)).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix at_mean = predict(m, Matrix(m.x_mean.transpose()));
  EXPECT_LT((at_mean.row(0).transpose() - m.y_mean).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pls, DeterministicBitwise) {
  Rng rng(17);
  const Matrix x = random_matrix(rng, 30, 20);
  const Matrix y = random_matrix(rng, 30, 3);
  const PlsModel a = fit_pls(x, y, 5, PreprocPipeline::preset("snv_sg"));
  const PlsModel b = fit_pls(x, y, 5, PreprocPipeline::preset("snv_sg"));
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.x_weights, b.x_weights);
}

TEST(Pls, WeightSignConvention) {
  Rng rng(18);
  const Matrix x = random_matrix(rng, 30, 10);
  const PlsPath path = fit_pls_path(x, Matrix(-x.col(3)), 3);
  for (int a = 0; a < path.effective(); ++a) {
    Eigen::Index big = 0;
    path.weights.col(a).cwiseAbs().maxCoeff(&big);
    EXPECT_GT(path.weights(big, a), 0.0);
  }
}

TEST(Pls, Errors) {
  Rng rng(19);
  const Matrix x = random_matrix(rng, 10, 5);
  const Matrix y = random_matrix(rng, 10, 1);
  EXPECT_THROW(fit_pls(x, y, 0), PreconditionError);
  EXPECT_THROW(fit_pls(x, y, 6), PreconditionError);
  EXPECT_THROW(fit_pls(random_matrix(rng, 4, 20), Matrix(random_matrix(rng, 4, 1)), 4), PreconditionError);
  EXPECT_THROW(fit_pls(x, Matrix(random_matrix(rng, 9, 1)), 1), PreconditionError);
  Matrix bad = x;
  bad(2, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(fit_pls(bad, y, 1), PreconditionError);
  const Matrix flat = Matrix::Constant(10, 5, 2.0);
  EXPECT_THROW(fit_pls(flat, y, 1), DegenerateError);
  const PlsModel m = fit_pls(x, y, 2);
  EXPECT_THROW(predict(m, random_matrix(rng, 3, 4)), PreconditionError);
  EXPECT_THROW(classify(m, x), PreconditionError);
}

TEST(Pls, ZeroComponentPathPredictsTrainingMean) {
  Rng rng(20);
  const Matrix x = random_matrix(rng, 12, 6);
  const Matrix y = random_matrix(rng, 12, 2);
  const PlsPath path = fit_pls_path(x, y, 2);
  const auto preds = predict_path(path, x, {0});
  for (Eigen::Index r = 0; r < 12; ++r)
    EXPECT_LT((preds[0].row(r) - y.colwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pls, JsonRoundTripIsExact) {
  Rng rng(21);
  const Matrix x = random_matrix(rng, 30, 20);
  const Matrix y = random_matrix(rng, 30, 2);
  const PlsModel m = fit_pls(x, y, 4, PreprocPipeline::preset("snv_sg"));
  const PlsModel back = model_from_json(Json::parse(to_json_text(model_to_json(m))));
  EXPECT_EQ(back.coefficients, m.coefficients);
  EXPECT_EQ(predict(back, x), predict(m, x));
  Json broken = model_to_json(m);
  broken["bands"] = 19;
  EXPECT_THROW(model_from_json(broken), FormatError);
}

TEST(SelectComponents, ExactRankOnePicksOne) {
  Rng rng(22);
  const Latent d = latent_data(rng, 40, 12, 1, 1);
  EXPECT_EQ(select_components(d.x, d.y, interleaved_folds(40, 5), 5, {1, 2, 3}), 1);
}

TEST(SelectComponents, SingleCandidateAndEmptyGrid) {
  Rng rng(23);
  const Matrix x = random_matrix(rng, 40, 12);
  const Matrix y = random_matrix(rng, 40, 1);
  EXPECT_EQ(select_components(x, y, interleaved_folds(40, 5), 5, {5}), 5);
  EXPECT_THROW(select_components(x, y, interleaved_folds(40, 5), 5, {}), PreconditionError);
}

TEST(SelectComponents, PureNoiseUsuallyPicksGridMinimum) {
  Rng rng(24);
  int minimum = 0;
  const int trials = 40;
  for (int trial = 0; trial < trials; ++trial) {
    const Matrix x = random_matrix(rng, 50, 20);
    const Matrix y = random_matrix(rng, 50, 1);
    minimum += select_components(x, y, interleaved_folds(50, 5), 5, {1, 2, 3, 4, 5, 6}) == 1;
  }
  EXPECT_GE(minimum, trials * 3 / 4);
}

TEST(SelectComponents, ScoresMatchManualCrossValidation) {
  Rng rng(25);
  const Matrix x = random_matrix(rng, 30, 8);
  const Matrix y = x.col(1) + 0.3 * random_matrix(rng, 30, 1);
  const auto folds = interleaved_folds(30, 3);
  std::vector<ComponentScore> scores;
  select_components(x, y, folds, 3, {1, 2}, Task::regression, "center", 2, &scores);
  ASSERT_EQ(scores.size(), 2u);
  for (const auto& s : scores) {
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      std::vector<Eigen::Index> tr, va;
      for (Eigen::Index i = 0; i < 30; ++i) (folds[static_cast<std::size_t>(i)] == k ? va : tr).push_back(i);
      const PlsModel m = fit_pls(Matrix(x(tr, Eigen::all)), Matrix(y(tr, Eigen::all)), s.components);
      total += matrix_rmse(y(va, Eigen::all), predict(m, x(va, Eigen::all)));
    }
    EXPECT_NEAR(s.score, total / 3.0, 1e-12);
  }
}

TEST(PlsDa, SeparableClassesAreLearned) {
  Rng rng(26);
  const Eigen::Index n = 40;
  Matrix x = 0.1 * random_matrix(rng, n, 10);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = i % 2 ? 7 : 3;
    x.row(i) += (i % 2 ? 1.0 : -1.0) * Eigen::RowVectorXd::LinSpaced(10, 1, 2);
  }
  const PlsModel m = fit_plsda(x, labels, 1);
  EXPECT_EQ(m.task, Task::discriminant);
  EXPECT_EQ(m.classes, (std::vector<int>{3, 7}));
  EXPECT_EQ(m.responses(), 2);
  EXPECT_EQ(classify(m, x), labels);
}

TEST(PlsDa, RowPermutationLeavesCoefficientsUnchanged) {
  Rng rng(27);
  const Matrix x = random_matrix(rng, 30, 8);
  std::vector<int> labels(30);
  for (auto& l : labels) l = static_cast<int>(rng.below(3));
  labels[0] = 0, labels[1] = 1, labels[2] = 2;
  std::vector<Eigen::Index> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<int> plabels(30);
  for (std::size_t i = 0; i < 30; ++i) plabels[i] = labels[static_cast<std::size_t>(perm[i])];
  const PlsModel a = fit_plsda(x, labels, 3);
  const PlsModel b = fit_plsda(x(perm, Eigen::all), plabels, 3);
  EXPECT_LT((a.coefficients - b.coefficients).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(PlsDa, SingleClassRejected) {
  Rng rng(28);
  EXPECT_THROW(fit_plsda(random_matrix(rng, 10, 4), std::vector<int>(10, 1), 1), PreconditionError);
}

TEST(Classify, ArgmaxAndTieRule) {
  PlsModel m;
  m.task = Task::discriminant;
  m.classes = {4, 9};
  m.coefficients = Matrix::Zero(3, 2);
  m.x_mean = Vector::Zero(3);
  m.pipeline = PreprocPipeline::preset("none");
  m.y_mean = (Vector(2) << 0.9, 0.1).finished();
  EXPECT_EQ(classify(m, Matrix::Zero(1, 3)), std::vector<int>{4});
  m.y_mean = (Vector(2) << 0.5, 0.5).finished();
  EXPECT_EQ(classify(m, Matrix::Zero(1, 3)), std::vector<int>{4});
  m.y_mean = (Vector(2) << 0.1, 0.9).finished();
  EXPECT_EQ(classify(m, Matrix::Zero(1, 3)), std::vector<int>{9});
}

TEST(Classify, AgreesWithBruteForceArgmax) {
  Rng rng(29);
  const Matrix x = random_matrix(rng, 60, 10);
  std::vector<int> labels(60);
  for (auto& l : labels) l = static_cast<int>(rng.below(4));
  const PlsModel m = fit_plsda(x, labels, 4);
  const Matrix probe = random_matrix(rng, 200, 10);
  const Matrix scores = predict(m, probe);
  const auto got = classify(m, probe);
  for (Eigen::Index r = 0; r < 200; ++r) {
    int best = 0;
    for (int c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    EXPECT_EQ(got[static_cast<std::size_t>(r)], m.classes[static_cast<std::size_t>(best)]);
  }
}
