#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "metricuq/frechet.hpp"
#include "metricuq/rng.hpp"
#include "metricuq/simulate.hpp"

using namespace metricuq;

namespace {

std::vector<MetricPoint> scalar_points(const Eigen::VectorXd& y) {
  std::vector<MetricPoint> out;
  out.reserve(y.size());
  for (int i = 0; i < y.size(); ++i) {
    out.push_back(EuclideanPoint{Eigen::VectorXd::Constant(1, y[i])});
  }
  return out;
}

double scalar_prediction(const GlobalFrechetModel& model, double x) {
  return std::get<EuclideanPoint>(model.predict(Eigen::VectorXd::Constant(1, x)))
      .values[0];
}

// Fitted values from the normal equations with an explicit intercept column.
Eigen::VectorXd ols_fitted(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& X_query) {
  Eigen::MatrixXd design(X.rows(), X.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(X.cols()) = X;
  const Eigen::VectorXd beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * y);
  Eigen::MatrixXd query(X_query.rows(), X_query.cols() + 1);
  query.col(0).setOnes();
  query.rightCols(X_query.cols()) = X_query;
  return query * beta;
}

}  // namespace

TEST_CASE("fit on the centered toy") {
  Eigen::MatrixXd X(3, 1);
  X << -1, 0, 1;
  const auto model = GlobalFrechetModel::fit(X, scalar_points(Eigen::Vector3d(1, 2, 3)),
                                             SpaceDescriptor::euclidean(1));
  CHECK(model.predictor_mean()[0] == doctest::Approx(0.0));
  CHECK(model.cov_inverse()(0, 0) == doctest::Approx(1.5));  // ((1+0+1)/3)^-1
}

TEST_CASE("constant predictor column is rejected with a condition number") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 5, 2, 5, 3, 5, 4, 5;
  CHECK_THROWS_WITH_AS(
      GlobalFrechetModel::fit(X, scalar_points(Eigen::Vector4d(1, 2, 3, 4)),
                              SpaceDescriptor::euclidean(1)),
      doctest::Contains("condition number"), std::invalid_argument);
}

TEST_CASE("n <= p is rejected") {
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, 0, 1;
  CHECK_THROWS_AS(
      GlobalFrechetModel::fit(X, scalar_points(Eigen::Vector2d(1, 2)),
                              SpaceDescriptor::euclidean(1)),
      std::invalid_argument);
}

TEST_CASE("cov_inverse matches the analytic 2x2 inverse") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 2, 2, 1, 3, 5, 4, 3, 5, 9;
  const auto model = GlobalFrechetModel::fit(
      X, scalar_points(Eigen::VectorXd::LinSpaced(5, 0, 4)),
      SpaceDescriptor::euclidean(1));

  const Eigen::VectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean.transpose();
  const Eigen::Matrix2d cov = centered.transpose() * centered / 5.0;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  Eigen::Matrix2d inverse;
  inverse << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
  inverse /= det;
  CHECK((model.cov_inverse() - inverse).lpNorm<Eigen::Infinity>() < 1e-10);
  // The inverse actually inverts the training covariance.
  CHECK((model.cov_inverse() * cov - Eigen::Matrix2d::Identity())
            .lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("weights on the p=1 toy") {
  Eigen::MatrixXd X(3, 1);
  X << -1, 0, 1;
  const auto model = GlobalFrechetModel::fit(X, scalar_points(Eigen::Vector3d(5, 6, 7)),
                                             SpaceDescriptor::euclidean(1));

  // Centered query: every weight is 1.
  const Eigen::VectorXd at_mean = model.weights_at(Eigen::VectorXd::Zero(1));
  CHECK((at_mean - Eigen::VectorXd::Ones(3)).lpNorm<Eigen::Infinity>() < 1e-14);

  // Hand evaluation: 1 + X_i * (3/2) * x with variance 2/3.
  const Eigen::VectorXd at_one = model.weights_at(Eigen::VectorXd::Ones(1));
  CHECK(at_one.isApprox(Eigen::Vector3d(-0.5, 1.0, 2.5)));
}

TEST_CASE("weight mean identity holds at random queries") {
  Rng rng(3);
  Eigen::MatrixXd X(40, 3);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.normal();
  const auto model =
      GlobalFrechetModel::fit(X, scalar_points(y), SpaceDescriptor::euclidean(1));
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = 3.0 * rng.normal();
    CHECK(std::abs(model.weights_at(x).mean() - 1.0) <= 1e-12);
  }
}

TEST_CASE("scalar predictions reduce to least squares") {
  Rng rng(5);
  Eigen::MatrixXd X(60, 2);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = 2.0 + 0.5 * X(i, 0) - 1.5 * X(i, 1) + rng.normal();
  }
  const auto model =
      GlobalFrechetModel::fit(X, scalar_points(y), SpaceDescriptor::euclidean(1));

  Eigen::MatrixXd query(5, 2);
  for (int i = 0; i < query.size(); ++i) query.data()[i] = rng.normal();
  const Eigen::VectorXd expected = ols_fitted(X, y, query);
  for (int i = 0; i < query.rows(); ++i) {
    const double predicted =
        std::get<EuclideanPoint>(model.predict(query.row(i).transpose())).values[0];
    CHECK(std::abs(predicted - expected[i]) <= 1e-8);
  }
}

TEST_CASE("prediction at the predictor mean is the response mean") {
  Rng rng(9);
  Eigen::MatrixXd X(25, 2);
  Eigen::MatrixXd Y(25, 3);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  for (int i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
  std::vector<MetricPoint> points;
  for (int i = 0; i < 25; ++i) {
    points.push_back(EuclideanPoint{Y.row(i).transpose()});
  }
  const auto model =
      GlobalFrechetModel::fit(X, points, SpaceDescriptor::euclidean(3));
  const Eigen::VectorXd predicted = std::get<EuclideanPoint>(
      model.predict(X.colwise().mean().transpose())).values;
  CHECK((predicted - Y.colwise().mean().transpose()).lpNorm<Eigen::Infinity>()
        <= 1e-12);
}

TEST_CASE("identical responses predict themselves everywhere") {
  Eigen::MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  Eigen::VectorXd q(10);
  for (int i = 0; i < 10; ++i) q[i] = i * 0.5;
  std::vector<MetricPoint> points(4, QuantileFunction{q});
  const auto model =
      GlobalFrechetModel::fit(X, points, SpaceDescriptor::wasserstein(10));
  for (double x : {-5.0, 0.0, 2.7, 11.0}) {
    const auto predicted = std::get<QuantileFunction>(
        model.predict(Eigen::VectorXd::Constant(1, x)));
    CHECK((predicted.values - q).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("permutation of training rows leaves predictions unchanged") {
  Rng rng(13);
  Eigen::MatrixXd X(30, 2);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = X(i, 0) + rng.normal();
  }
  std::vector<int> order(30);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffler(99);
  shuffler.shuffle(order);
  Eigen::MatrixXd Xp(30, 2);
  Eigen::VectorXd yp(30);
  for (int i = 0; i < 30; ++i) {
    Xp.row(i) = X.row(order[i]);
    yp[i] = y[order[i]];
  }

  const auto a =
      GlobalFrechetModel::fit(X, scalar_points(y), SpaceDescriptor::euclidean(1));
  const auto b =
      GlobalFrechetModel::fit(Xp, scalar_points(yp), SpaceDescriptor::euclidean(1));
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.normal(), rng.normal();
    CHECK(std::abs(std::get<EuclideanPoint>(a.predict(x)).values[0] -
                   std::get<EuclideanPoint>(b.predict(x)).values[0]) <= 1e-10);
  }
}

TEST_CASE("adding a constant to every response shifts predictions by it") {
  Rng rng(17);
  Eigen::MatrixXd X(20, 2);
  Eigen::MatrixXd Y(20, 2);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  for (int i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
  const Eigen::Vector2d shift(3.0, -1.0);

  std::vector<MetricPoint> points, shifted;
  for (int i = 0; i < 20; ++i) {
    points.push_back(EuclideanPoint{Y.row(i).transpose()});
    shifted.push_back(EuclideanPoint{Y.row(i).transpose() + shift});
  }
  const auto base =
      GlobalFrechetModel::fit(X, points, SpaceDescriptor::euclidean(2));
  const auto moved =
      GlobalFrechetModel::fit(X, shifted, SpaceDescriptor::euclidean(2));
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.normal(), rng.normal();
    const Eigen::VectorXd lhs = std::get<EuclideanPoint>(moved.predict(x)).values;
    const Eigen::VectorXd rhs =
        std::get<EuclideanPoint>(base.predict(x)).values + shift;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("predict matches the generic barycenter route") {
  Rng rng(21);
  Eigen::MatrixXd X(15, 2);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  std::vector<MetricPoint> points;
  const auto ws = SpaceDescriptor::wasserstein(12);
  for (int i = 0; i < 15; ++i) {
    Eigen::VectorXd q(12);
    double level = rng.normal();
    for (int g = 0; g < 12; ++g) {
      level += std::abs(rng.normal());
      q[g] = level;
    }
    points.push_back(QuantileFunction{q});
  }
  const auto model = GlobalFrechetModel::fit(X, points, ws);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(2);
    x << rng.normal(), rng.normal();
    const MetricPoint direct = model.predict(x);
    const MetricPoint generic =
        weighted_barycenter(points, model.weights_at(x), ws);
    CHECK((flatten(direct) - flatten(generic)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("removing a duplicated column reproduces the deduplicated fit") {
  Rng rng(23);
  Eigen::MatrixXd X2(30, 2);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    X2(i, 0) = rng.normal();
    X2(i, 1) = rng.normal();
    y[i] = X2(i, 0) - 2.0 * X2(i, 1) + rng.normal();
  }
  Eigen::MatrixXd X3(30, 3);
  X3.leftCols(2) = X2;
  X3.col(2) = X2.col(0);  // duplicate of the first column

  // The 3-column matrix cannot back a full fit (singular covariance), but
  // the reduced fit obtained by deleting the duplicate must equal both the
  // direct 2-column fit and the least-squares oracle.
  const auto dedup =
      GlobalFrechetModel::fit(X2, scalar_points(y), SpaceDescriptor::euclidean(1));
  Eigen::MatrixXd query(8, 3);
  for (int i = 0; i < query.size(); ++i) query.data()[i] = rng.normal();
  const Eigen::VectorXd oracle = ols_fitted(X2, y, query.leftCols(2));
  for (int i = 0; i < query.rows(); ++i) {
    const MetricPoint reduced =
        predict_without_variable(dedup, X3, 2, query.row(i).transpose());
    const double value = std::get<EuclideanPoint>(reduced).values[0];
    CHECK(std::abs(value - oracle[i]) <= 1e-8);
    const double direct = std::get<EuclideanPoint>(
        dedup.predict(query.row(i).head(2).transpose())).values[0];
    CHECK(std::abs(value - direct) <= 1e-10);
  }
}

TEST_CASE("reduced model of a p=2 fit equals the single-column fit") {
  Rng rng(29);
  Eigen::MatrixXd X(20, 2);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = X(i, 0) + rng.normal();
  }
  const auto full =
      GlobalFrechetModel::fit(X, scalar_points(y), SpaceDescriptor::euclidean(1));
  const auto direct = GlobalFrechetModel::fit(
      X.leftCols(1), scalar_points(y), SpaceDescriptor::euclidean(1));
  for (double x : {-1.0, 0.0, 0.5, 2.0}) {
    Eigen::VectorXd q(2);
    q << x, 123.0;  // second coordinate is dropped
    const double reduced =
        std::get<EuclideanPoint>(predict_without_variable(full, X, 1, q)).values[0];
    CHECK(std::abs(reduced - scalar_prediction(direct, x)) <= 1e-12);
  }
}

TEST_CASE("p=1 model refuses a reduced fit") {
  Eigen::MatrixXd X(5, 1);
  X << 1, 2, 3, 4, 5;
  const auto model = GlobalFrechetModel::fit(
      X, scalar_points(Eigen::VectorXd::LinSpaced(5, 0, 4)),
      SpaceDescriptor::euclidean(1));
  CHECK_THROWS_AS(predict_without_variable(model, X, 0, Eigen::VectorXd::Ones(1)),
                  std::invalid_argument);
}

TEST_CASE("irrelevant-variable predictions approach the full model with n") {
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.grid_size = 40;
  config.series_length = 120;

  // Only the first coordinate is active, so dropping the last one changes
  // predictions less and less as the fits tighten.
  auto mean_gap = [&](int n, std::uint64_t seed) {
    const auto data = generate_distributional(config, n, seed, true);
    const auto full = GlobalFrechetModel::fit(
        data.X, data.Y, SpaceDescriptor::wasserstein(config.grid_size));
    const auto reduced = fit_without_variable(full, data.X, config.p - 1);
    Rng rng(seed + 1);
    double total = 0.0;
    const int queries = 50;
    for (int i = 0; i < queries; ++i) {
      Eigen::VectorXd x(config.p);
      for (int l = 0; l < config.p; ++l) x[l] = rng.normal();
      total += distance_d1(full.predict(x),
                           reduced.predict(drop_entry(x, config.p - 1)),
                           full.space());
    }
    return total / queries;
  };

  const double small = mean_gap(150, 101);
  const double large = mean_gap(3000, 102);
  CHECK(large < small);
  CHECK(large < 0.5 * small);
}
