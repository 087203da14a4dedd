#include "metricuq/frechet.hpp"

#include <Eigen/Eigenvalues>
#include <sstream>
#include <stdexcept>

namespace metricuq {

GlobalFrechetModel GlobalFrechetModel::fit(const Eigen::MatrixXd& X,
                                           std::vector<MetricPoint> responses,
                                           const SpaceDescriptor& space) {
  validate_space(space);
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (static_cast<int>(responses.size()) != n) {
    throw std::invalid_argument(
        "fit: " + std::to_string(responses.size()) + " responses for " +
        std::to_string(n) + " predictor rows");
  }
  if (p < 1 || n <= p) {
    throw std::invalid_argument("fit: need n > p >= 1, got n=" +
                                std::to_string(n) + " p=" + std::to_string(p));
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("fit: predictor matrix has non-finite entries");
  }

  GlobalFrechetModel model;
  model.space_ = space;
  model.predictors_ = X;
  model.mean_ = X.colwise().mean();
  model.centered_predictors_ = X.rowwise() - model.mean_.transpose();
  // n-denominator sample covariance: with it, scalar predictions coincide
  // with least-squares fitted values exactly.
  const Eigen::MatrixXd cov = model.centered_predictors_.transpose() *
                              model.centered_predictors_ / n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(cov);
  const double max_eig = eigs.eigenvalues().maxCoeff();
  const double min_eig = eigs.eigenvalues().minCoeff();
  if (!(min_eig > 0.0) || min_eig < 1e-12 * max_eig) {
    std::ostringstream msg;
    msg << "fit: singular predictor covariance (condition number ";
    if (min_eig > 0.0) {
      msg << max_eig / min_eig;
    } else {
      msg << "infinite";
    }
    msg << ")";
    throw std::invalid_argument(msg.str());
  }
  model.cov_inverse_ =
      eigs.eigenvectors() *
      eigs.eigenvalues().cwiseInverse().asDiagonal() *
      eigs.eigenvectors().transpose();

  model.response_matrix_.resize(n, space.flat_size());
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd flat = flatten(responses[i]);
    if (flat.size() != space.flat_size()) {
      throw std::invalid_argument("fit: response " + std::to_string(i) +
                                  " does not match the space dimensions");
    }
    model.response_matrix_.row(i) = flat;
  }
  model.responses_ = std::move(responses);
  return model;
}

Eigen::VectorXd GlobalFrechetModel::weights_at(const Eigen::VectorXd& x) const {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("weights_at: query has length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(mean_.size()));
  }
  // 1 + (X_i - mean)' cov_inverse (x - mean) for every training row.
  const Eigen::VectorXd direction = cov_inverse_ * (x - mean_);
  Eigen::VectorXd weights = centered_predictors_ * direction;
  weights.array() += 1.0;
  return weights;
}

MetricPoint GlobalFrechetModel::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd weights = weights_at(x);
  // Same average weighted_barycenter computes, using the cached matrix.
  Eigen::VectorXd accum =
      response_matrix_.transpose() * weights / weights.sum();
  switch (space_.kind) {
    case SpaceKind::euclidean:
      return EuclideanPoint{std::move(accum)};
    case SpaceKind::wasserstein: {
      Eigen::VectorXd projected = isotonic_projection(accum);
      if (space_.bounds) {
        projected = projected.cwiseMax(space_.bounds->first)
                        .cwiseMin(space_.bounds->second);
      }
      return QuantileFunction{std::move(projected)};
    }
    case SpaceKind::laplacian: {
      const MetricPoint raw = unflatten(accum, space_);
      return LaplacianGraph{laplacian_projection(
          std::get<LaplacianGraph>(raw).matrix, space_.edge_bound)};
    }
  }
  throw std::logic_error("predict: unreachable space kind");
}

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& X, int j) {
  Eigen::MatrixXd out(X.rows(), X.cols() - 1);
  out.leftCols(j) = X.leftCols(j);
  out.rightCols(X.cols() - 1 - j) = X.rightCols(X.cols() - 1 - j);
  return out;
}

Eigen::VectorXd drop_entry(const Eigen::VectorXd& x, int j) {
  Eigen::VectorXd out(x.size() - 1);
  out.head(j) = x.head(j);
  out.tail(x.size() - 1 - j) = x.tail(x.size() - 1 - j);
  return out;
}

GlobalFrechetModel fit_without_variable(const GlobalFrechetModel& model,
                                        const Eigen::MatrixXd& X, int j) {
  const int p = static_cast<int>(X.cols());
  if (p < 2) {
    throw std::invalid_argument("fit_without_variable: no reduced model for p=1");
  }
  if (j < 0 || j >= p) {
    throw std::invalid_argument("fit_without_variable: column index " +
                                std::to_string(j) + " out of range for p=" +
                                std::to_string(p));
  }
  if (X.rows() != model.sample_size()) {
    throw std::invalid_argument(
        "fit_without_variable: X rows do not match the model's training size");
  }
  return GlobalFrechetModel::fit(drop_column(X, j), model.training_responses(),
                                 model.space());
}

MetricPoint predict_without_variable(const GlobalFrechetModel& model,
                                     const Eigen::MatrixXd& X, int j,
                                     const Eigen::VectorXd& x) {
  const GlobalFrechetModel reduced = fit_without_variable(model, X, j);
  return reduced.predict(drop_entry(x, j));
}

}  // namespace metricuq
