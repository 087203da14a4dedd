#pragma once

#include <Eigen/Dense>
#include <vector>

#include "metricuq/space.hpp"

namespace metricuq {

// Linear-regression-style conditional Fréchet mean estimator.  Queries are
// answered by the signed-weight barycenter of the stored training responses
// with weights 1 + (X_i - mean)' cov_inverse (x - mean); for scalar Euclidean
// responses this reproduces ordinary least squares fitted values.
//
// The fitted model is immutable; predict and weights_at are reentrant.
class GlobalFrechetModel {
 public:
  // X is n x p with n > p; throws if the sample covariance is singular or
  // numerically close to it.
  static GlobalFrechetModel fit(const Eigen::MatrixXd& X,
                                std::vector<MetricPoint> responses,
                                const SpaceDescriptor& space);

  const Eigen::VectorXd& predictor_mean() const { return mean_; }
  const Eigen::MatrixXd& cov_inverse() const { return cov_inverse_; }
  const Eigen::MatrixXd& training_predictors() const { return predictors_; }
  const std::vector<MetricPoint>& training_responses() const { return responses_; }
  const SpaceDescriptor& space() const { return space_; }
  int sample_size() const { return static_cast<int>(responses_.size()); }
  int predictor_dim() const { return static_cast<int>(mean_.size()); }

  // Signed weights at a query point; their mean is 1 by construction.
  Eigen::VectorXd weights_at(const Eigen::VectorXd& x) const;

  MetricPoint predict(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_inverse_;
  std::vector<MetricPoint> responses_;
  Eigen::MatrixXd predictors_;
  // Centered training predictors and flattened responses, cached so weight
  // and barycenter evaluation are matrix products.
  Eigen::MatrixXd centered_predictors_;
  Eigen::MatrixXd response_matrix_;
  SpaceDescriptor space_;
};

// Refits with predictor column `j` removed and predicts at `x` with
// coordinate `j` removed.  X must be the training predictor matrix the model
// was fitted on.  Throws if the model has a single predictor.
MetricPoint predict_without_variable(const GlobalFrechetModel& model,
                                     const Eigen::MatrixXd& X, int j,
                                     const Eigen::VectorXd& x);

// Convenience for repeated reduced-model queries: the column-deleted refit.
GlobalFrechetModel fit_without_variable(const GlobalFrechetModel& model,
                                        const Eigen::MatrixXd& X, int j);

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& X, int j);
Eigen::VectorXd drop_entry(const Eigen::VectorXd& x, int j);

}  // namespace metricuq
