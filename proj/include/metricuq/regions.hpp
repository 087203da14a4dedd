#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "metricuq/frechet.hpp"
#include "metricuq/space.hpp"

namespace metricuq {

// Disjoint random index sets used to separate model fitting from radius
// calibration (and, optionally, conformal recalibration).
struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
  std::vector<int> calib;
};

struct SplitFractions {
  double train = 0.5;
  double test = 0.5;
  double calib = 0.0;  // 0 disables the third split
};

// Uniformly random disjoint index sets of sizes round(fraction * n),
// allocated cumulatively so the sizes never overshoot n.  Deterministic
// given the seed; throws if any requested set comes out empty.
SplitIndices split(int n, const SplitFractions& fractions, std::uint64_t seed);

// Pseudo-residuals d2(Y_i, prediction at X_i) with matched predictor rows.
// Each residual carries an independent uniform tie-break key so orderings
// are continuous even when distances tie (discrete spaces).
struct ResidualSample {
  Eigen::MatrixXd predictors;    // n2 x p
  std::vector<double> residuals;
  std::vector<double> tiebreaks;

  int size() const { return static_cast<int>(residuals.size()); }
};

ResidualSample residuals(const GlobalFrechetModel& model,
                         const Eigen::MatrixXd& X_test,
                         const std::vector<MetricPoint>& Y_test,
                         std::uint64_t seed);

// Index rule for the empirical quantile of level 1-alpha:
//   conformal: ceil((1-alpha) * (n+1))  -- finite-sample coverage guarantee
//   plugin:    ceil((1-alpha) * n)      -- the uncorrected empirical quantile
enum class QuantileConvention { conformal, plugin };

constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

// The (residual, tiebreak)-ordered empirical quantile of the sample.
// Returns kInfiniteRadius when the index exceeds the sample size (the region
// is the whole space rather than an error).
double homoscedastic_radius(const ResidualSample& sample, double alpha,
                            QuantileConvention convention = QuantileConvention::conformal);

struct ConstantRadiusRule {
  double radius = 0.0;
};

// Local radius: empirical quantile of the residuals attached to the k
// nearest stored predictors (Euclidean distance on the predictor space;
// neighbor ties broken by tiebreak key, then index).
struct KnnRadiusRule {
  int k = 1;
  double alpha = 0.1;
  QuantileConvention convention = QuantileConvention::plugin;
  ResidualSample sample;
};

// kNN radius shifted by a conformal offset calibrated on a third split;
// evaluated radii are floored at zero.
struct ConformalKnnRule {
  KnnRadiusRule base;
  double offset = 0.0;
};

using RadiusRule = std::variant<ConstantRadiusRule, KnnRadiusRule, ConformalKnnRule>;

KnnRadiusRule knn_radius_rule(ResidualSample sample, double alpha, int k,
                              QuantileConvention convention = QuantileConvention::plugin);

// Calibrates the kNN rule on a disjoint split: the offset is the conformal
// quantile of the scores residual - knn_radius(predictor) over `calib`.
ConformalKnnRule conformal_knn_rule(ResidualSample sample,
                                    const ResidualSample& calib, double alpha,
                                    int k);

double evaluate_radius(const RadiusRule& rule, const Eigen::VectorXd& x);

// Ball-shaped prediction region: a center (a fitted regression model, or a
// fixed point for unconditional tolerance regions) plus a radius rule.
class PredictionRegion {
 public:
  PredictionRegion(std::shared_ptr<const GlobalFrechetModel> center_model,
                   RadiusRule rule, double alpha);
  PredictionRegion(MetricPoint center_point, SpaceDescriptor space,
                   RadiusRule rule, double alpha);

  MetricPoint center_at(const Eigen::VectorXd& x) const;
  double radius_at(const Eigen::VectorXd& x) const;
  // Closed-ball membership: d2(y, center(x)) <= radius(x).
  bool contains(const Eigen::VectorXd& x, const MetricPoint& y) const;

  double alpha() const { return alpha_; }
  const SpaceDescriptor& space() const { return space_; }
  const RadiusRule& rule() const { return rule_; }
  const std::shared_ptr<const GlobalFrechetModel>& center_model() const {
    return center_model_;
  }
  const std::optional<MetricPoint>& center_point() const { return center_point_; }

 private:
  std::shared_ptr<const GlobalFrechetModel> center_model_;
  std::optional<MetricPoint> center_point_;
  SpaceDescriptor space_;
  RadiusRule rule_;
  double alpha_;
};

PredictionRegion homoscedastic_region(
    std::shared_ptr<const GlobalFrechetModel> model, const ResidualSample& sample,
    double alpha, QuantileConvention convention = QuantileConvention::conformal);

PredictionRegion heteroscedastic_knn_region(
    std::shared_ptr<const GlobalFrechetModel> model, ResidualSample sample,
    double alpha, int k,
    QuantileConvention convention = QuantileConvention::plugin);

PredictionRegion conformal_knn_region(
    std::shared_ptr<const GlobalFrechetModel> model, ResidualSample sample,
    const ResidualSample& calib, double alpha, int k);

// Tolerance region without covariates: the equal-weight barycenter of the
// sample is the center and the radius is the conformal quantile of the d2
// distances to it.  Center and radius share the sample by default, which is
// slightly optimistic; pass a split fraction to estimate them separately.
PredictionRegion unconditional_region(
    const std::vector<MetricPoint>& Y, double alpha, const SpaceDescriptor& space,
    std::uint64_t seed,
    QuantileConvention convention = QuantileConvention::conformal,
    std::optional<double> center_fraction = {});

// Fraction of evaluation pairs inside the region.  The evaluation data must
// be disjoint from the data the region was fitted on.
double coverage(const PredictionRegion& region, const Eigen::MatrixXd& X_eval,
                const std::vector<MetricPoint>& Y_eval);

// Monte Carlo estimate of the symmetric-difference mass between two regions:
// the fraction of pairs contained in exactly one of them.
double symmetric_difference_error(const PredictionRegion& a,
                                  const PredictionRegion& b,
                                  const Eigen::MatrixXd& X_eval,
                                  const std::vector<MetricPoint>& Y_eval);

}  // namespace metricuq
