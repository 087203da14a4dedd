#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "metricuq/frechet.hpp"
#include "metricuq/regions.hpp"
#include "metricuq/space.hpp"

namespace metricuq {

// One-sided Wilcoxon signed-rank test of H0: median <= 0 against
// Ha: median > 0.  Normal approximation with average ranks, tie-corrected
// variance and a continuity correction; exact zeros are dropped.  If every
// value is zero the p-value is 1.
struct WilcoxonResult {
  double statistic = 0.0;  // sum of ranks of the positive values
  double z = 0.0;
  double p_value = 1.0;
  int used = 0;  // values remaining after dropping zeros
};

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& values);

// Squared-distance gain of keeping predictor j: d1^2 to the reduced-model
// prediction minus d1^2 to the full-model prediction, per test pair.
// Positive values indicate the variable matters.
std::vector<double> w_statistics(const GlobalFrechetModel& full,
                                 const Eigen::MatrixXd& X_train,
                                 const Eigen::MatrixXd& X_test,
                                 const std::vector<MetricPoint>& Y_test, int j);

struct GlobalTestResult {
  double p_value = 1.0;
  bool selected = false;
};

// Wilcoxon p-value with a Bonferroni threshold alpha / total_variables.
GlobalTestResult global_test(const std::vector<double>& w_values, double alpha,
                             int total_variables);

// Symmetric scalar prediction interval for W at one evaluation point,
// flagged when the whole interval sits in (0, inf).
struct LocalInterval {
  double center = 0.0;
  double radius = 0.0;
  bool important = false;
};

// Treats the W values as a scalar response on the test predictors: an
// internal sub-split fits a scalar regression for the center and a constant
// conformal radius, evaluated back at every row of X_test.
std::vector<LocalInterval> local_importance(const std::vector<double>& w_values,
                                            const Eigen::MatrixXd& X_test,
                                            double alpha, std::uint64_t seed);

struct VariableReport {
  int variable_index = 0;  // zero-based column position
  std::vector<double> w_values;
  double mean_w = 0.0;
  double p_value_raw = 1.0;
  bool selected = false;
  std::vector<LocalInterval> local_intervals;
};

struct SelectionOptions {
  double alpha = 0.05;
  SplitFractions splits{0.5, 0.5, 0.0};
  bool local_intervals = false;
};

// Full pipeline: split, fit the full and the p reduced models on the
// training half, evaluate the W statistics on the held-out half and run the
// Bonferroni-corrected global test per variable.
std::vector<VariableReport> select_variables(const Eigen::MatrixXd& X,
                                             const std::vector<MetricPoint>& Y,
                                             const SpaceDescriptor& space,
                                             const SelectionOptions& options,
                                             std::uint64_t seed);

}  // namespace metricuq
