#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace metricuq {

struct DcovResult {
  double statistic = 0.0;     // n2 * dcov_squared, floored at 0
  double dcov_squared = 0.0;  // may be a tiny negative from rounding
  double p_value = 1.0;       // add-one permutation p-value in (0, 1]
  int permutations = 0;
};

// Squared sample distance covariance between predictor rows and scalar
// residuals: pairwise Euclidean / absolute-difference distance matrices are
// double-centered and averaged entrywise.  O(n^2) time, exact.
double dcov_squared(const Eigen::MatrixXd& X_rows,
                    const std::vector<double>& residuals);

// Permutation test of independence between residuals and predictors.  The
// statistic is recomputed under B uniformly random permutations of the
// residuals; each permutation uses its own substream of `seed`, so any
// evaluation order gives the same p-value.
DcovResult homoscedasticity_test(const Eigen::MatrixXd& X_rows,
                                 const std::vector<double>& residuals, int B,
                                 std::uint64_t seed);

enum class VarianceRegime { homoscedastic, heteroscedastic };

// Heteroscedastic whenever p_value <= level.
VarianceRegime decide_algorithm(const Eigen::MatrixXd& X_rows,
                                const std::vector<double>& residuals,
                                double level, int B, std::uint64_t seed);

}  // namespace metricuq
