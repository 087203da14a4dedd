#include "metricuq/dcov.hpp"

#include <cmath>
#include <stdexcept>

#include "metricuq/rng.hpp"

namespace metricuq {

namespace {

void check_sample(const Eigen::MatrixXd& X_rows,
                  const std::vector<double>& residuals) {
  if (static_cast<int>(residuals.size()) != X_rows.rows()) {
    throw std::invalid_argument("dcov: " + std::to_string(residuals.size()) +
                                " residuals for " + std::to_string(X_rows.rows()) +
                                " predictor rows");
  }
  if (X_rows.rows() < 2) {
    throw std::invalid_argument("dcov: need at least 2 observations");
  }
}

void double_center(Eigen::MatrixXd& m) {
  const Eigen::VectorXd row_means = m.rowwise().mean();
  const Eigen::VectorXd col_means = m.colwise().mean();
  const double grand = m.mean();
  m.colwise() -= row_means;
  m.rowwise() -= col_means.transpose();
  m.array() += grand;
}

Eigen::MatrixXd centered_predictor_distances(const Eigen::MatrixXd& X_rows) {
  const int n = static_cast<int>(X_rows.rows());
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j) {
    a(j, j) = 0.0;
    for (int k = j + 1; k < n; ++k) {
      const double d = (X_rows.row(j) - X_rows.row(k)).norm();
      a(j, k) = d;
      a(k, j) = d;
    }
  }
  double_center(a);
  return a;
}

// <A, b> with A double-centered equals <A, B>; the diagonal of b is zero.
double centered_product(const Eigen::MatrixXd& A,
                        const std::vector<double>& residuals) {
  const int n = static_cast<int>(A.rows());
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const double* column = A.col(j).data();
    const double rj = residuals[j];
    double partial = 0.0;
    for (int k = j + 1; k < n; ++k) {
      partial += column[k] * std::abs(residuals[k] - rj);
    }
    sum += partial;
  }
  return 2.0 * sum / (static_cast<double>(n) * n);
}

}  // namespace

double dcov_squared(const Eigen::MatrixXd& X_rows,
                    const std::vector<double>& residuals) {
  check_sample(X_rows, residuals);
  const int n = static_cast<int>(X_rows.rows());
  Eigen::MatrixXd a = centered_predictor_distances(X_rows);
  Eigen::MatrixXd b(n, n);
  for (int j = 0; j < n; ++j) {
    b(j, j) = 0.0;
    for (int k = j + 1; k < n; ++k) {
      const double d = std::abs(residuals[j] - residuals[k]);
      b(j, k) = d;
      b(k, j) = d;
    }
  }
  double_center(b);
  return a.cwiseProduct(b).sum() / (static_cast<double>(n) * n);
}

DcovResult homoscedasticity_test(const Eigen::MatrixXd& X_rows,
                                 const std::vector<double>& residuals, int B,
                                 std::uint64_t seed) {
  check_sample(X_rows, residuals);
  if (B < 1) {
    throw std::invalid_argument("homoscedasticity_test: need B >= 1 permutations");
  }
  const int n = static_cast<int>(X_rows.rows());
  const Eigen::MatrixXd A = centered_predictor_distances(X_rows);
  const double observed = centered_product(A, residuals);

  int at_least = 0;
  std::vector<double> permuted(residuals);
  for (int b = 0; b < B; ++b) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(b) + 1);
    permuted = residuals;
    rng.shuffle(permuted);
    if (centered_product(A, permuted) >= observed) ++at_least;
  }

  DcovResult result;
  result.dcov_squared = observed;
  result.statistic = std::max(0.0, n * observed);
  result.permutations = B;
  result.p_value = static_cast<double>(1 + at_least) / (B + 1);
  return result;
}

VarianceRegime decide_algorithm(const Eigen::MatrixXd& X_rows,
                                const std::vector<double>& residuals,
                                double level, int B, std::uint64_t seed) {
  const DcovResult result = homoscedasticity_test(X_rows, residuals, B, seed);
  return result.p_value <= level ? VarianceRegime::heteroscedastic
                                 : VarianceRegime::homoscedastic;
}

}  // namespace metricuq
