#include "metricuq/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "metricuq/rng.hpp"

namespace metricuq {

namespace {

double standard_normal_upper_tail(double z) {
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

std::vector<MetricPoint> gather(const std::vector<MetricPoint>& Y,
                                const std::vector<int>& indices) {
  std::vector<MetricPoint> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(Y[i]);
  return out;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X,
                            const std::vector<int>& indices) {
  Eigen::MatrixXd out(static_cast<int>(indices.size()), X.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<int>(i)) = X.row(indices[i]);
  }
  return out;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& values) {
  WilcoxonResult result;
  std::vector<double> nonzero;
  nonzero.reserve(values.size());
  for (double v : values) {
    if (v != 0.0) nonzero.push_back(v);
  }
  const int n = static_cast<int>(nonzero.size());
  result.used = n;
  if (n == 0) return result;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(nonzero[a]) < std::abs(nonzero[b]);
  });

  // Average ranks within tied |value| groups; accumulate the tie correction.
  std::vector<double> ranks(n);
  double tie_correction = 0.0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n &&
           std::abs(nonzero[order[j + 1]]) == std::abs(nonzero[order[i]])) {
      ++j;
    }
    const double average_rank = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) ranks[order[k]] = average_rank;
    const double t = j - i + 1;
    tie_correction += t * t * t - t;
    i = j + 1;
  }

  double positive_rank_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    if (nonzero[k] > 0.0) positive_rank_sum += ranks[k];
  }
  result.statistic = positive_rank_sum;

  const double nn = n;
  const double mean = nn * (nn + 1.0) / 4.0;
  const double variance =
      nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_correction / 48.0;
  if (variance <= 0.0) {
    result.p_value = positive_rank_sum > mean ? 0.0 : 1.0;
    return result;
  }
  result.z = (positive_rank_sum - mean - 0.5) / std::sqrt(variance);
  result.p_value = std::min(1.0, std::max(
      standard_normal_upper_tail(result.z),
      std::numeric_limits<double>::min()));
  return result;
}

std::vector<double> w_statistics(const GlobalFrechetModel& full,
                                 const Eigen::MatrixXd& X_train,
                                 const Eigen::MatrixXd& X_test,
                                 const std::vector<MetricPoint>& Y_test, int j) {
  if (full.predictor_dim() < 2) {
    throw std::invalid_argument("w_statistics: need at least two predictors");
  }
  if (X_test.rows() != static_cast<int>(Y_test.size())) {
    throw std::invalid_argument("w_statistics: test rows do not match responses");
  }
  const GlobalFrechetModel reduced = fit_without_variable(full, X_train, j);
  const SpaceDescriptor& space = full.space();

  std::vector<double> w(Y_test.size());
  for (int i = 0; i < X_test.rows(); ++i) {
    const Eigen::VectorXd x = X_test.row(i).transpose();
    const double d_full = distance_d1(Y_test[i], full.predict(x), space);
    const double d_reduced =
        distance_d1(Y_test[i], reduced.predict(drop_entry(x, j)), space);
    w[i] = d_reduced * d_reduced - d_full * d_full;
  }
  return w;
}

GlobalTestResult global_test(const std::vector<double>& w_values, double alpha,
                             int total_variables) {
  if (static_cast<int>(w_values.size()) < 10) {
    throw std::invalid_argument(
        "global_test: need at least 10 values for the normal approximation");
  }
  if (total_variables < 1) {
    throw std::invalid_argument("global_test: total_variables must be >= 1");
  }
  GlobalTestResult result;
  result.p_value = wilcoxon_signed_rank(w_values).p_value;
  result.selected = result.p_value <= alpha / total_variables;
  return result;
}

std::vector<LocalInterval> local_importance(const std::vector<double>& w_values,
                                            const Eigen::MatrixXd& X_test,
                                            double alpha, std::uint64_t seed) {
  const int n = static_cast<int>(w_values.size());
  if (X_test.rows() != n) {
    throw std::invalid_argument("local_importance: rows do not match W values");
  }
  if (n < 8) {
    throw std::invalid_argument(
        "local_importance: too few points to sub-split, need at least 8");
  }

  const SplitIndices parts = split(n, SplitFractions{0.5, 0.5, 0.0}, seed);
  const SpaceDescriptor scalar = SpaceDescriptor::euclidean(1);

  auto as_points = [&](const std::vector<int>& idx) {
    std::vector<MetricPoint> out;
    out.reserve(idx.size());
    for (int i : idx) {
      out.push_back(EuclideanPoint{Eigen::VectorXd::Constant(1, w_values[i])});
    }
    return out;
  };

  const auto model = std::make_shared<GlobalFrechetModel>(GlobalFrechetModel::fit(
      gather_rows(X_test, parts.train), as_points(parts.train), scalar));
  const ResidualSample sample =
      residuals(*model, gather_rows(X_test, parts.test), as_points(parts.test),
                Rng::mix(seed, 0x77696c63ULL));
  const double radius = homoscedastic_radius(sample, alpha);

  std::vector<LocalInterval> intervals(n);
  for (int i = 0; i < n; ++i) {
    const MetricPoint center = model->predict(X_test.row(i).transpose());
    LocalInterval interval;
    interval.center = std::get<EuclideanPoint>(center).values[0];
    interval.radius = radius;
    interval.important = interval.center - interval.radius > 0.0;
    intervals[i] = interval;
  }
  return intervals;
}

std::vector<VariableReport> select_variables(const Eigen::MatrixXd& X,
                                             const std::vector<MetricPoint>& Y,
                                             const SpaceDescriptor& space,
                                             const SelectionOptions& options,
                                             std::uint64_t seed) {
  const int p = static_cast<int>(X.cols());
  if (p < 2) {
    throw std::invalid_argument("select_variables: need at least two predictors");
  }
  if (X.rows() != static_cast<int>(Y.size())) {
    throw std::invalid_argument("select_variables: rows do not match responses");
  }

  const SplitIndices parts =
      split(static_cast<int>(X.rows()), options.splits, seed);
  const Eigen::MatrixXd X_train = gather_rows(X, parts.train);
  const Eigen::MatrixXd X_test = gather_rows(X, parts.test);
  const std::vector<MetricPoint> Y_train = gather(Y, parts.train);
  const std::vector<MetricPoint> Y_test = gather(Y, parts.test);

  const GlobalFrechetModel full = GlobalFrechetModel::fit(X_train, Y_train, space);

  std::vector<VariableReport> reports(p);
  for (int j = 0; j < p; ++j) {
    VariableReport report;
    report.variable_index = j;
    report.w_values = w_statistics(full, X_train, X_test, Y_test, j);
    report.mean_w =
        std::accumulate(report.w_values.begin(), report.w_values.end(), 0.0) /
        static_cast<double>(report.w_values.size());
    const GlobalTestResult test = global_test(report.w_values, options.alpha, p);
    report.p_value_raw = test.p_value;
    report.selected = test.selected;
    if (options.local_intervals) {
      report.local_intervals = local_importance(
          report.w_values, X_test, options.alpha,
          Rng::mix(seed, 0x6c6f63616cULL + static_cast<std::uint64_t>(j)));
    }
    reports[j] = std::move(report);
  }
  return reports;
}

}  // namespace metricuq
