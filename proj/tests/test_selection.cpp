#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "metricuq/rng.hpp"
#include "metricuq/selection.hpp"
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

// Exact one-sided signed-rank p-value for distinct magnitudes: dynamic
// program over the 2^n sign assignments of ranks 1..n.
double exact_signed_rank_p(const std::vector<double>& values) {
  std::vector<double> magnitudes;
  for (double v : values) magnitudes.push_back(std::abs(v));
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return magnitudes[a] < magnitudes[b]; });
  const int n = static_cast<int>(values.size());
  int observed = 0;
  for (int rank = 1; rank <= n; ++rank) {
    if (values[order[rank - 1]] > 0) observed += rank;
  }
  const int max_sum = n * (n + 1) / 2;
  std::vector<double> ways(max_sum + 1, 0.0);
  ways[0] = 1.0;
  for (int rank = 1; rank <= n; ++rank) {
    for (int s = max_sum; s >= rank; --s) ways[s] += ways[s - rank];
  }
  double at_least = 0.0;
  for (int s = observed; s <= max_sum; ++s) at_least += ways[s];
  return at_least / std::pow(2.0, n);
}

}  // namespace

TEST_CASE("wilcoxon handles zeros, ties and signs by hand") {
  // w = {0, 1, 1, -2, 3}: zero dropped; |w| ranks {1.5, 1.5, 3, 4};
  // W+ = 1.5 + 1.5 + 4 = 7, mean 5, variance 7.375.
  const WilcoxonResult result = wilcoxon_signed_rank({0, 1, 1, -2, 3});
  CHECK(result.used == 4);
  CHECK(result.statistic == doctest::Approx(7.0));
  const double z = (7.0 - 5.0 - 0.5) / std::sqrt(7.375);
  CHECK(result.z == doctest::Approx(z));
  CHECK(result.p_value == doctest::Approx(0.5 * std::erfc(z / std::sqrt(2.0))));
}

TEST_CASE("all-zero input gives p-value one") {
  const WilcoxonResult result = wilcoxon_signed_rank({0, 0, 0, 0});
  CHECK(result.used == 0);
  CHECK(result.p_value == 1.0);
  const GlobalTestResult global = global_test(std::vector<double>(12, 0.0), 0.05, 3);
  CHECK(global.p_value == 1.0);
  CHECK_FALSE(global.selected);
}

TEST_CASE("uniformly positive values are overwhelming evidence") {
  Rng rng(3);
  std::vector<double> values(50);
  for (double& v : values) v = 0.1 + std::abs(rng.normal());
  const GlobalTestResult result = global_test(values, 0.05, 5);
  CHECK(result.p_value < 1e-6);
  CHECK(result.selected);
}

TEST_CASE("values symmetric about zero sit near one half") {
  std::vector<double> values;
  for (int i = 1; i <= 25; ++i) {
    values.push_back(i * 0.1);
    values.push_back(-i * 0.1);
  }
  const WilcoxonResult result = wilcoxon_signed_rank(values);
  CHECK(result.p_value == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("statistic and p-value agree with the exact enumeration for n=20") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> values(20);
    for (double& v : values) {
      v = rng.normal() + 0.3;
      if (v == 0.0) v = 0.1;
    }
    const WilcoxonResult approx = wilcoxon_signed_rank(values);
    // Recompute the statistic independently.
    std::vector<double> magnitudes;
    for (double v : values) magnitudes.push_back(std::abs(v));
    std::vector<int> order(20);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return magnitudes[a] < magnitudes[b]; });
    double expected_stat = 0.0;
    for (int rank = 1; rank <= 20; ++rank) {
      if (values[order[rank - 1]] > 0) expected_stat += rank;
    }
    CHECK(approx.statistic == expected_stat);

    const double exact = exact_signed_rank_p(values);
    // Normal approximation with continuity correction is accurate to about
    // a percent at n=20 away from the extreme tails.
    if (exact > 0.001 && exact < 0.999) {
      CHECK(std::abs(approx.p_value - exact) <= 0.015);
    }
  }
}

TEST_CASE("global test needs enough values and applies Bonferroni") {
  CHECK_THROWS_AS(global_test({1, 2, 3}, 0.05, 2), std::invalid_argument);

  Rng rng(7);
  std::vector<double> values(30);
  for (double& v : values) v = rng.normal() + 0.35;
  const GlobalTestResult base = global_test(values, 0.05, 1);
  // Raw p-value does not depend on the total variable count.
  for (int p : {2, 5, 20}) {
    CHECK(global_test(values, 0.05, p).p_value == base.p_value);
  }
  // Bonferroni monotonicity: once not selected, larger p stays unselected.
  bool was_selected = base.selected;
  for (int p : {2, 5, 20, 100}) {
    const bool now = global_test(values, 0.05, p).selected;
    CHECK((was_selected || !now));
    was_selected = was_selected && now;
  }
}

TEST_CASE("w statistics vanish when the variable is orthogonal noise") {
  // Orthogonal design with an exactly zero coefficient on column 2: the
  // reduced and full predictions coincide, so every W value is ~0.
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  const Eigen::Vector4d y(1, 1, -1, -1);  // equals column 1 exactly
  const auto model = GlobalFrechetModel::fit(X, scalar_points(y),
                                             SpaceDescriptor::euclidean(1));
  Eigen::MatrixXd X_test(3, 2);
  X_test << 0.5, 2.0, -1.0, 0.3, 2.0, -2.0;
  const std::vector<double> w = w_statistics(
      model, X, X_test, scalar_points(Eigen::Vector3d(0.2, -0.9, 1.4)), 1);
  for (double v : w) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("w statistics negate when the models swap roles") {
  Rng rng(11);
  Eigen::MatrixXd X(24, 2);
  Eigen::VectorXd y(24);
  for (int i = 0; i < 24; ++i) {
    X(i, 0) = rng.normal();
    X(i, 1) = rng.normal();
    y[i] = X(i, 0) + 0.5 * X(i, 1) + rng.normal();
  }
  const auto space = SpaceDescriptor::euclidean(1);
  const auto full = GlobalFrechetModel::fit(X, scalar_points(y), space);
  const auto reduced = fit_without_variable(full, X, 1);

  Eigen::MatrixXd X_test(10, 2);
  Eigen::VectorXd y_test(10);
  for (int i = 0; i < 10; ++i) {
    X_test(i, 0) = rng.normal();
    X_test(i, 1) = rng.normal();
    y_test[i] = rng.normal();
  }
  const std::vector<double> w =
      w_statistics(full, X, X_test, scalar_points(y_test), 1);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = X_test.row(i).transpose();
    const double d_full = distance_d1(scalar_points(y_test)[i], full.predict(x), space);
    const double d_red = distance_d1(scalar_points(y_test)[i],
                                     reduced.predict(drop_entry(x, 1)), space);
    const double swapped = d_full * d_full - d_red * d_red;
    CHECK(w[i] == doctest::Approx(-swapped).epsilon(1e-12));
  }
}

TEST_CASE("active variable has positive mean W, inactive stays near zero") {
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.grid_size = 50;
  config.series_length = 150;
  const auto data = generate_distributional(config, 1200, 31, true);
  const auto space = SpaceDescriptor::wasserstein(config.grid_size);

  const SplitIndices parts = split(1200, SplitFractions{0.5, 0.5, 0.0}, 9);
  Eigen::MatrixXd X_train(600, config.p), X_test(600, config.p);
  std::vector<MetricPoint> Y_train, Y_test;
  for (int i = 0; i < 600; ++i) {
    X_train.row(i) = data.X.row(parts.train[i]);
    X_test.row(i) = data.X.row(parts.test[i]);
    Y_train.push_back(data.Y[parts.train[i]]);
    Y_test.push_back(data.Y[parts.test[i]]);
  }
  const auto full = GlobalFrechetModel::fit(X_train, Y_train, space);

  const std::vector<double> w_active =
      w_statistics(full, X_train, X_test, Y_test, 0);
  const double mean_active =
      std::accumulate(w_active.begin(), w_active.end(), 0.0) / w_active.size();
  CHECK(mean_active > 1.0);

  const std::vector<double> w_noise =
      w_statistics(full, X_train, X_test, Y_test, 2);
  const double mean_noise =
      std::accumulate(w_noise.begin(), w_noise.end(), 0.0) / w_noise.size();
  CHECK(std::abs(mean_noise) < 0.05);
}

TEST_CASE("local importance flags constant-positive W everywhere") {
  Eigen::MatrixXd X(24, 1);
  for (int i = 0; i < 24; ++i) X(i, 0) = i * 0.25;
  const std::vector<LocalInterval> flagged =
      local_importance(std::vector<double>(24, 2.0), X, 0.2, 3);
  for (const LocalInterval& interval : flagged) {
    CHECK(interval.center == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(interval.radius == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(interval.important);
  }
  const std::vector<LocalInterval> silent =
      local_importance(std::vector<double>(24, 0.0), X, 0.2, 3);
  for (const LocalInterval& interval : silent) CHECK_FALSE(interval.important);
}

TEST_CASE("local importance concentrates where W grows with the predictor") {
  Rng rng(13);
  const int n = 400;
  Eigen::MatrixXd X(n, 1);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 4.0 * rng.uniform();
    // Importance kicks in for large predictor values only.
    w[i] = std::max(0.0, X(i, 0) - 2.0) + 0.1 * rng.normal();
  }
  const std::vector<LocalInterval> intervals = local_importance(w, X, 0.2, 5);
  int low_flagged = 0, high_flagged = 0, low_total = 0, high_total = 0;
  for (int i = 0; i < n; ++i) {
    if (X(i, 0) < 1.5) {
      ++low_total;
      low_flagged += intervals[i].important ? 1 : 0;
    }
    if (X(i, 0) > 3.5) {
      ++high_total;
      high_flagged += intervals[i].important ? 1 : 0;
    }
  }
  CHECK(low_total > 0);
  CHECK(high_total > 0);
  CHECK(static_cast<double>(high_flagged) / high_total >
        static_cast<double>(low_flagged) / low_total + 0.5);
}

TEST_CASE("select_variables finds the active variable in a small run") {
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.grid_size = 40;
  config.series_length = 120;
  const auto data = generate_distributional(config, 600, 77, true);

  SelectionOptions options;
  options.alpha = 0.05;
  const std::vector<VariableReport> reports = select_variables(
      data.X, data.Y, SpaceDescriptor::wasserstein(config.grid_size), options, 5);
  REQUIRE(reports.size() == 5);
  CHECK(reports[0].selected);
  CHECK(reports[0].p_value_raw <= 0.01);
  CHECK(reports[0].mean_w > 0.0);
  for (const VariableReport& report : reports) {
    CHECK(report.selected == (report.p_value_raw <= options.alpha / 5));
    CHECK(report.w_values.size() == 300);
  }
}

TEST_CASE("select_variables rejects a single predictor") {
  Eigen::MatrixXd X(10, 1);
  for (int i = 0; i < 10; ++i) X(i, 0) = i;
  Eigen::VectorXd y = X.col(0);
  CHECK_THROWS_AS(select_variables(X, scalar_points(y),
                                   SpaceDescriptor::euclidean(1),
                                   SelectionOptions{}, 1),
                  std::invalid_argument);
}
