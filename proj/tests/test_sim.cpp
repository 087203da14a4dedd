#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "metricuq/rng.hpp"
#include "metricuq/simulate.hpp"

using namespace metricuq;

TEST_CASE("config validation") {
  ExperimentConfig config;
  CHECK_NOTHROW(validate_config(config));

  ExperimentConfig bad_rho = config;
  bad_rho.rho = 1.0;
  CHECK_THROWS_AS(validate_config(bad_rho), std::invalid_argument);

  ExperimentConfig bad_alpha = config;
  bad_alpha.alpha_grid = {0.0};
  CHECK_THROWS_AS(validate_config(bad_alpha), std::invalid_argument);

  ExperimentConfig hetero = config;
  hetero.model = GenerativeModel::gaussian_hetero;
  CHECK_THROWS_AS(validate_config(hetero), std::invalid_argument);  // needs k
  hetero.k_values = {10};
  CHECK_NOTHROW(validate_config(hetero));
}

TEST_CASE("independent predictors have near-zero sample correlations") {
  ExperimentConfig config;
  config.rho = 0.0;
  const int n = 4000;
  const auto sample = generate_gaussian(config, n, 3);
  const Eigen::VectorXd mean = sample.X.colwise().mean();
  const Eigen::MatrixXd centered = sample.X.rowwise() - mean.transpose();
  const Eigen::MatrixXd corr_num = centered.transpose() * centered;
  for (int i = 0; i < config.p; ++i) {
    for (int j = i + 1; j < config.p; ++j) {
      const double corr =
          corr_num(i, j) / std::sqrt(corr_num(i, i) * corr_num(j, j));
      CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("equicorrelated predictors show the requested correlation") {
  ExperimentConfig config;
  config.rho = 0.4;
  const int n = 6000;
  const auto sample = generate_gaussian(config, n, 5);
  const Eigen::VectorXd mean = sample.X.colwise().mean();
  const Eigen::MatrixXd centered = sample.X.rowwise() - mean.transpose();
  const Eigen::MatrixXd corr_num = centered.transpose() * centered;
  for (int i = 0; i < config.p; ++i) {
    for (int j = i + 1; j < config.p; ++j) {
      const double corr =
          corr_num(i, j) / std::sqrt(corr_num(i, i) * corr_num(j, j));
      CHECK(corr == doctest::Approx(0.4).epsilon(0.15));
    }
  }
}

TEST_CASE("gaussian responses center on the linear signal") {
  ExperimentConfig config;
  config.s = 3;
  const int n = 20000;
  const auto sample = generate_gaussian(config, n, 7);
  // E(Y_j - sum(x)) = 0 per coordinate.
  Eigen::VectorXd gap = Eigen::VectorXd::Zero(config.s);
  for (int i = 0; i < n; ++i) {
    const double signal = sample.X.row(i).sum();
    gap += std::get<EuclideanPoint>(sample.Y[i]).values.array().matrix() -
           Eigen::VectorXd::Constant(config.s, signal);
  }
  gap /= n;
  for (int j = 0; j < config.s; ++j) {
    CHECK(std::abs(gap[j]) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("heteroscedastic noise scales with the predictor norm") {
  ExperimentConfig config;
  config.model = GenerativeModel::gaussian_hetero;
  config.k_values = {10};
  config.s = 1;
  const int n = 30000;
  const auto sample = generate_gaussian(config, n, 9);
  double small_ss = 0.0, large_ss = 0.0;
  int small_count = 0, large_count = 0;
  for (int i = 0; i < n; ++i) {
    const double err = std::get<EuclideanPoint>(sample.Y[i]).values[0] -
                       sample.X.row(i).sum();
    const double norm = sample.X.row(i).norm();
    if (norm < 1.8) {
      small_ss += err * err;
      ++small_count;
    } else if (norm > 2.6) {
      large_ss += err * err;
      ++large_count;
    }
  }
  REQUIRE(small_count > 100);
  REQUIRE(large_count > 100);
  CHECK(large_ss / large_count > 1.5 * (small_ss / small_count));
}

TEST_CASE("degenerate distributional series is the constant intercept") {
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.sigma_eps = 0.0;
  config.slope = 0.0;
  config.grid_size = 20;
  const auto sample = generate_distributional(config, 5, 11);
  for (const MetricPoint& y : sample.Y) {
    const auto& q = std::get<QuantileFunction>(y).values;
    for (int g = 0; g < q.size(); ++g) CHECK(q[g] == 100.0);
  }
}

TEST_CASE("distributional quantile functions are monotone") {
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.grid_size = 60;
  const auto sample = generate_distributional(config, 50, 13);
  for (const MetricPoint& y : sample.Y) {
    const auto& q = std::get<QuantileFunction>(y).values;
    for (int g = 1; g < q.size(); ++g) CHECK(q[g] >= q[g - 1]);
  }
}

TEST_CASE("slope shifts every quantile level in expectation") {
  // Two paired datasets whose only difference is +1 on the first predictor
  // coordinate: quantile values shift by the slope in expectation.
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.grid_size = 30;
  config.series_length = 200;
  const int n = 400;

  Rng rng(17);
  const double slope = config.slope;
  double total_gap = 0.0;
  int cells = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const std::uint64_t seed = rng.next_u64();
    auto base = generate_distributional(config, n, seed, true);
    ExperimentConfig shifted_config = config;
    shifted_config.intercept += slope;  // equivalent to X1 -> X1 + 1
    auto shifted = generate_distributional(shifted_config, n, seed, true);
    for (int i = 0; i < n; ++i) {
      const auto& a = std::get<QuantileFunction>(base.Y[i]).values;
      const auto& b = std::get<QuantileFunction>(shifted.Y[i]).values;
      total_gap += (b - a).mean();
      ++cells;
    }
  }
  CHECK(total_gap / cells == doctest::Approx(slope).epsilon(1e-9));
}

TEST_CASE("coverage experiment is deterministic and covers at small scale") {
  ExperimentConfig config;
  config.n_values = {120};
  config.alpha_grid = {0.2, 0.5};
  config.replications = 8;
  config.eval_size = 300;
  config.seed = 99;
  config.workers = 4;

  const CoverageReport a = run_coverage_experiment(config);
  ExperimentConfig serial = config;
  serial.workers = 1;
  const CoverageReport b = run_coverage_experiment(serial);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].replicate_coverages == b.cells[i].replicate_coverages);
  }
  CHECK(coverage_replicates_csv(a) == coverage_replicates_csv(b));
  CHECK(coverage_summary_csv(a) == coverage_summary_csv(b));

  for (const CoverageCell& cell : a.cells) {
    CHECK(cell.mean >= 1 - cell.alpha - 0.1);
    CHECK(cell.mean <= 1.0);
  }
}

TEST_CASE("hetero coverage experiment runs the k grid") {
  ExperimentConfig config;
  config.model = GenerativeModel::gaussian_hetero;
  config.k_values = {5, 15};
  config.n_values = {100};
  config.alpha_grid = {0.5};
  config.replications = 4;
  config.eval_size = 200;
  config.seed = 7;
  const CoverageReport report = run_coverage_experiment(config);
  CHECK(report.cells.size() == 2);
  for (const CoverageCell& cell : report.cells) {
    CHECK(cell.mean > 0.3);
    CHECK(cell.mean < 0.7);
  }
}

TEST_CASE("selection experiment finds the active variable at toy scale") {
  ExperimentConfig config;
  config.model = GenerativeModel::distributional;
  config.grid_size = 40;
  config.series_length = 120;
  config.n_values = {400};
  config.replications = 6;
  config.seed = 5;
  const SelectionReport report = run_selection_experiment(config);
  REQUIRE(report.tiers.size() == 1);
  CHECK(report.tiers[0].detect_rate == 1.0);
  const std::string csv = selection_summary_csv(report);
  CHECK(csv.find("400,1,") != std::string::npos);
}

TEST_CASE("replicate CSV has one row per cell and replicate") {
  ExperimentConfig config;
  config.n_values = {60};
  config.alpha_grid = {0.5};
  config.replications = 3;
  config.eval_size = 50;
  const CoverageReport report = run_coverage_experiment(config);
  const std::string csv = coverage_replicates_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3);
}
