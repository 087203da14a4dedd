#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "metricuq/regions.hpp"
#include "metricuq/space.hpp"

namespace metricuq {

enum class GenerativeModel { gaussian_homo, gaussian_hetero, distributional };

// Replicated coverage / selection experiment description.  Defaults follow
// the desk-scale settings used by the test suite.
struct ExperimentConfig {
  GenerativeModel model = GenerativeModel::gaussian_homo;
  int p = 5;                        // predictor dimension
  int s = 2;                        // Euclidean response dimension
  double rho = 0.2;                 // equicorrelation of the predictors
  int series_length = 300;          // inner draws per distributional subject
  double intercept = 100.0;         // distributional series intercept
  double slope = 5.0;               // distributional series slope
  double sigma_eps = 1.0;           // distributional series noise scale
  int grid_size = 100;              // quantile grid resolution
  std::vector<int> n_values = {500, 1000};
  std::vector<double> alpha_grid = {0.05, 0.1, 0.2, 0.5};
  std::vector<int> k_values = {};   // heteroscedastic kNN radii; empty = homo rule
  int replications = 100;
  int eval_size = 2000;
  double selection_alpha = 0.05;    // level for the selection experiment
  std::uint64_t seed = 1;
  int workers = 0;                  // 0 = hardware concurrency
};

void validate_config(const ExperimentConfig& config);

// Equicorrelated Gaussian predictors with Y = X'B + noise, B all ones;
// the heteroscedastic variant scales the noise by ||x||_2.
struct EuclideanSample {
  Eigen::MatrixXd X;
  std::vector<MetricPoint> Y;  // EuclideanPoint of dimension s
};
EuclideanSample generate_gaussian(const ExperimentConfig& config, int n,
                                  std::uint64_t seed);

// Per subject: a latent series intercept + slope * sum(active X) + noise,
// summarized by its empirical quantile function on the midpoint grid.
// active_only restricts the slope to the first coordinate.
struct DistributionalSample {
  Eigen::MatrixXd X;
  std::vector<MetricPoint> Y;  // QuantileFunction on the config grid
};
DistributionalSample generate_distributional(const ExperimentConfig& config,
                                             int n, std::uint64_t seed,
                                             bool active_only = false);

SpaceDescriptor response_space(const ExperimentConfig& config);

struct CoverageCell {
  int n = 0;
  double alpha = 0.0;
  int k = 0;  // 0 for the constant-radius rule
  std::vector<double> replicate_coverages;
  double mean = 0.0;
  double stddev = 0.0;
  double runtime_seconds = 0.0;
};

struct CoverageReport {
  ExperimentConfig config;
  std::vector<CoverageCell> cells;
};

// Per replicate: generate n pairs, split in half, fit the regression on the
// training half, calibrate radii on the held-out half and evaluate coverage
// on eval_size fresh pairs.  Replicates run in parallel on independent
// substreams; the report does not depend on scheduling.
CoverageReport run_coverage_experiment(const ExperimentConfig& config);

struct SelectionTier {
  int n = 0;
  std::vector<int> replicate_false_positives;
  std::vector<bool> replicate_detected;
  double detect_rate = 0.0;
  double fp_one_or_more_rate = 0.0;
  double fp_two_or_more_rate = 0.0;
  double runtime_seconds = 0.0;
};

struct SelectionReport {
  ExperimentConfig config;
  std::vector<SelectionTier> tiers;
};

// Distributional model with only the first predictor active; reports how
// often it is detected and how many inactive predictors get selected.
SelectionReport run_selection_experiment(const ExperimentConfig& config);

// CSV renderings (full round-trip precision, no timing columns so identical
// configs produce byte-identical files).
std::string coverage_replicates_csv(const CoverageReport& report);
std::string coverage_summary_csv(const CoverageReport& report);
std::string selection_replicates_csv(const SelectionReport& report);
std::string selection_summary_csv(const SelectionReport& report);

std::string to_string(GenerativeModel model);

}  // namespace metricuq
