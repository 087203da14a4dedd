#include "metricuq/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "metricuq/parallel.hpp"
#include "metricuq/rng.hpp"
#include "metricuq/selection.hpp"

namespace metricuq {

namespace {

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

Eigen::MatrixXd equicorrelation_cholesky(int p, double rho) {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p, p, rho);
  sigma.diagonal().setOnes();
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(
        "equicorrelation matrix is not positive definite (rho=" +
        std::to_string(rho) + ")");
  }
  return llt.matrixL();
}

int ceil_index(double value) {
  return static_cast<int>(std::ceil(value - 1e-9));
}

double sample_stddev(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
}

struct ReplicateSeeds {
  std::uint64_t generate;
  std::uint64_t split;
  std::uint64_t tiebreak;
  std::uint64_t eval;
  std::uint64_t selection;
};

ReplicateSeeds replicate_seeds(std::uint64_t master, int n_index, int replicate) {
  const std::uint64_t stream = Rng::mix(
      Rng::mix(master, static_cast<std::uint64_t>(n_index)),
      static_cast<std::uint64_t>(replicate));
  return {Rng::mix(stream, 1), Rng::mix(stream, 2), Rng::mix(stream, 3),
          Rng::mix(stream, 4), Rng::mix(stream, 5)};
}

}  // namespace

void validate_config(const ExperimentConfig& config) {
  if (config.p < 1) throw std::invalid_argument("config: p must be >= 1");
  if (config.s < 1) throw std::invalid_argument("config: s must be >= 1");
  if (!(config.rho >= 0.0 && config.rho < 1.0)) {
    throw std::invalid_argument("config: rho must be in [0, 1)");
  }
  if (config.series_length < 1 || config.grid_size < 1) {
    throw std::invalid_argument("config: series length and grid size must be >= 1");
  }
  if (config.replications < 1 || config.eval_size < 1) {
    throw std::invalid_argument("config: counts must be positive");
  }
  if (config.n_values.empty()) {
    throw std::invalid_argument("config: need at least one sample size");
  }
  for (int n : config.n_values) {
    if (n < 4) throw std::invalid_argument("config: sample sizes must be >= 4");
  }
  if (config.alpha_grid.empty()) {
    throw std::invalid_argument("config: need at least one alpha");
  }
  for (double a : config.alpha_grid) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument("config: alpha values must be in (0, 1)");
    }
  }
  for (int k : config.k_values) {
    if (k < 1) throw std::invalid_argument("config: k values must be >= 1");
  }
  if (config.model != GenerativeModel::gaussian_hetero && !config.k_values.empty()) {
    throw std::invalid_argument("config: k values apply to the heteroscedastic model");
  }
  if (config.model == GenerativeModel::gaussian_hetero && config.k_values.empty()) {
    throw std::invalid_argument("config: heteroscedastic model needs k values");
  }
  if (!(config.sigma_eps >= 0.0)) {
    throw std::invalid_argument("config: sigma_eps must be >= 0");
  }
}

SpaceDescriptor response_space(const ExperimentConfig& config) {
  if (config.model == GenerativeModel::distributional) {
    return SpaceDescriptor::wasserstein(config.grid_size);
  }
  return SpaceDescriptor::euclidean(config.s);
}

EuclideanSample generate_gaussian(const ExperimentConfig& config, int n,
                                  std::uint64_t seed) {
  const Eigen::MatrixXd chol = equicorrelation_cholesky(config.p, config.rho);
  const bool hetero = config.model == GenerativeModel::gaussian_hetero;
  Rng rng(seed);

  EuclideanSample sample;
  sample.X.resize(n, config.p);
  sample.Y.reserve(n);
  Eigen::VectorXd z(config.p);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < config.p; ++l) z[l] = rng.normal();
    const Eigen::VectorXd x = chol * z;
    sample.X.row(i) = x;
    // All regression coefficients are 1, so every response coordinate shares
    // the same mean sum(x).
    const double signal = x.sum();
    const double scale = hetero ? x.norm() : 1.0;
    Eigen::VectorXd y(config.s);
    for (int j = 0; j < config.s; ++j) y[j] = signal + scale * rng.normal();
    sample.Y.push_back(EuclideanPoint{std::move(y)});
  }
  return sample;
}

DistributionalSample generate_distributional(const ExperimentConfig& config,
                                             int n, std::uint64_t seed,
                                             bool active_only) {
  const Eigen::MatrixXd chol = equicorrelation_cholesky(config.p, config.rho);
  Rng rng(seed);

  DistributionalSample sample;
  sample.X.resize(n, config.p);
  sample.Y.reserve(n);
  Eigen::VectorXd z(config.p);
  std::vector<double> series(config.series_length);
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < config.p; ++l) z[l] = rng.normal();
    const Eigen::VectorXd x = chol * z;
    sample.X.row(i) = x;
    const double signal =
        config.intercept + config.slope * (active_only ? x[0] : x.sum());
    for (double& value : series) {
      value = signal + config.sigma_eps * rng.normal();
    }
    std::sort(series.begin(), series.end());
    // Empirical quantile function at the midpoint levels: order statistic
    // with 1-based index ceil(series_length * level).
    Eigen::VectorXd q(config.grid_size);
    for (int g = 0; g < config.grid_size; ++g) {
      const double level = (g + 0.5) / config.grid_size;
      const int index = std::max(1, ceil_index(config.series_length * level));
      q[g] = series[index - 1];
    }
    sample.Y.push_back(QuantileFunction{std::move(q)});
  }
  return sample;
}

namespace {

struct GeneratedData {
  Eigen::MatrixXd X;
  std::vector<MetricPoint> Y;
};

GeneratedData generate(const ExperimentConfig& config, int n,
                       std::uint64_t seed, bool active_only) {
  if (config.model == GenerativeModel::distributional) {
    auto s = generate_distributional(config, n, seed, active_only);
    return {std::move(s.X), std::move(s.Y)};
  }
  auto s = generate_gaussian(config, n, seed);
  return {std::move(s.X), std::move(s.Y)};
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X,
                            const std::vector<int>& indices) {
  Eigen::MatrixXd out(static_cast<int>(indices.size()), X.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<int>(i)) = X.row(indices[i]);
  }
  return out;
}

std::vector<MetricPoint> gather(const std::vector<MetricPoint>& Y,
                                const std::vector<int>& indices) {
  std::vector<MetricPoint> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(Y[i]);
  return out;
}

}  // namespace

CoverageReport run_coverage_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const SpaceDescriptor space = response_space(config);
  const bool hetero = config.model == GenerativeModel::gaussian_hetero;
  const std::vector<int> ks = hetero ? config.k_values : std::vector<int>{0};

  CoverageReport report;
  report.config = config;
  for (std::size_t n_index = 0; n_index < config.n_values.size(); ++n_index) {
    const int n = config.n_values[n_index];
    const auto started = std::chrono::steady_clock::now();

    // coverages[replicate][k_index * |alpha| + alpha_index]
    std::vector<std::vector<double>> coverages(
        config.replications,
        std::vector<double>(ks.size() * config.alpha_grid.size(), 0.0));

    parallel_for(config.replications, config.workers, [&](int replicate) {
      const ReplicateSeeds seeds =
          replicate_seeds(config.seed, static_cast<int>(n_index), replicate);
      const GeneratedData data = generate(config, n, seeds.generate, false);
      const SplitIndices parts = split(n, SplitFractions{0.5, 0.5, 0.0}, seeds.split);

      const auto model = std::make_shared<GlobalFrechetModel>(GlobalFrechetModel::fit(
          gather_rows(data.X, parts.train), gather(data.Y, parts.train), space));
      const ResidualSample sample =
          residuals(*model, gather_rows(data.X, parts.test),
                    gather(data.Y, parts.test), seeds.tiebreak);

      const GeneratedData eval = generate(config, config.eval_size, seeds.eval, false);

      for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        for (std::size_t ai = 0; ai < config.alpha_grid.size(); ++ai) {
          const double alpha = config.alpha_grid[ai];
          const PredictionRegion region =
              hetero ? heteroscedastic_knn_region(model, sample, alpha, ks[ki])
                     : homoscedastic_region(model, sample, alpha);
          coverages[replicate][ki * config.alpha_grid.size() + ai] =
              coverage(region, eval.X, eval.Y);
        }
      }
    });

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();

    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      for (std::size_t ai = 0; ai < config.alpha_grid.size(); ++ai) {
        CoverageCell cell;
        cell.n = n;
        cell.alpha = config.alpha_grid[ai];
        cell.k = ks[ki];
        cell.replicate_coverages.reserve(config.replications);
        for (int r = 0; r < config.replications; ++r) {
          cell.replicate_coverages.push_back(
              coverages[r][ki * config.alpha_grid.size() + ai]);
        }
        cell.mean = std::accumulate(cell.replicate_coverages.begin(),
                                    cell.replicate_coverages.end(), 0.0) /
                    config.replications;
        cell.stddev = sample_stddev(cell.replicate_coverages, cell.mean);
        cell.runtime_seconds = seconds;
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

SelectionReport run_selection_experiment(const ExperimentConfig& config) {
  validate_config(config);
  if (config.model != GenerativeModel::distributional) {
    throw std::invalid_argument(
        "selection experiment requires the distributional model");
  }
  if (config.p < 2) {
    throw std::invalid_argument("selection experiment requires p >= 2");
  }
  const SpaceDescriptor space = response_space(config);

  SelectionReport report;
  report.config = config;
  for (std::size_t n_index = 0; n_index < config.n_values.size(); ++n_index) {
    const int n = config.n_values[n_index];
    const auto started = std::chrono::steady_clock::now();

    std::vector<int> false_positives(config.replications, 0);
    std::vector<char> detected(config.replications, 0);

    parallel_for(config.replications, config.workers, [&](int replicate) {
      const ReplicateSeeds seeds =
          replicate_seeds(config.seed, static_cast<int>(n_index), replicate);
      const GeneratedData data = generate(config, n, seeds.generate, true);
      SelectionOptions options;
      options.alpha = config.selection_alpha;
      const std::vector<VariableReport> reports =
          select_variables(data.X, data.Y, space, options, seeds.selection);
      detected[replicate] = reports[0].selected ? 1 : 0;
      int fp = 0;
      for (std::size_t j = 1; j < reports.size(); ++j) {
        if (reports[j].selected) ++fp;
      }
      false_positives[replicate] = fp;
    });

    SelectionTier tier;
    tier.n = n;
    tier.replicate_false_positives = false_positives;
    tier.replicate_detected.assign(detected.begin(), detected.end());
    int detections = 0;
    int fp1 = 0;
    int fp2 = 0;
    for (int r = 0; r < config.replications; ++r) {
      detections += detected[r];
      if (false_positives[r] >= 1) ++fp1;
      if (false_positives[r] >= 2) ++fp2;
    }
    tier.detect_rate = static_cast<double>(detections) / config.replications;
    tier.fp_one_or_more_rate = static_cast<double>(fp1) / config.replications;
    tier.fp_two_or_more_rate = static_cast<double>(fp2) / config.replications;
    tier.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    report.tiers.push_back(std::move(tier));
  }
  return report;
}

std::string coverage_replicates_csv(const CoverageReport& report) {
  std::ostringstream out;
  out << "model,n,alpha,k,replicate,coverage\n";
  const std::string model = to_string(report.config.model);
  for (const CoverageCell& cell : report.cells) {
    for (std::size_t r = 0; r < cell.replicate_coverages.size(); ++r) {
      out << model << ',' << cell.n << ',' << format_double(cell.alpha) << ',';
      if (cell.k > 0) out << cell.k;
      out << ',' << r << ',' << format_double(cell.replicate_coverages[r])
          << '\n';
    }
  }
  return out.str();
}

std::string coverage_summary_csv(const CoverageReport& report) {
  std::ostringstream out;
  out << "model,n,alpha,k,mean_coverage,sd_coverage,replications,eval_size\n";
  const std::string model = to_string(report.config.model);
  for (const CoverageCell& cell : report.cells) {
    out << model << ',' << cell.n << ',' << format_double(cell.alpha) << ',';
    if (cell.k > 0) out << cell.k;
    out << ',' << format_double(cell.mean) << ',' << format_double(cell.stddev)
        << ',' << report.config.replications << ',' << report.config.eval_size
        << '\n';
  }
  return out.str();
}

std::string selection_replicates_csv(const SelectionReport& report) {
  std::ostringstream out;
  out << "n,replicate,detected_true,false_positives\n";
  for (const SelectionTier& tier : report.tiers) {
    for (std::size_t r = 0; r < tier.replicate_false_positives.size(); ++r) {
      out << tier.n << ',' << r << ',' << (tier.replicate_detected[r] ? 1 : 0)
          << ',' << tier.replicate_false_positives[r] << '\n';
    }
  }
  return out.str();
}

std::string selection_summary_csv(const SelectionReport& report) {
  std::ostringstream out;
  out << "n,detect_true_rate,fp_one_or_more_rate,fp_two_or_more_rate,"
         "replications\n";
  for (const SelectionTier& tier : report.tiers) {
    out << tier.n << ',' << format_double(tier.detect_rate) << ','
        << format_double(tier.fp_one_or_more_rate) << ','
        << format_double(tier.fp_two_or_more_rate) << ','
        << report.config.replications << '\n';
  }
  return out.str();
}

std::string to_string(GenerativeModel model) {
  switch (model) {
    case GenerativeModel::gaussian_homo: return "gaussian_homo";
    case GenerativeModel::gaussian_hetero: return "gaussian_hetero";
    case GenerativeModel::distributional: return "distributional";
  }
  return "unknown";
}

}  // namespace metricuq
