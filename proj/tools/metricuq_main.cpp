// Command-line surface for fitting regressions, building prediction
// regions, testing for heteroscedasticity, selecting variables and running
// simulation experiments.  All validation failures exit nonzero with a
// single machine-parsable line: error[CODE]: detail.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "metricuq/dcov.hpp"
#include "metricuq/rng.hpp"
#include "metricuq/frechet.hpp"
#include "metricuq/regions.hpp"
#include "metricuq/selection.hpp"
#include "metricuq/serialize.hpp"
#include "metricuq/simulate.hpp"
#include "metricuq/space.hpp"

namespace {

using namespace metricuq;

struct CliError : std::runtime_error {
  CliError(std::string code_in, const std::string& message)
      : std::runtime_error(message), code(std::move(code_in)) {}
  std::string code;
};

[[noreturn]] void die(const std::string& code, const std::string& message) {
  throw CliError(code, message);
}

SpaceDescriptor parse_space(const std::string& spec, const std::string& d2_name) {
  std::vector<std::string> parts;
  std::stringstream stream(spec);
  std::string part;
  while (std::getline(stream, part, ':')) parts.push_back(part);
  if (parts.empty()) die("BAD_SPACE", "empty --space value");

  D2Choice d2 = D2Choice::same_as_d1;
  if (d2_name == "same" || d2_name == "same-as-d1") {
    d2 = D2Choice::same_as_d1;
  } else if (d2_name == "sup" || d2_name == "sup-norm") {
    d2 = D2Choice::sup_norm;
  } else if (d2_name == "frobenius") {
    d2 = D2Choice::frobenius;
  } else if (d2_name == "euclidean") {
    d2 = D2Choice::euclidean;
  } else {
    die("BAD_SPACE", "unknown --d2 value '" + d2_name + "'");
  }

  try {
    if (parts[0] == "euclidean") {
      if (parts.size() != 2) die("BAD_SPACE", "expected euclidean:<m>");
      return SpaceDescriptor::euclidean(std::stoi(parts[1]), d2);
    }
    if (parts[0] == "wasserstein") {
      if (parts.size() != 2 && parts.size() != 3) {
        die("BAD_SPACE", "expected wasserstein:<M>[:<lower>,<upper>]");
      }
      std::optional<std::pair<double, double>> bounds;
      if (parts.size() == 3) {
        const auto comma = parts[2].find(',');
        if (comma == std::string::npos) {
          die("BAD_SPACE", "bounds must be <lower>,<upper>");
        }
        bounds = {std::stod(parts[2].substr(0, comma)),
                  std::stod(parts[2].substr(comma + 1))};
      }
      return SpaceDescriptor::wasserstein(std::stoi(parts[1]), bounds, d2);
    }
    if (parts[0] == "laplacian") {
      if (parts.size() != 3) die("BAD_SPACE", "expected laplacian:<r>:<W>");
      return SpaceDescriptor::laplacian(std::stoi(parts[1]), std::stod(parts[2]), d2);
    }
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    die("BAD_SPACE", std::string("cannot parse --space: ") + e.what());
  }
  die("BAD_SPACE", "unknown space kind '" + parts[0] + "'");
}

CsvTable load_csv(const std::string& path) {
  try {
    return read_csv(path);
  } catch (const std::exception& e) {
    die("IO", e.what());
  }
}

std::vector<MetricPoint> rows_to_points(const Eigen::MatrixXd& values,
                                        const SpaceDescriptor& space,
                                        const std::string& path) {
  if (values.cols() != space.flat_size()) {
    die("DATA_SHAPE", "'" + path + "' has " + std::to_string(values.cols()) +
                          " columns, space " + to_string(space.kind) +
                          " expects " + std::to_string(space.flat_size()));
  }
  std::vector<MetricPoint> points;
  points.reserve(values.rows());
  for (int i = 0; i < values.rows(); ++i) {
    MetricPoint point = unflatten(values.row(i).transpose(), space);
    try {
      validate_point(point, space);
    } catch (const std::exception& e) {
      const std::string code = space.kind == SpaceKind::laplacian
                                   ? "INVALID_LAPLACIAN"
                                   : "VALIDATION";
      die(code, "'" + path + "' row " + std::to_string(i + 1) + ": " + e.what());
    }
    points.push_back(std::move(point));
  }
  return points;
}

struct Dataset {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
  std::vector<MetricPoint> Y;
};

Dataset load_dataset(const std::string& predictors, const std::string& responses,
                     const SpaceDescriptor& space) {
  const CsvTable xs = load_csv(predictors);
  const CsvTable ys = load_csv(responses);
  if (xs.values.rows() == 0 || ys.values.rows() == 0) {
    die("EMPTY_DATA", "no data rows in '" +
                          (xs.values.rows() == 0 ? predictors : responses) + "'");
  }
  if (xs.values.rows() != ys.values.rows()) {
    die("DATA_SHAPE", "'" + predictors + "' has " +
                          std::to_string(xs.values.rows()) + " rows, '" +
                          responses + "' has " + std::to_string(ys.values.rows()));
  }
  Dataset data;
  data.X = xs.values;
  data.names = xs.header;
  data.Y = rows_to_points(ys.values, space, responses);
  return data;
}

std::shared_ptr<const GlobalFrechetModel> load_model(const std::string& path) {
  try {
    return std::make_shared<GlobalFrechetModel>(model_from_json(read_file(path)));
  } catch (const std::exception& e) {
    die("IO", "cannot load model '" + path + "': " + e.what());
  }
}

SplitFractions parse_splits(const std::string& text, bool allow_calib) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, ',')) {
    try {
      values.push_back(std::stod(part));
    } catch (const std::exception&) {
      die("MODE_ARGS", "cannot parse --splits fraction '" + part + "'");
    }
  }
  if (values.size() < 2 || values.size() > (allow_calib ? 3u : 2u)) {
    die("MODE_ARGS", "--splits needs two" +
                         std::string(allow_calib ? " or three" : "") +
                         " comma-separated fractions");
  }
  SplitFractions fractions;
  fractions.train = values[0];
  fractions.test = values[1];
  fractions.calib = values.size() == 3 ? values[2] : 0.0;
  return fractions;
}

std::string radius_text(double radius) {
  return std::isinf(radius) ? "inf" : format_full_precision(radius);
}

void print_region_report(const PredictionRegion& region,
                         const Eigen::MatrixXd& sample_predictors) {
  std::cout << "alpha: " << region.alpha() << "\n";
  if (const auto* constant = std::get_if<ConstantRadiusRule>(&region.rule())) {
    std::cout << "radius: " << radius_text(constant->radius) << "\n";
    return;
  }
  std::vector<double> radii;
  radii.reserve(sample_predictors.rows());
  for (int i = 0; i < sample_predictors.rows(); ++i) {
    radii.push_back(region.radius_at(sample_predictors.row(i).transpose()));
  }
  std::sort(radii.begin(), radii.end());
  std::cout << "radius min: " << radius_text(radii.front()) << "\n"
            << "radius median: " << radius_text(radii[radii.size() / 2]) << "\n"
            << "radius max: " << radius_text(radii.back()) << "\n";
}

// ---- subcommand implementations ----

struct FitArgs {
  std::string predictors, responses, space, d2 = "same", out;
};

int run_fit(const FitArgs& args) {
  const SpaceDescriptor space = parse_space(args.space, args.d2);
  const Dataset data = load_dataset(args.predictors, args.responses, space);
  GlobalFrechetModel model = [&] {
    try {
      return GlobalFrechetModel::fit(data.X, data.Y, space);
    } catch (const std::exception& e) {
      die("VALIDATION", e.what());
    }
  }();
  atomic_write(args.out, model_to_json(model));
  std::cout << "n: " << model.sample_size() << "\n"
            << "p: " << model.predictor_dim() << "\n"
            << "space: " << to_string(space.kind) << " dim " << space.dim
            << " d2 " << to_string(space.d2) << "\n"
            << "model: " << args.out << "\n";
  return 0;
}

struct RegionArgs {
  std::string model, predictors, responses, mode = "homo", out;
  std::string space, d2 = "same";
  std::string splits = "0.667,0.333";
  std::string convention = "conformal";
  double alpha = 0.1;
  int k = 0;
  std::uint64_t seed = 1;
  double center_split = 0.0;
};

int run_region(const RegionArgs& args) {
  if (!(args.alpha > 0.0 && args.alpha < 1.0)) {
    die("MODE_ARGS", "--alpha must be in (0, 1)");
  }
  QuantileConvention convention = QuantileConvention::conformal;
  if (args.convention == "plugin") {
    convention = QuantileConvention::plugin;
  } else if (args.convention != "conformal") {
    die("MODE_ARGS", "--convention must be conformal or plugin");
  }

  if (args.mode == "unconditional") {
    if (args.responses.empty()) {
      die("MODE_ARGS", "unconditional mode needs --responses");
    }
    SpaceDescriptor space;
    if (!args.space.empty()) {
      space = parse_space(args.space, args.d2);
    } else if (!args.model.empty()) {
      space = load_model(args.model)->space();
    } else {
      die("MODE_ARGS", "unconditional mode needs --space or --model");
    }
    const CsvTable ys = load_csv(args.responses);
    if (ys.values.rows() == 0) die("EMPTY_DATA", "no data rows in '" + args.responses + "'");
    const std::vector<MetricPoint> Y = rows_to_points(ys.values, space, args.responses);
    std::optional<double> center_fraction;
    if (args.center_split > 0.0) center_fraction = args.center_split;
    const PredictionRegion region = unconditional_region(
        Y, args.alpha, space, args.seed, convention, center_fraction);
    atomic_write(args.out, region_to_json(region, std::nullopt));
    print_region_report(region, Eigen::MatrixXd(0, 0));
    std::cout << "region: " << args.out << "\n";
    return 0;
  }

  if (args.model.empty()) die("MODE_ARGS", "--model is required");
  const auto model = load_model(args.model);
  const Dataset data =
      load_dataset(args.predictors, args.responses, model->space());
  const int n = static_cast<int>(data.Y.size());

  if (args.mode == "homo") {
    const ResidualSample sample = residuals(*model, data.X, data.Y, args.seed);
    const PredictionRegion region =
        homoscedastic_region(model, sample, args.alpha, convention);
    atomic_write(args.out, region_to_json(region, args.model));
    print_region_report(region, data.X);
  } else if (args.mode == "knn") {
    if (args.k <= 0) die("MODE_ARGS", "knn mode needs --k");
    if (args.k > n) {
      die("K_RANGE", "--k " + std::to_string(args.k) + " exceeds the " +
                         std::to_string(n) + " test rows");
    }
    const ResidualSample sample = residuals(*model, data.X, data.Y, args.seed);
    const PredictionRegion region =
        heteroscedastic_knn_region(model, sample, args.alpha, args.k);
    atomic_write(args.out, region_to_json(region, args.model));
    print_region_report(region, data.X);
  } else if (args.mode == "conformal") {
    if (args.k <= 0) die("MODE_ARGS", "conformal mode needs --k");
    const SplitFractions fractions = parse_splits(args.splits, false);
    SplitIndices parts;
    try {
      parts = split(n, fractions, Rng::mix(args.seed, 0x73706c6974ULL));
    } catch (const std::exception& e) {
      die("MODE_ARGS", e.what());
    }
    if (args.k > static_cast<int>(parts.train.size())) {
      die("K_RANGE", "--k " + std::to_string(args.k) + " exceeds the " +
                         std::to_string(parts.train.size()) + " radius rows");
    }
    Eigen::MatrixXd x_fit(static_cast<int>(parts.train.size()), data.X.cols());
    Eigen::MatrixXd x_cal(static_cast<int>(parts.test.size()), data.X.cols());
    std::vector<MetricPoint> y_fit, y_cal;
    for (std::size_t i = 0; i < parts.train.size(); ++i) {
      x_fit.row(static_cast<int>(i)) = data.X.row(parts.train[i]);
      y_fit.push_back(data.Y[parts.train[i]]);
    }
    for (std::size_t i = 0; i < parts.test.size(); ++i) {
      x_cal.row(static_cast<int>(i)) = data.X.row(parts.test[i]);
      y_cal.push_back(data.Y[parts.test[i]]);
    }
    const ResidualSample sample =
        residuals(*model, x_fit, y_fit, Rng::mix(args.seed, 1));
    const ResidualSample calib =
        residuals(*model, x_cal, y_cal, Rng::mix(args.seed, 2));
    const PredictionRegion region =
        conformal_knn_region(model, sample, calib, args.alpha, args.k);
    atomic_write(args.out, region_to_json(region, args.model));
    print_region_report(region, data.X);
  } else {
    die("MODE_ARGS", "unknown --mode '" + args.mode + "'");
  }
  std::cout << "region: " << args.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string region, model, predictors, responses, out;
};

PredictionRegion load_region(const EvalArgs& args) {
  SerializedRegion serialized;
  try {
    serialized = region_from_json(read_file(args.region));
  } catch (const std::exception& e) {
    die("IO", "cannot load region '" + args.region + "': " + e.what());
  }
  std::shared_ptr<const GlobalFrechetModel> model;
  if (!args.model.empty()) {
    model = load_model(args.model);
  } else if (serialized.model_file) {
    // Model paths are stored as written; resolve relative to the region file.
    std::filesystem::path model_path(*serialized.model_file);
    if (model_path.is_relative()) {
      model_path = std::filesystem::path(args.region).parent_path() / model_path;
    }
    model = load_model(model_path.string());
  }
  try {
    return assemble_region(serialized, std::move(model));
  } catch (const std::exception& e) {
    die("VALIDATION", e.what());
  }
}

int run_contains(const EvalArgs& args) {
  const PredictionRegion region = load_region(args);
  const Dataset data =
      load_dataset(args.predictors, args.responses, region.space());
  std::ostringstream out;
  out << "index,contained\n";
  for (std::size_t i = 0; i < data.Y.size(); ++i) {
    const bool inside =
        region.contains(data.X.row(static_cast<int>(i)).transpose(), data.Y[i]);
    out << i << ',' << (inside ? 1 : 0) << '\n';
  }
  if (args.out.empty()) {
    std::cout << out.str();
  } else {
    atomic_write(args.out, out.str());
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

int run_coverage(const EvalArgs& args) {
  const PredictionRegion region = load_region(args);
  const Dataset data =
      load_dataset(args.predictors, args.responses, region.space());
  std::cout << "coverage: "
            << format_full_precision(coverage(region, data.X, data.Y)) << "\n";
  return 0;
}

struct TestArgs {
  std::string model, predictors, responses;
  int permutations = 999;
  double level = 0.05;
  std::uint64_t seed = 1;
};

int run_test_homoscedastic(const TestArgs& args) {
  if (args.permutations < 1) {
    die("BAD_B", "--permutations must be >= 1, got " +
                     std::to_string(args.permutations));
  }
  const auto model = load_model(args.model);
  const Dataset data =
      load_dataset(args.predictors, args.responses, model->space());
  const ResidualSample sample = residuals(*model, data.X, data.Y, args.seed);
  const DcovResult result = homoscedasticity_test(
      data.X, sample.residuals, args.permutations, args.seed);
  std::cout << "statistic: " << format_full_precision(result.statistic) << "\n"
            << "dcov_squared: " << format_full_precision(result.dcov_squared)
            << "\n"
            << "permutations: " << result.permutations << "\n"
            << "p_value: " << format_full_precision(result.p_value) << "\n"
            << "decision: "
            << (result.p_value <= args.level ? "heteroscedastic" : "homoscedastic")
            << " (level " << args.level << ")\n";
  return 0;
}

struct SelectArgs {
  std::string predictors, responses, space, d2 = "same", out;
  std::string splits = "0.5,0.5";
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool local = false;
};

int run_select(const SelectArgs& args) {
  const SpaceDescriptor space = parse_space(args.space, args.d2);
  const Dataset data = load_dataset(args.predictors, args.responses, space);
  if (data.X.cols() < 2) {
    die("NEED_P2", "variable selection needs at least two predictors");
  }
  SelectionOptions options;
  options.alpha = args.alpha;
  options.splits = parse_splits(args.splits, false);
  options.local_intervals = args.local;
  std::vector<VariableReport> reports;
  try {
    reports = select_variables(data.X, data.Y, space, options, args.seed);
  } catch (const std::exception& e) {
    die("VALIDATION", e.what());
  }

  std::ostringstream out;
  out << "Variable No.,Variable Name,Selected,Raw p-value\n";
  for (const VariableReport& report : reports) {
    out << (report.variable_index + 1) << ','
        << data.names[report.variable_index] << ','
        << (report.selected ? "TRUE" : "FALSE") << ','
        << format_full_precision(report.p_value_raw) << '\n';
  }
  if (args.out.empty()) {
    std::cout << out.str();
  } else {
    atomic_write(args.out, out.str());
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

struct SimulateArgs {
  std::string config, out;
  int workers = 0;
};

ExperimentConfig parse_config_file(const std::string& path, std::string* experiment) {
  const std::string text = [&] {
    try {
      return read_file(path);
    } catch (const std::exception& e) {
      die("IO", e.what());
    }
  }();

  ExperimentConfig config;
  *experiment = "coverage";
  bool k_given = false;

  std::istringstream lines(text);
  std::string line;
  int line_number = 0;
  while (std::getline(lines, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      die("CONFIG_PARSE", path + " line " + std::to_string(line_number) +
                              ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto parse_int_list = [&](const std::string& v) {
      std::vector<int> out_list;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) out_list.push_back(std::stoi(trim(item)));
      return out_list;
    };
    auto parse_double_list = [&](const std::string& v) {
      std::vector<double> out_list;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) out_list.push_back(std::stod(trim(item)));
      return out_list;
    };
    try {
      if (key == "model") {
        if (value == "gaussian_homo") config.model = GenerativeModel::gaussian_homo;
        else if (value == "gaussian_hetero") config.model = GenerativeModel::gaussian_hetero;
        else if (value == "distributional") config.model = GenerativeModel::distributional;
        else die("CONFIG_PARSE", path + " line " + std::to_string(line_number) +
                                     ": unknown model '" + value + "'");
      } else if (key == "experiment") {
        if (value != "coverage" && value != "selection") {
          die("CONFIG_PARSE", path + " line " + std::to_string(line_number) +
                                  ": experiment must be coverage or selection");
        }
        *experiment = value;
      } else if (key == "p") config.p = std::stoi(value);
      else if (key == "s") config.s = std::stoi(value);
      else if (key == "rho") config.rho = std::stod(value);
      else if (key == "n") config.n_values = parse_int_list(value);
      else if (key == "alpha") config.alpha_grid = parse_double_list(value);
      else if (key == "k") { config.k_values = parse_int_list(value); k_given = true; }
      else if (key == "replications") config.replications = std::stoi(value);
      else if (key == "eval_size") config.eval_size = std::stoi(value);
      else if (key == "seed") config.seed = std::stoull(value);
      else if (key == "series_length") config.series_length = std::stoi(value);
      else if (key == "intercept") config.intercept = std::stod(value);
      else if (key == "slope") config.slope = std::stod(value);
      else if (key == "sigma_eps") config.sigma_eps = std::stod(value);
      else if (key == "grid_size") config.grid_size = std::stoi(value);
      else if (key == "selection_alpha") config.selection_alpha = std::stod(value);
      else die("CONFIG_PARSE", path + " line " + std::to_string(line_number) +
                                   ": unknown key '" + key + "'");
    } catch (const CliError&) {
      throw;
    } catch (const std::exception&) {
      die("CONFIG_PARSE", path + " line " + std::to_string(line_number) +
                              ": cannot parse value '" + value + "'");
    }
  }
  (void)k_given;
  return config;
}

std::string render_config(const ExperimentConfig& config,
                          const std::string& experiment) {
  std::ostringstream out;
  out << "experiment = " << experiment << "\n"
      << "model = " << to_string(config.model) << "\n"
      << "p = " << config.p << "\n"
      << "s = " << config.s << "\n"
      << "rho = " << format_full_precision(config.rho) << "\n";
  out << "n = ";
  for (std::size_t i = 0; i < config.n_values.size(); ++i) {
    if (i) out << ',';
    out << config.n_values[i];
  }
  out << "\nalpha = ";
  for (std::size_t i = 0; i < config.alpha_grid.size(); ++i) {
    if (i) out << ',';
    out << format_full_precision(config.alpha_grid[i]);
  }
  out << "\n";
  if (!config.k_values.empty()) {
    out << "k = ";
    for (std::size_t i = 0; i < config.k_values.size(); ++i) {
      if (i) out << ',';
      out << config.k_values[i];
    }
    out << "\n";
  }
  out << "replications = " << config.replications << "\n"
      << "eval_size = " << config.eval_size << "\n"
      << "seed = " << config.seed << "\n"
      << "series_length = " << config.series_length << "\n"
      << "intercept = " << format_full_precision(config.intercept) << "\n"
      << "slope = " << format_full_precision(config.slope) << "\n"
      << "sigma_eps = " << format_full_precision(config.sigma_eps) << "\n"
      << "grid_size = " << config.grid_size << "\n"
      << "selection_alpha = " << format_full_precision(config.selection_alpha)
      << "\n";
  return out.str();
}

int run_simulate(const SimulateArgs& args) {
  std::string experiment;
  ExperimentConfig config = parse_config_file(args.config, &experiment);
  config.workers = args.workers;
  try {
    validate_config(config);
  } catch (const std::exception& e) {
    die("CONFIG_PARSE", e.what());
  }

  std::filesystem::create_directories(args.out);
  const std::filesystem::path outdir(args.out);

  const std::string resolved = render_config(config, experiment);
  std::cout << resolved;
  atomic_write(outdir / "config_resolved.txt", resolved);

  if (experiment == "coverage") {
    const CoverageReport report = run_coverage_experiment(config);
    atomic_write(outdir / "coverage_replicates.csv", coverage_replicates_csv(report));
    atomic_write(outdir / "coverage_summary.csv", coverage_summary_csv(report));
    for (const CoverageCell& cell : report.cells) {
      std::cout << "n=" << cell.n << " alpha=" << cell.alpha;
      if (cell.k > 0) std::cout << " k=" << cell.k;
      std::cout << " mean=" << cell.mean << " sd=" << cell.stddev
                << " runtime=" << cell.runtime_seconds << "s\n";
    }
  } else {
    const SelectionReport report = run_selection_experiment(config);
    atomic_write(outdir / "selection_replicates.csv", selection_replicates_csv(report));
    atomic_write(outdir / "selection_summary.csv", selection_summary_csv(report));
    for (const SelectionTier& tier : report.tiers) {
      std::cout << "n=" << tier.n << " detect=" << tier.detect_rate
                << " fp1=" << tier.fp_one_or_more_rate
                << " fp2=" << tier.fp_two_or_more_rate
                << " runtime=" << tier.runtime_seconds << "s\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction regions and variable selection for metric-space "
               "valued regression"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a regression model");
  fit_cmd->add_option("--predictors", fit_args.predictors)->required();
  fit_cmd->add_option("--responses", fit_args.responses)->required();
  fit_cmd->add_option("--space", fit_args.space)->required();
  fit_cmd->add_option("--d2", fit_args.d2);
  fit_cmd->add_option("--out", fit_args.out)->required();

  RegionArgs region_args;
  auto* region_cmd = app.add_subcommand("region", "Build a prediction region");
  region_cmd->add_option("--model", region_args.model);
  region_cmd->add_option("--predictors", region_args.predictors);
  region_cmd->add_option("--responses", region_args.responses);
  region_cmd->add_option("--space", region_args.space);
  region_cmd->add_option("--d2", region_args.d2);
  region_cmd->add_option("--alpha", region_args.alpha);
  region_cmd->add_option("--mode", region_args.mode);
  region_cmd->add_option("--k", region_args.k);
  region_cmd->add_option("--splits", region_args.splits);
  region_cmd->add_option("--seed", region_args.seed);
  region_cmd->add_option("--convention", region_args.convention);
  region_cmd->add_option("--center-split", region_args.center_split);
  region_cmd->add_option("--out", region_args.out)->required();

  EvalArgs contains_args;
  auto* contains_cmd = app.add_subcommand("contains", "Evaluate region membership");
  contains_cmd->add_option("--region", contains_args.region)->required();
  contains_cmd->add_option("--model", contains_args.model);
  contains_cmd->add_option("--predictors", contains_args.predictors)->required();
  contains_cmd->add_option("--responses", contains_args.responses)->required();
  contains_cmd->add_option("--out", contains_args.out);

  EvalArgs coverage_args;
  auto* coverage_cmd = app.add_subcommand("coverage", "Evaluate empirical coverage");
  coverage_cmd->add_option("--region", coverage_args.region)->required();
  coverage_cmd->add_option("--model", coverage_args.model);
  coverage_cmd->add_option("--predictors", coverage_args.predictors)->required();
  coverage_cmd->add_option("--responses", coverage_args.responses)->required();

  TestArgs test_args;
  auto* test_cmd = app.add_subcommand(
      "test-homoscedastic", "Distance-covariance permutation test on residuals");
  test_cmd->add_option("--model", test_args.model)->required();
  test_cmd->add_option("--predictors", test_args.predictors)->required();
  test_cmd->add_option("--responses", test_args.responses)->required();
  test_cmd->add_option("--permutations", test_args.permutations);
  test_cmd->add_option("--level", test_args.level);
  test_cmd->add_option("--seed", test_args.seed);

  SelectArgs select_args;
  auto* select_cmd = app.add_subcommand("select", "Variable selection report");
  select_cmd->add_option("--predictors", select_args.predictors)->required();
  select_cmd->add_option("--responses", select_args.responses)->required();
  select_cmd->add_option("--space", select_args.space)->required();
  select_cmd->add_option("--d2", select_args.d2);
  select_cmd->add_option("--alpha", select_args.alpha);
  select_cmd->add_option("--splits", select_args.splits);
  select_cmd->add_option("--seed", select_args.seed);
  select_cmd->add_flag("--local", select_args.local);
  select_cmd->add_option("--out", select_args.out);

  SimulateArgs simulate_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a simulation experiment");
  simulate_cmd->add_option("--config", simulate_args.config)->required();
  simulate_cmd->add_option("--out", simulate_args.out)->required();
  simulate_cmd->add_option("--workers", simulate_args.workers);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) return run_fit(fit_args);
    if (*region_cmd) return run_region(region_args);
    if (*contains_cmd) return run_contains(contains_args);
    if (*coverage_cmd) return run_coverage(coverage_args);
    if (*test_cmd) return run_test_homoscedastic(test_args);
    if (*select_cmd) return run_select(select_args);
    if (*simulate_cmd) return run_simulate(simulate_args);
  } catch (const CliError& e) {
    std::cerr << "error[" << e.code << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[INTERNAL]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
