#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "metricuq/dcov.hpp"
#include "metricuq/frechet.hpp"
#include "metricuq/regions.hpp"
#include "metricuq/selection.hpp"
#include "metricuq/simulate.hpp"
#include "metricuq/space.hpp"

namespace py = pybind11;
using namespace metricuq;

namespace {

// Python sees metric points as flat numpy arrays (row-major for Laplacians);
// the space descriptor carries the interpretation.
MetricPoint point_from_array(const Eigen::VectorXd& coords,
                             const SpaceDescriptor& space) {
  MetricPoint point = unflatten(coords, space);
  validate_point(point, space);
  return point;
}

std::vector<MetricPoint> points_from_matrix(const Eigen::MatrixXd& rows,
                                            const SpaceDescriptor& space) {
  std::vector<MetricPoint> out;
  out.reserve(rows.rows());
  for (int i = 0; i < rows.rows(); ++i) {
    out.push_back(point_from_array(rows.row(i).transpose(), space));
  }
  return out;
}

ResidualSample sample_from_parts(const Eigen::MatrixXd& predictors,
                                 const std::vector<double>& residual_values,
                                 const std::vector<double>& tiebreaks) {
  ResidualSample sample;
  sample.predictors = predictors;
  sample.residuals = residual_values;
  sample.tiebreaks = tiebreaks;
  return sample;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Prediction regions, homoscedasticity testing and variable "
            "selection for regression with metric-space valued responses";

  py::enum_<SpaceKind>(m, "SpaceKind")
      .value("euclidean", SpaceKind::euclidean)
      .value("wasserstein", SpaceKind::wasserstein)
      .value("laplacian", SpaceKind::laplacian);

  py::enum_<D2Choice>(m, "D2Choice")
      .value("same_as_d1", D2Choice::same_as_d1)
      .value("sup_norm", D2Choice::sup_norm)
      .value("frobenius", D2Choice::frobenius)
      .value("euclidean", D2Choice::euclidean);

  py::enum_<QuantileConvention>(m, "QuantileConvention")
      .value("conformal", QuantileConvention::conformal)
      .value("plugin", QuantileConvention::plugin);

  py::class_<SpaceDescriptor>(m, "SpaceDescriptor")
      .def_static("euclidean", &SpaceDescriptor::euclidean, py::arg("m"),
                  py::arg("d2") = D2Choice::same_as_d1)
      .def_static("wasserstein", &SpaceDescriptor::wasserstein,
                  py::arg("grid_size"),
                  py::arg("bounds") = std::optional<std::pair<double, double>>{},
                  py::arg("d2") = D2Choice::same_as_d1)
      .def_static("laplacian", &SpaceDescriptor::laplacian, py::arg("nodes"),
                  py::arg("edge_bound"), py::arg("d2") = D2Choice::same_as_d1)
      .def_readonly("kind", &SpaceDescriptor::kind)
      .def_readonly("dim", &SpaceDescriptor::dim)
      .def("flat_size", &SpaceDescriptor::flat_size);

  m.def("midpoint_grid", &midpoint_grid, py::arg("grid_size"));

  m.def(
      "distance_d1",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b,
         const SpaceDescriptor& space) {
        return distance_d1(point_from_array(a, space), point_from_array(b, space),
                           space);
      },
      py::arg("a"), py::arg("b"), py::arg("space"));
  m.def(
      "distance_d2",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& b,
         const SpaceDescriptor& space) {
        return distance_d2(point_from_array(a, space), point_from_array(b, space),
                           space);
      },
      py::arg("a"), py::arg("b"), py::arg("space"));

  m.def(
      "weighted_barycenter",
      [](const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
         const SpaceDescriptor& space) {
        return flatten(
            weighted_barycenter(points_from_matrix(points, space), weights, space));
      },
      py::arg("points"), py::arg("weights"), py::arg("space"),
      "Rows of `points` are flattened metric points; returns the flattened "
      "barycenter after the space's constraint projection.");

  py::class_<GlobalFrechetModel, std::shared_ptr<GlobalFrechetModel>>(
      m, "GlobalFrechetModel")
      .def_static(
          "fit",
          [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
             const SpaceDescriptor& space) {
            return std::make_shared<GlobalFrechetModel>(
                GlobalFrechetModel::fit(X, points_from_matrix(Y, space), space));
          },
          py::arg("X"), py::arg("Y"), py::arg("space"))
      .def("weights_at", &GlobalFrechetModel::weights_at, py::arg("x"))
      .def(
          "predict",
          [](const GlobalFrechetModel& model, const Eigen::VectorXd& x) {
            return flatten(model.predict(x));
          },
          py::arg("x"))
      .def_property_readonly("predictor_mean", &GlobalFrechetModel::predictor_mean)
      .def_property_readonly("cov_inverse", &GlobalFrechetModel::cov_inverse)
      .def_property_readonly("n", &GlobalFrechetModel::sample_size)
      .def_property_readonly("p", &GlobalFrechetModel::predictor_dim);

  m.def(
      "predict_without_variable",
      [](const std::shared_ptr<GlobalFrechetModel>& model,
         const Eigen::MatrixXd& X, int j, const Eigen::VectorXd& x) {
        return flatten(predict_without_variable(*model, X, j, x));
      },
      py::arg("model"), py::arg("X"), py::arg("j"), py::arg("x"));

  py::class_<SplitIndices>(m, "SplitIndices")
      .def_readonly("train", &SplitIndices::train)
      .def_readonly("test", &SplitIndices::test)
      .def_readonly("calib", &SplitIndices::calib);

  m.def(
      "split",
      [](int n, double train, double test, double calib, std::uint64_t seed) {
        return split(n, SplitFractions{train, test, calib}, seed);
      },
      py::arg("n"), py::arg("train"), py::arg("test"), py::arg("calib") = 0.0,
      py::arg("seed") = 1);

  py::class_<ResidualSample>(m, "ResidualSample")
      .def(py::init(&sample_from_parts), py::arg("predictors"),
           py::arg("residuals"), py::arg("tiebreaks"))
      .def_readonly("predictors", &ResidualSample::predictors)
      .def_readonly("residuals", &ResidualSample::residuals)
      .def_readonly("tiebreaks", &ResidualSample::tiebreaks)
      .def("__len__", &ResidualSample::size);

  m.def(
      "residuals",
      [](const std::shared_ptr<GlobalFrechetModel>& model,
         const Eigen::MatrixXd& X_test, const Eigen::MatrixXd& Y_test,
         std::uint64_t seed) {
        return residuals(*model, X_test,
                         points_from_matrix(Y_test, model->space()), seed);
      },
      py::arg("model"), py::arg("X_test"), py::arg("Y_test"), py::arg("seed") = 1);

  m.def("homoscedastic_radius", &homoscedastic_radius, py::arg("sample"),
        py::arg("alpha"),
        py::arg("convention") = QuantileConvention::conformal);

  py::class_<PredictionRegion>(m, "PredictionRegion")
      .def("radius_at", &PredictionRegion::radius_at, py::arg("x"))
      .def(
          "center_at",
          [](const PredictionRegion& region, const Eigen::VectorXd& x) {
            return flatten(region.center_at(x));
          },
          py::arg("x"))
      .def(
          "contains",
          [](const PredictionRegion& region, const Eigen::VectorXd& x,
             const Eigen::VectorXd& y) {
            return region.contains(x, point_from_array(y, region.space()));
          },
          py::arg("x"), py::arg("y"))
      .def_property_readonly("alpha", &PredictionRegion::alpha);

  m.def(
      "homoscedastic_region",
      [](const std::shared_ptr<GlobalFrechetModel>& model,
         const ResidualSample& sample, double alpha, QuantileConvention conv) {
        return homoscedastic_region(model, sample, alpha, conv);
      },
      py::arg("model"), py::arg("sample"), py::arg("alpha"),
      py::arg("convention") = QuantileConvention::conformal);
  m.def(
      "heteroscedastic_knn_region",
      [](const std::shared_ptr<GlobalFrechetModel>& model,
         const ResidualSample& sample, double alpha, int k,
         QuantileConvention conv) {
        return heteroscedastic_knn_region(model, sample, alpha, k, conv);
      },
      py::arg("model"), py::arg("sample"), py::arg("alpha"), py::arg("k"),
      py::arg("convention") = QuantileConvention::plugin);
  m.def(
      "conformal_knn_region",
      [](const std::shared_ptr<GlobalFrechetModel>& model,
         const ResidualSample& sample, const ResidualSample& calib, double alpha,
         int k) { return conformal_knn_region(model, sample, calib, alpha, k); },
      py::arg("model"), py::arg("sample"), py::arg("calib"), py::arg("alpha"),
      py::arg("k"));
  m.def(
      "unconditional_region",
      [](const Eigen::MatrixXd& Y, double alpha, const SpaceDescriptor& space,
         std::uint64_t seed, QuantileConvention conv,
         std::optional<double> center_fraction) {
        return unconditional_region(points_from_matrix(Y, space), alpha, space,
                                    seed, conv, center_fraction);
      },
      py::arg("Y"), py::arg("alpha"), py::arg("space"), py::arg("seed") = 1,
      py::arg("convention") = QuantileConvention::conformal,
      py::arg("center_fraction") = std::optional<double>{});

  m.def(
      "coverage",
      [](const PredictionRegion& region, const Eigen::MatrixXd& X_eval,
         const Eigen::MatrixXd& Y_eval) {
        return coverage(region, X_eval, points_from_matrix(Y_eval, region.space()));
      },
      py::arg("region"), py::arg("X_eval"), py::arg("Y_eval"));
  m.def(
      "symmetric_difference_error",
      [](const PredictionRegion& a, const PredictionRegion& b,
         const Eigen::MatrixXd& X_eval, const Eigen::MatrixXd& Y_eval) {
        return symmetric_difference_error(a, b, X_eval,
                                          points_from_matrix(Y_eval, a.space()));
      },
      py::arg("a"), py::arg("b"), py::arg("X_eval"), py::arg("Y_eval"));

  py::class_<DcovResult>(m, "DcovResult")
      .def_readonly("statistic", &DcovResult::statistic)
      .def_readonly("dcov_squared", &DcovResult::dcov_squared)
      .def_readonly("p_value", &DcovResult::p_value)
      .def_readonly("permutations", &DcovResult::permutations);

  m.def("dcov_squared", &dcov_squared, py::arg("X_rows"), py::arg("residuals"));
  m.def("homoscedasticity_test", &homoscedasticity_test, py::arg("X_rows"),
        py::arg("residuals"), py::arg("permutations") = 999, py::arg("seed") = 1);
  m.def(
      "decide_algorithm",
      [](const Eigen::MatrixXd& X_rows, const std::vector<double>& r,
         double level, int B, std::uint64_t seed) {
        return decide_algorithm(X_rows, r, level, B, seed) ==
                       VarianceRegime::heteroscedastic
                   ? "heteroscedastic"
                   : "homoscedastic";
      },
      py::arg("X_rows"), py::arg("residuals"), py::arg("level") = 0.05,
      py::arg("permutations") = 999, py::arg("seed") = 1);

  py::class_<WilcoxonResult>(m, "WilcoxonResult")
      .def_readonly("statistic", &WilcoxonResult::statistic)
      .def_readonly("z", &WilcoxonResult::z)
      .def_readonly("p_value", &WilcoxonResult::p_value)
      .def_readonly("used", &WilcoxonResult::used);
  m.def("wilcoxon_signed_rank", &wilcoxon_signed_rank, py::arg("values"));

  py::class_<LocalInterval>(m, "LocalInterval")
      .def_readonly("center", &LocalInterval::center)
      .def_readonly("radius", &LocalInterval::radius)
      .def_readonly("important", &LocalInterval::important);

  py::class_<VariableReport>(m, "VariableReport")
      .def_readonly("variable_index", &VariableReport::variable_index)
      .def_readonly("w_values", &VariableReport::w_values)
      .def_readonly("mean_w", &VariableReport::mean_w)
      .def_readonly("p_value_raw", &VariableReport::p_value_raw)
      .def_readonly("selected", &VariableReport::selected)
      .def_readonly("local_intervals", &VariableReport::local_intervals);

  m.def(
      "select_variables",
      [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
         const SpaceDescriptor& space, double alpha, double train_fraction,
         double test_fraction, bool local, std::uint64_t seed) {
        SelectionOptions options;
        options.alpha = alpha;
        options.splits = SplitFractions{train_fraction, test_fraction, 0.0};
        options.local_intervals = local;
        return select_variables(X, points_from_matrix(Y, space), space, options,
                                seed);
      },
      py::arg("X"), py::arg("Y"), py::arg("space"), py::arg("alpha") = 0.05,
      py::arg("train_fraction") = 0.5, py::arg("test_fraction") = 0.5,
      py::arg("local") = false, py::arg("seed") = 1);

  py::enum_<GenerativeModel>(m, "GenerativeModel")
      .value("gaussian_homo", GenerativeModel::gaussian_homo)
      .value("gaussian_hetero", GenerativeModel::gaussian_hetero)
      .value("distributional", GenerativeModel::distributional);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("model", &ExperimentConfig::model)
      .def_readwrite("p", &ExperimentConfig::p)
      .def_readwrite("s", &ExperimentConfig::s)
      .def_readwrite("rho", &ExperimentConfig::rho)
      .def_readwrite("series_length", &ExperimentConfig::series_length)
      .def_readwrite("intercept", &ExperimentConfig::intercept)
      .def_readwrite("slope", &ExperimentConfig::slope)
      .def_readwrite("sigma_eps", &ExperimentConfig::sigma_eps)
      .def_readwrite("grid_size", &ExperimentConfig::grid_size)
      .def_readwrite("n_values", &ExperimentConfig::n_values)
      .def_readwrite("alpha_grid", &ExperimentConfig::alpha_grid)
      .def_readwrite("k_values", &ExperimentConfig::k_values)
      .def_readwrite("replications", &ExperimentConfig::replications)
      .def_readwrite("eval_size", &ExperimentConfig::eval_size)
      .def_readwrite("selection_alpha", &ExperimentConfig::selection_alpha)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("workers", &ExperimentConfig::workers);

  py::class_<CoverageCell>(m, "CoverageCell")
      .def_readonly("n", &CoverageCell::n)
      .def_readonly("alpha", &CoverageCell::alpha)
      .def_readonly("k", &CoverageCell::k)
      .def_readonly("replicate_coverages", &CoverageCell::replicate_coverages)
      .def_readonly("mean", &CoverageCell::mean)
      .def_readonly("stddev", &CoverageCell::stddev);
  py::class_<CoverageReport>(m, "CoverageReport")
      .def_readonly("cells", &CoverageReport::cells);
  m.def("run_coverage_experiment", &run_coverage_experiment, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<SelectionTier>(m, "SelectionTier")
      .def_readonly("n", &SelectionTier::n)
      .def_readonly("detect_rate", &SelectionTier::detect_rate)
      .def_readonly("fp_one_or_more_rate", &SelectionTier::fp_one_or_more_rate)
      .def_readonly("fp_two_or_more_rate", &SelectionTier::fp_two_or_more_rate)
      .def_readonly("replicate_false_positives",
                    &SelectionTier::replicate_false_positives);
  py::class_<SelectionReport>(m, "SelectionReport")
      .def_readonly("tiers", &SelectionReport::tiers);
  m.def("run_selection_experiment", &run_selection_experiment, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "generate_gaussian",
      [](const ExperimentConfig& config, int n, std::uint64_t seed) {
        auto sample = generate_gaussian(config, n, seed);
        Eigen::MatrixXd Y(n, config.s);
        for (int i = 0; i < n; ++i) Y.row(i) = flatten(sample.Y[i]);
        return py::make_tuple(sample.X, Y);
      },
      py::arg("config"), py::arg("n"), py::arg("seed"));
  m.def(
      "generate_distributional",
      [](const ExperimentConfig& config, int n, std::uint64_t seed,
         bool active_only) {
        auto sample = generate_distributional(config, n, seed, active_only);
        Eigen::MatrixXd Y(n, config.grid_size);
        for (int i = 0; i < n; ++i) Y.row(i) = flatten(sample.Y[i]);
        return py::make_tuple(sample.X, Y);
      },
      py::arg("config"), py::arg("n"), py::arg("seed"),
      py::arg("active_only") = false);
}
