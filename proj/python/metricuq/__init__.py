"""Prediction regions, homoscedasticity testing and variable selection for
regression with metric-space valued responses.

The heavy lifting lives in the compiled extension ``metricuq._core``; this
package re-exports its public surface.
"""

from ._core import (
    CoverageCell,
    CoverageReport,
    D2Choice,
    DcovResult,
    ExperimentConfig,
    GenerativeModel,
    GlobalFrechetModel,
    LocalInterval,
    PredictionRegion,
    QuantileConvention,
    ResidualSample,
    SelectionReport,
    SelectionTier,
    SpaceDescriptor,
    SpaceKind,
    SplitIndices,
    VariableReport,
    WilcoxonResult,
    conformal_knn_region,
    coverage,
    decide_algorithm,
    dcov_squared,
    distance_d1,
    distance_d2,
    generate_distributional,
    generate_gaussian,
    heteroscedastic_knn_region,
    homoscedastic_radius,
    homoscedastic_region,
    homoscedasticity_test,
    midpoint_grid,
    predict_without_variable,
    residuals,
    run_coverage_experiment,
    run_selection_experiment,
    select_variables,
    split,
    symmetric_difference_error,
    unconditional_region,
    weighted_barycenter,
    wilcoxon_signed_rank,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
