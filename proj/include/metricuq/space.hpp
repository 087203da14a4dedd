#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace metricuq {

// A point in m-dimensional Euclidean space.
struct EuclideanPoint {
  Eigen::VectorXd values;
};

// A one-dimensional distribution represented by its quantile function
// sampled on the space's midpoint probability grid (i - 0.5)/M, i = 1..M.
// Values must be non-decreasing along the grid.
struct QuantileFunction {
  Eigen::VectorXd values;
};

// A weighted graph on r nodes encoded as its Laplacian: symmetric, zero row
// sums, off-diagonal entries in [-W, 0] where W is the space's edge bound.
struct LaplacianGraph {
  Eigen::MatrixXd matrix;
};

using MetricPoint = std::variant<EuclideanPoint, QuantileFunction, LaplacianGraph>;

enum class SpaceKind { euclidean, wasserstein, laplacian };

// Distance used for prediction-region membership; may differ from the
// distance the regression is fit under.
enum class D2Choice { same_as_d1, sup_norm, frobenius, euclidean };

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::euclidean;
  // Euclidean dimension m, quantile grid size M, or node count r.
  int dim = 1;
  D2Choice d2 = D2Choice::same_as_d1;
  // Optional support bounds for quantile values (e.g. glucose in [40, 400]).
  std::optional<std::pair<double, double>> bounds;
  // Max edge weight W for the Laplacian space.
  double edge_bound = 1.0;

  static SpaceDescriptor euclidean(int m, D2Choice d2 = D2Choice::same_as_d1);
  static SpaceDescriptor wasserstein(
      int grid_size, std::optional<std::pair<double, double>> bounds = {},
      D2Choice d2 = D2Choice::same_as_d1);
  static SpaceDescriptor laplacian(int nodes, double edge_bound,
                                   D2Choice d2 = D2Choice::same_as_d1);

  // Length of the flattened coordinate representation of a point.
  int flat_size() const;
};

// Midpoint probability levels (i - 0.5)/M, strictly increasing in (0, 1).
Eigen::VectorXd midpoint_grid(int grid_size);

// Throws std::invalid_argument if the descriptor is internally inconsistent
// (bad dimension, d2 choice not valid for the kind, negative edge bound).
void validate_space(const SpaceDescriptor& space);

// Checks the point against the space's invariants (shape, finiteness,
// monotonicity / bounds / Laplacian structure within `tol`).
void validate_point(const MetricPoint& point, const SpaceDescriptor& space,
                    double tol = 1e-8);

// Flattened coordinates of a point (row-major for Laplacians).
Eigen::VectorXd flatten(const MetricPoint& point);

// Inverse of flatten; does not re-validate.
MetricPoint unflatten(const Eigen::VectorXd& coords, const SpaceDescriptor& space);

// Regression distance d1: Euclidean norm, root-mean-square quantile gap
// (grid approximation of the 2-Wasserstein distance), or Frobenius norm.
double distance_d1(const MetricPoint& a, const MetricPoint& b,
                   const SpaceDescriptor& space);

// Region distance d2 as configured on the descriptor.
double distance_d2(const MetricPoint& a, const MetricPoint& b,
                   const SpaceDescriptor& space);

// Minimizer of the weighted sum of squared d1 distances.  Weights may be
// signed; they are normalized by their sum internally.  For quantile
// functions the coordinate-wise average is projected back to monotone
// (pool-adjacent-violators) and clipped to the declared bounds; for
// Laplacians it is symmetrized, off-diagonals are clipped to [-W, 0] and the
// diagonal is rebuilt from the row sums.
MetricPoint weighted_barycenter(const std::vector<MetricPoint>& points,
                                const Eigen::VectorXd& weights,
                                const SpaceDescriptor& space);

// Weighted least-squares isotonic regression (pool adjacent violators with
// unit weights); returns the non-decreasing vector closest to `values`.
Eigen::VectorXd isotonic_projection(const Eigen::VectorXd& values);

// Projects an arbitrary square matrix onto the Laplacian constraint set by
// symmetrizing, clipping off-diagonals to [-edge_bound, 0] and setting the
// diagonal to the negated off-diagonal row sums.  This is a surrogate for the
// exact Frobenius projection (a convex QP); callers needing the exact
// projection can swap this function behind the same signature.
Eigen::MatrixXd laplacian_projection(const Eigen::MatrixXd& matrix,
                                     double edge_bound);

std::string to_string(SpaceKind kind);
std::string to_string(D2Choice choice);

}  // namespace metricuq
