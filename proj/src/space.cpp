#include "metricuq/space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace metricuq {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

std::string shape_of(const MetricPoint& point) {
  std::ostringstream out;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LaplacianGraph>) {
          out << "laplacian " << p.matrix.rows() << "x" << p.matrix.cols();
        } else if constexpr (std::is_same_v<T, QuantileFunction>) {
          out << "quantile grid of length " << p.values.size();
        } else {
          out << "euclidean vector of length " << p.values.size();
        }
      },
      point);
  return out.str();
}

// Both arguments must live in `space` and agree on dimensions.
void check_pair(const MetricPoint& a, const MetricPoint& b,
                const SpaceDescriptor& space) {
  const auto expect_kind = [&](const MetricPoint& p) {
    const bool ok =
        (space.kind == SpaceKind::euclidean && std::holds_alternative<EuclideanPoint>(p)) ||
        (space.kind == SpaceKind::wasserstein && std::holds_alternative<QuantileFunction>(p)) ||
        (space.kind == SpaceKind::laplacian && std::holds_alternative<LaplacianGraph>(p));
    if (!ok) {
      fail("point kind does not match space " + to_string(space.kind) +
           ": got " + shape_of(p));
    }
  };
  expect_kind(a);
  expect_kind(b);
  if (flatten(a).size() != flatten(b).size() ||
      flatten(a).size() != space.flat_size()) {
    fail("dimension mismatch: " + shape_of(a) + " vs " + shape_of(b) +
         " in a space expecting flat size " + std::to_string(space.flat_size()));
  }
}

double sup_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>();
}

}  // namespace

SpaceDescriptor SpaceDescriptor::euclidean(int m, D2Choice d2) {
  SpaceDescriptor space;
  space.kind = SpaceKind::euclidean;
  space.dim = m;
  space.d2 = d2;
  validate_space(space);
  return space;
}

SpaceDescriptor SpaceDescriptor::wasserstein(
    int grid_size, std::optional<std::pair<double, double>> bounds, D2Choice d2) {
  SpaceDescriptor space;
  space.kind = SpaceKind::wasserstein;
  space.dim = grid_size;
  space.d2 = d2;
  space.bounds = bounds;
  validate_space(space);
  return space;
}

SpaceDescriptor SpaceDescriptor::laplacian(int nodes, double edge_bound,
                                           D2Choice d2) {
  SpaceDescriptor space;
  space.kind = SpaceKind::laplacian;
  space.dim = nodes;
  space.d2 = d2;
  space.edge_bound = edge_bound;
  validate_space(space);
  return space;
}

int SpaceDescriptor::flat_size() const {
  return kind == SpaceKind::laplacian ? dim * dim : dim;
}

Eigen::VectorXd midpoint_grid(int grid_size) {
  Eigen::VectorXd grid(grid_size);
  for (int i = 0; i < grid_size; ++i) {
    grid[i] = (i + 0.5) / grid_size;
  }
  return grid;
}

void validate_space(const SpaceDescriptor& space) {
  if (space.dim < 1) fail("space dimension must be >= 1");
  switch (space.kind) {
    case SpaceKind::euclidean:
      if (space.d2 != D2Choice::same_as_d1 && space.d2 != D2Choice::sup_norm &&
          space.d2 != D2Choice::euclidean) {
        fail("d2 choice " + to_string(space.d2) + " is not valid for euclidean");
      }
      break;
    case SpaceKind::wasserstein:
      if (space.d2 != D2Choice::same_as_d1 && space.d2 != D2Choice::sup_norm) {
        fail("d2 choice " + to_string(space.d2) + " is not valid for wasserstein");
      }
      if (space.bounds && space.bounds->first > space.bounds->second) {
        fail("quantile support bounds are inverted");
      }
      break;
    case SpaceKind::laplacian:
      if (space.d2 != D2Choice::same_as_d1 && space.d2 != D2Choice::frobenius) {
        fail("d2 choice " + to_string(space.d2) + " is not valid for laplacian");
      }
      if (!(space.edge_bound >= 0.0)) fail("edge bound must be >= 0");
      break;
  }
}

void validate_point(const MetricPoint& point, const SpaceDescriptor& space,
                    double tol) {
  check_pair(point, point, space);
  const Eigen::VectorXd coords = flatten(point);
  if (!coords.allFinite()) fail("point has non-finite entries");
  if (space.kind == SpaceKind::wasserstein) {
    const auto& values = std::get<QuantileFunction>(point).values;
    for (int i = 1; i < values.size(); ++i) {
      if (values[i] < values[i - 1] - tol) {
        fail("quantile values decrease at grid index " + std::to_string(i));
      }
    }
    if (space.bounds) {
      if (values.minCoeff() < space.bounds->first - tol ||
          values.maxCoeff() > space.bounds->second + tol) {
        fail("quantile values violate the declared support bounds");
      }
    }
  } else if (space.kind == SpaceKind::laplacian) {
    const auto& m = std::get<LaplacianGraph>(point).matrix;
    if ((m - m.transpose()).lpNorm<Eigen::Infinity>() > tol) {
      fail("Laplacian is not symmetric");
    }
    if ((m.rowwise().sum()).lpNorm<Eigen::Infinity>() > tol) {
      fail("Laplacian row sums are not zero");
    }
    for (int i = 0; i < m.rows(); ++i) {
      if (m(i, i) < -tol) fail("Laplacian has a negative diagonal entry");
      for (int j = 0; j < m.cols(); ++j) {
        if (i != j && (m(i, j) > tol || m(i, j) < -space.edge_bound - tol)) {
          fail("Laplacian off-diagonal outside [-W, 0] at (" +
               std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
  }
}

Eigen::VectorXd flatten(const MetricPoint& point) {
  return std::visit(
      [](const auto& p) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LaplacianGraph>) {
          Eigen::MatrixXd rowmajor = p.matrix.transpose();
          return Eigen::Map<const Eigen::VectorXd>(rowmajor.data(), rowmajor.size());
        } else {
          return p.values;
        }
      },
      point);
}

MetricPoint unflatten(const Eigen::VectorXd& coords, const SpaceDescriptor& space) {
  if (coords.size() != space.flat_size()) {
    fail("flat coordinate length " + std::to_string(coords.size()) +
         " does not match space flat size " + std::to_string(space.flat_size()));
  }
  switch (space.kind) {
    case SpaceKind::euclidean:
      return EuclideanPoint{coords};
    case SpaceKind::wasserstein:
      return QuantileFunction{coords};
    case SpaceKind::laplacian: {
      Eigen::MatrixXd m(space.dim, space.dim);
      for (int i = 0; i < space.dim; ++i) {
        for (int j = 0; j < space.dim; ++j) {
          m(i, j) = coords[i * space.dim + j];
        }
      }
      return LaplacianGraph{m};
    }
  }
  fail("unreachable space kind");
}

double distance_d1(const MetricPoint& a, const MetricPoint& b,
                   const SpaceDescriptor& space) {
  check_pair(a, b, space);
  switch (space.kind) {
    case SpaceKind::euclidean:
      return (std::get<EuclideanPoint>(a).values - std::get<EuclideanPoint>(b).values).norm();
    case SpaceKind::wasserstein: {
      // Grid-mean approximation of the squared quantile-function L2 gap.
      const Eigen::VectorXd diff =
          std::get<QuantileFunction>(a).values - std::get<QuantileFunction>(b).values;
      return std::sqrt(diff.squaredNorm() / static_cast<double>(space.dim));
    }
    case SpaceKind::laplacian:
      return (std::get<LaplacianGraph>(a).matrix - std::get<LaplacianGraph>(b).matrix).norm();
  }
  fail("unreachable space kind");
}

double distance_d2(const MetricPoint& a, const MetricPoint& b,
                   const SpaceDescriptor& space) {
  switch (space.d2) {
    case D2Choice::same_as_d1:
      return distance_d1(a, b, space);
    case D2Choice::sup_norm:
      check_pair(a, b, space);
      return sup_distance(flatten(a), flatten(b));
    case D2Choice::frobenius:
    case D2Choice::euclidean:
      // Frobenius on Laplacians and the Euclidean norm both coincide with d1.
      return distance_d1(a, b, space);
  }
  fail("unreachable d2 choice");
}

Eigen::VectorXd isotonic_projection(const Eigen::VectorXd& values) {
  const int n = static_cast<int>(values.size());
  // Pool adjacent violators over blocks of (mean, count).
  std::vector<double> mean(n);
  std::vector<int> count(n);
  int blocks = 0;
  for (int i = 0; i < n; ++i) {
    mean[blocks] = values[i];
    count[blocks] = 1;
    ++blocks;
    while (blocks > 1 && mean[blocks - 2] > mean[blocks - 1]) {
      const int total = count[blocks - 2] + count[blocks - 1];
      mean[blocks - 2] = (mean[blocks - 2] * count[blocks - 2] +
                          mean[blocks - 1] * count[blocks - 1]) / total;
      count[blocks - 2] = total;
      --blocks;
    }
  }
  Eigen::VectorXd result(n);
  int at = 0;
  for (int b = 0; b < blocks; ++b) {
    for (int j = 0; j < count[b]; ++j) result[at++] = mean[b];
  }
  return result;
}

Eigen::MatrixXd laplacian_projection(const Eigen::MatrixXd& matrix,
                                     double edge_bound) {
  Eigen::MatrixXd out = 0.5 * (matrix + matrix.transpose());
  const int r = static_cast<int>(out.rows());
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      if (i != j) out(i, j) = std::clamp(out(i, j), -edge_bound, 0.0);
    }
  }
  for (int i = 0; i < r; ++i) {
    out(i, i) = 0.0;
    out(i, i) = -out.row(i).sum();
  }
  return out;
}

MetricPoint weighted_barycenter(const std::vector<MetricPoint>& points,
                                const Eigen::VectorXd& weights,
                                const SpaceDescriptor& space) {
  if (points.empty()) fail("weighted_barycenter: empty point list");
  if (static_cast<int>(points.size()) != weights.size()) {
    fail("weighted_barycenter: " + std::to_string(points.size()) + " points vs " +
         std::to_string(weights.size()) + " weights");
  }
  const double total = weights.sum();
  if (total == 0.0) {
    fail("weighted_barycenter: weights sum to zero");
  }

  Eigen::VectorXd accum = Eigen::VectorXd::Zero(space.flat_size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights[static_cast<int>(i)];
    if (space.kind == SpaceKind::laplacian) {
      const auto* graph = std::get_if<LaplacianGraph>(&points[i]);
      if (!graph || graph->matrix.rows() != space.dim ||
          graph->matrix.cols() != space.dim) {
        fail("weighted_barycenter: point " + std::to_string(i) + " is " +
             shape_of(points[i]) + ", expected laplacian " +
             std::to_string(space.dim) + "x" + std::to_string(space.dim));
      }
      for (int r = 0; r < space.dim; ++r) {
        for (int c = 0; c < space.dim; ++c) {
          accum[r * space.dim + c] += w * graph->matrix(r, c);
        }
      }
    } else {
      const Eigen::VectorXd* values = nullptr;
      if (const auto* e = std::get_if<EuclideanPoint>(&points[i]);
          e && space.kind == SpaceKind::euclidean) {
        values = &e->values;
      } else if (const auto* q = std::get_if<QuantileFunction>(&points[i]);
                 q && space.kind == SpaceKind::wasserstein) {
        values = &q->values;
      }
      if (!values || values->size() != space.dim) {
        fail("weighted_barycenter: point " + std::to_string(i) + " is " +
             shape_of(points[i]) + ", expected " + to_string(space.kind) +
             " of dimension " + std::to_string(space.dim));
      }
      accum += w * (*values);
    }
  }
  accum /= total;

  switch (space.kind) {
    case SpaceKind::euclidean:
      return EuclideanPoint{accum};
    case SpaceKind::wasserstein: {
      Eigen::VectorXd projected = isotonic_projection(accum);
      if (space.bounds) {
        projected = projected.cwiseMax(space.bounds->first).cwiseMin(space.bounds->second);
      }
      return QuantileFunction{projected};
    }
    case SpaceKind::laplacian: {
      const MetricPoint raw = unflatten(accum, space);
      return LaplacianGraph{
          laplacian_projection(std::get<LaplacianGraph>(raw).matrix, space.edge_bound)};
    }
  }
  fail("unreachable space kind");
}

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::euclidean: return "euclidean";
    case SpaceKind::wasserstein: return "wasserstein";
    case SpaceKind::laplacian: return "laplacian";
  }
  return "unknown";
}

std::string to_string(D2Choice choice) {
  switch (choice) {
    case D2Choice::same_as_d1: return "same-as-d1";
    case D2Choice::sup_norm: return "sup-norm";
    case D2Choice::frobenius: return "frobenius";
    case D2Choice::euclidean: return "euclidean";
  }
  return "unknown";
}

}  // namespace metricuq
