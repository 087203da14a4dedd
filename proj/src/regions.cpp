#include "metricuq/regions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "metricuq/rng.hpp"

namespace metricuq {

namespace {

// ceil with a small downward nudge so values that are mathematically integral
// but land just above an integer in floating point do not round up.
int quantile_index(double level, int count) {
  const double raw = level * count;
  return static_cast<int>(std::ceil(raw - 1e-9));
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must be in (0, 1), got " +
                                std::to_string(alpha));
  }
}

// Positions 0..n-1 ordered by (residual, tiebreak).
std::vector<int> residual_order(const ResidualSample& sample) {
  std::vector<int> order(sample.residuals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sample.residuals[a] != sample.residuals[b]) {
      return sample.residuals[a] < sample.residuals[b];
    }
    return sample.tiebreaks[a] < sample.tiebreaks[b];
  });
  return order;
}

}  // namespace

SplitIndices split(int n, const SplitFractions& fractions, std::uint64_t seed) {
  const bool use_calib = fractions.calib > 0.0;
  std::vector<double> fs = {fractions.train, fractions.test};
  if (use_calib) fs.push_back(fractions.calib);
  double total = 0.0;
  for (double f : fs) {
    if (!(f > 0.0)) throw std::invalid_argument("split: fractions must be positive");
    total += f;
  }
  if (total > 1.0 + 1e-12) {
    throw std::invalid_argument("split: fractions sum to more than 1");
  }

  // Cumulative rounding keeps the sizes from overshooting n.
  std::vector<int> sizes;
  double cumulative = 0.0;
  int allocated = 0;
  for (double f : fs) {
    cumulative += f;
    const int boundary = static_cast<int>(std::llround(cumulative * n));
    sizes.push_back(boundary - allocated);
    allocated = boundary;
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) {
      throw std::invalid_argument("split: requested set " + std::to_string(i) +
                                  " is empty for n=" + std::to_string(n));
    }
  }

  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(seed);
  rng.shuffle(indices);

  SplitIndices out;
  auto it = indices.begin();
  out.train.assign(it, it + sizes[0]);
  it += sizes[0];
  out.test.assign(it, it + sizes[1]);
  it += sizes[1];
  if (use_calib) out.calib.assign(it, it + sizes[2]);
  return out;
}

ResidualSample residuals(const GlobalFrechetModel& model,
                         const Eigen::MatrixXd& X_test,
                         const std::vector<MetricPoint>& Y_test,
                         std::uint64_t seed) {
  const int n = static_cast<int>(X_test.rows());
  if (static_cast<int>(Y_test.size()) != n) {
    throw std::invalid_argument("residuals: " + std::to_string(Y_test.size()) +
                                " responses for " + std::to_string(n) + " rows");
  }
  ResidualSample sample;
  sample.predictors = X_test;
  sample.residuals.resize(n);
  sample.tiebreaks.resize(n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const MetricPoint prediction = model.predict(X_test.row(i).transpose());
    sample.residuals[i] = distance_d2(Y_test[i], prediction, model.space());
    sample.tiebreaks[i] = rng.uniform();
  }
  return sample;
}

double homoscedastic_radius(const ResidualSample& sample, double alpha,
                            QuantileConvention convention) {
  check_alpha(alpha);
  const int n = sample.size();
  if (n < 1) throw std::invalid_argument("homoscedastic_radius: empty sample");
  const int count = convention == QuantileConvention::conformal ? n + 1 : n;
  const int index = quantile_index(1.0 - alpha, count);
  if (index > n) return kInfiniteRadius;
  const std::vector<int> order = residual_order(sample);
  return sample.residuals[order[std::max(index, 1) - 1]];
}

KnnRadiusRule knn_radius_rule(ResidualSample sample, double alpha, int k,
                              QuantileConvention convention) {
  check_alpha(alpha);
  if (k < 1 || k > sample.size()) {
    throw std::invalid_argument("knn radius: k=" + std::to_string(k) +
                                " out of range for sample size " +
                                std::to_string(sample.size()));
  }
  KnnRadiusRule rule;
  rule.k = k;
  rule.alpha = alpha;
  rule.convention = convention;
  rule.sample = std::move(sample);
  return rule;
}

namespace {

double knn_radius_at(const KnnRadiusRule& rule, const Eigen::VectorXd& x) {
  const int n = rule.sample.size();
  if (x.size() != rule.sample.predictors.cols()) {
    throw std::invalid_argument("knn radius: query has length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(rule.sample.predictors.cols()));
  }
  struct Neighbor {
    double distance;
    double tiebreak;
    int index;
  };
  std::vector<Neighbor> neighbors(n);
  for (int i = 0; i < n; ++i) {
    neighbors[i] = {(rule.sample.predictors.row(i).transpose() - x).norm(),
                    rule.sample.tiebreaks[i], i};
  }
  const auto closer = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
    return a.index < b.index;
  };
  std::nth_element(neighbors.begin(), neighbors.begin() + rule.k - 1,
                   neighbors.end(), closer);

  // Quantile of the neighbor residuals under the (residual, tiebreak) order.
  struct Scored {
    double residual;
    double tiebreak;
  };
  std::vector<Scored> scored(rule.k);
  for (int i = 0; i < rule.k; ++i) {
    const int at = neighbors[i].index;
    scored[i] = {rule.sample.residuals[at], rule.sample.tiebreaks[at]};
  }
  const int count =
      rule.convention == QuantileConvention::conformal ? rule.k + 1 : rule.k;
  const int index = quantile_index(1.0 - rule.alpha, count);
  if (index > rule.k) return kInfiniteRadius;
  std::nth_element(scored.begin(), scored.begin() + std::max(index, 1) - 1,
                   scored.end(), [](const Scored& a, const Scored& b) {
                     if (a.residual != b.residual) return a.residual < b.residual;
                     return a.tiebreak < b.tiebreak;
                   });
  return scored[std::max(index, 1) - 1].residual;
}

}  // namespace

ConformalKnnRule conformal_knn_rule(ResidualSample sample,
                                    const ResidualSample& calib, double alpha,
                                    int k) {
  if (calib.size() < 1) {
    throw std::invalid_argument("conformal knn: empty calibration split");
  }
  ConformalKnnRule rule;
  rule.base = knn_radius_rule(std::move(sample), alpha, k);

  // Conformal quantile of the calibration scores residual - local radius.
  ResidualSample scores;
  scores.residuals.resize(calib.size());
  scores.tiebreaks = calib.tiebreaks;
  for (int i = 0; i < calib.size(); ++i) {
    scores.residuals[i] =
        calib.residuals[i] -
        knn_radius_at(rule.base, calib.predictors.row(i).transpose());
  }
  rule.offset = homoscedastic_radius(scores, alpha, QuantileConvention::conformal);
  return rule;
}

double evaluate_radius(const RadiusRule& rule, const Eigen::VectorXd& x) {
  return std::visit(
      [&](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantRadiusRule>) {
          return r.radius;
        } else if constexpr (std::is_same_v<T, KnnRadiusRule>) {
          return knn_radius_at(r, x);
        } else {
          const double base = knn_radius_at(r.base, x);
          return std::max(0.0, base + r.offset);
        }
      },
      rule);
}

PredictionRegion::PredictionRegion(
    std::shared_ptr<const GlobalFrechetModel> center_model, RadiusRule rule,
    double alpha)
    : center_model_(std::move(center_model)),
      rule_(std::move(rule)),
      alpha_(alpha) {
  if (!center_model_) {
    throw std::invalid_argument("PredictionRegion: null center model");
  }
  check_alpha(alpha_);
  space_ = center_model_->space();
}

PredictionRegion::PredictionRegion(MetricPoint center_point,
                                   SpaceDescriptor space, RadiusRule rule,
                                   double alpha)
    : center_point_(std::move(center_point)),
      space_(space),
      rule_(std::move(rule)),
      alpha_(alpha) {
  check_alpha(alpha_);
  validate_point(*center_point_, space_);
}

MetricPoint PredictionRegion::center_at(const Eigen::VectorXd& x) const {
  if (center_point_) return *center_point_;
  return center_model_->predict(x);
}

double PredictionRegion::radius_at(const Eigen::VectorXd& x) const {
  return evaluate_radius(rule_, x);
}

bool PredictionRegion::contains(const Eigen::VectorXd& x,
                                const MetricPoint& y) const {
  const double radius = radius_at(x);
  if (std::isinf(radius)) return true;
  return distance_d2(y, center_at(x), space_) <= radius;
}

PredictionRegion homoscedastic_region(
    std::shared_ptr<const GlobalFrechetModel> model, const ResidualSample& sample,
    double alpha, QuantileConvention convention) {
  const double radius = homoscedastic_radius(sample, alpha, convention);
  return PredictionRegion(std::move(model), ConstantRadiusRule{radius}, alpha);
}

PredictionRegion heteroscedastic_knn_region(
    std::shared_ptr<const GlobalFrechetModel> model, ResidualSample sample,
    double alpha, int k, QuantileConvention convention) {
  return PredictionRegion(std::move(model),
                          knn_radius_rule(std::move(sample), alpha, k, convention),
                          alpha);
}

PredictionRegion conformal_knn_region(
    std::shared_ptr<const GlobalFrechetModel> model, ResidualSample sample,
    const ResidualSample& calib, double alpha, int k) {
  return PredictionRegion(std::move(model),
                          conformal_knn_rule(std::move(sample), calib, alpha, k),
                          alpha);
}

PredictionRegion unconditional_region(const std::vector<MetricPoint>& Y,
                                      double alpha, const SpaceDescriptor& space,
                                      std::uint64_t seed,
                                      QuantileConvention convention,
                                      std::optional<double> center_fraction) {
  if (Y.size() < 2) {
    throw std::invalid_argument("unconditional_region: need at least 2 points");
  }
  check_alpha(alpha);

  std::vector<int> center_idx(Y.size());
  std::iota(center_idx.begin(), center_idx.end(), 0);
  std::vector<int> radius_idx = center_idx;
  if (center_fraction) {
    const SplitFractions fractions{*center_fraction, 1.0 - *center_fraction, 0.0};
    const SplitIndices parts = split(static_cast<int>(Y.size()), fractions, seed);
    center_idx = parts.train;
    radius_idx = parts.test;
  }

  std::vector<MetricPoint> center_points;
  center_points.reserve(center_idx.size());
  for (int i : center_idx) center_points.push_back(Y[i]);
  const Eigen::VectorXd weights =
      Eigen::VectorXd::Ones(static_cast<int>(center_points.size()));
  MetricPoint center = weighted_barycenter(center_points, weights, space);

  ResidualSample sample;
  sample.residuals.resize(radius_idx.size());
  sample.tiebreaks.resize(radius_idx.size());
  Rng rng(Rng::mix(seed, 0x746f6c6572ULL));
  for (std::size_t i = 0; i < radius_idx.size(); ++i) {
    sample.residuals[i] = distance_d2(Y[radius_idx[i]], center, space);
    sample.tiebreaks[i] = rng.uniform();
  }
  const double radius = homoscedastic_radius(sample, alpha, convention);
  return PredictionRegion(std::move(center), space, ConstantRadiusRule{radius},
                          alpha);
}

double coverage(const PredictionRegion& region, const Eigen::MatrixXd& X_eval,
                const std::vector<MetricPoint>& Y_eval) {
  const int n = static_cast<int>(Y_eval.size());
  if (n == 0) throw std::invalid_argument("coverage: empty evaluation set");
  if (X_eval.rows() != n && !(X_eval.rows() == 0 && region.center_point())) {
    throw std::invalid_argument("coverage: predictor rows do not match responses");
  }
  const Eigen::VectorXd no_x;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x =
        X_eval.rows() == 0 ? no_x : Eigen::VectorXd(X_eval.row(i).transpose());
    if (region.contains(x, Y_eval[i])) ++hits;
  }
  return static_cast<double>(hits) / n;
}

double symmetric_difference_error(const PredictionRegion& a,
                                  const PredictionRegion& b,
                                  const Eigen::MatrixXd& X_eval,
                                  const std::vector<MetricPoint>& Y_eval) {
  const int n = static_cast<int>(Y_eval.size());
  if (n == 0) {
    throw std::invalid_argument("symmetric_difference_error: empty evaluation set");
  }
  if (a.space().kind != b.space().kind || a.space().dim != b.space().dim) {
    throw std::invalid_argument(
        "symmetric_difference_error: regions live in different spaces");
  }
  if (X_eval.rows() != n) {
    throw std::invalid_argument(
        "symmetric_difference_error: predictor rows do not match responses");
  }
  int disagreements = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = X_eval.row(i).transpose();
    if (a.contains(x, Y_eval[i]) != b.contains(x, Y_eval[i])) ++disagreements;
  }
  return static_cast<double>(disagreements) / n;
}

}  // namespace metricuq
