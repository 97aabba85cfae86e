#include "ido/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ido {

namespace {

void check_counts(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("point count mismatch: " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
}

}  // namespace

double point_acc(const Eigen::Matrix3Xd& registered, const Eigen::Matrix3Xd& star, double t_pt) {
  check_counts(registered, star);
  if (registered.cols() == 0) return 0.0;
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < registered.cols(); ++i)
    if ((registered.col(i) - star.col(i)).norm() < t_pt) ++hits;
  return static_cast<double>(hits) / static_cast<double>(registered.cols());
}

double point_acc(const PointCloud& registered, const PointCloud& star, double t_pt) {
  return point_acc(registered.points(), star.points(), t_pt);
}

double point_rmse(const Eigen::Matrix3Xd& registered, const Eigen::Matrix3Xd& star) {
  check_counts(registered, star);
  if (registered.cols() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < registered.cols(); ++i) sum += (registered.col(i) - star.col(i)).squaredNorm();
  return std::sqrt(sum / static_cast<double>(registered.cols()));
}

double point_rmse(const PointCloud& registered, const PointCloud& star) {
  return point_rmse(registered.points(), star.points());
}

std::string_view to_string(MetricPoints m) { return m == MetricPoints::inliers ? "inliers" : "all"; }

MetricPoints parse_metric_points(std::string_view text) {
  if (text == "inliers") return MetricPoints::inliers;
  if (text == "all") return MetricPoints::all;
  throw std::invalid_argument("metric points must be 'inliers' or 'all', got '" + std::string(text) + "'");
}

Eigen::Matrix3Xd metric_subset(const LabeledPair& pair, MetricPoints which) {
  if (which == MetricPoints::all) return pair.scene.points();
  return pair.scene.points().leftCols(static_cast<Eigen::Index>(pair.inlier_count));
}

PairMetrics evaluate_pair(const LabeledPair& pair, const RigidTransform& estimate, MetricPoints which, double t_pt) {
  const Eigen::Matrix3Xd pts = metric_subset(pair, which);
  const Eigen::Matrix3Xd registered = apply(estimate, pts);
  const Eigen::Matrix3Xd star = apply(pair.T_gt, pts);
  return {point_acc(registered, star, t_pt), point_rmse(registered, star)};
}

}  // namespace ido
