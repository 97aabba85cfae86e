#pragma once

#include <Eigen/Core>

#include "ido/lie.hpp"
#include "ido/perturb.hpp"
#include "ido/point_cloud.hpp"

namespace ido {

/// Fraction of index-aligned points closer than t_pt. Throws
/// std::invalid_argument on a count mismatch.
double point_acc(const Eigen::Matrix3Xd& registered, const Eigen::Matrix3Xd& star, double t_pt = 0.1);
double point_acc(const PointCloud& registered, const PointCloud& star, double t_pt = 0.1);

/// Root mean squared per-point distance. 0 for two empty clouds.
double point_rmse(const Eigen::Matrix3Xd& registered, const Eigen::Matrix3Xd& star);
double point_rmse(const PointCloud& registered, const PointCloud& star);

enum class MetricPoints { inliers, all };

std::string_view to_string(MetricPoints m);
MetricPoints parse_metric_points(std::string_view text);

/// Scene points the metrics are taken over: the inliers, or every point.
Eigen::Matrix3Xd metric_subset(const LabeledPair& pair, MetricPoints which);

struct PairMetrics {
  double point_acc = 0.0;
  double point_rmse = 0.0;
};

/// Compares estimate(S) against T_gt(S) on the chosen subset.
PairMetrics evaluate_pair(const LabeledPair& pair, const RigidTransform& estimate, MetricPoints which = MetricPoints::inliers,
                          double t_pt = 0.1);

}  // namespace ido
