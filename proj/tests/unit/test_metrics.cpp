#include <gtest/gtest.h>

#include "ido/metrics.hpp"
#include "ido/random.hpp"
#include "ido/shapes.hpp"
#include "oracles.hpp"

using namespace ido;

TEST(Metrics, IdenticalClouds) {
  const Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Random(3, 10);
  EXPECT_EQ(point_acc(a, a), 1.0);
  EXPECT_EQ(point_rmse(a, a), 0.0);
}

TEST(Metrics, DisplacedByTwiceThreshold) {
  const Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Random(3, 10);
  Eigen::Matrix3Xd b = a;
  b.row(1).array() += 0.2;
  EXPECT_EQ(point_acc(b, a, 0.1), 0.0);
  EXPECT_NEAR(point_rmse(b, a), 0.2, 1e-15);
}

TEST(Metrics, HalfWithin) {
  const Eigen::Matrix3Xd a = Eigen::Matrix3Xd::Zero(3, 4);
  Eigen::Matrix3Xd b = a;
  b(0, 0) = 0.05;
  b(0, 1) = 0.5;
  b(2, 3) = 0.3;
  EXPECT_EQ(point_acc(b, a), 0.5);
}

TEST(Metrics, RmseMatchesSummation) {
  CounterRng rng(1, 0);
  Eigen::Matrix3Xd a(3, 10), b(3, 10);
  for (int i = 0; i < 10; ++i)
    for (int c = 0; c < 3; ++c) {
      a(c, i) = rng.normal();
      b(c, i) = rng.normal();
    }
  EXPECT_NEAR(point_rmse(a, b), oracle::rmse_sum(a, b), 1e-12);
}

TEST(Metrics, CountMismatch) {
  EXPECT_THROW(point_acc(Eigen::Matrix3Xd::Zero(3, 2), Eigen::Matrix3Xd::Zero(3, 3)), std::invalid_argument);
  EXPECT_THROW(point_rmse(Eigen::Matrix3Xd::Zero(3, 2), Eigen::Matrix3Xd::Zero(3, 3)), std::invalid_argument);
}

TEST(Metrics, PermutationInvariant) {
  CounterRng rng(2, 0);
  Eigen::Matrix3Xd a(3, 50), b(3, 50);
  for (int i = 0; i < 50; ++i)
    for (int c = 0; c < 3; ++c) {
      a(c, i) = rng.uniform(-1, 1);
      b(c, i) = a(c, i) + 0.1 * rng.normal();
    }
  const Eigen::Matrix3Xd ar = a.rowwise().reverse(), br = b.rowwise().reverse();
  EXPECT_EQ(point_acc(a, b), point_acc(ar, br));
  EXPECT_NEAR(point_rmse(a, b), point_rmse(ar, br), 1e-15);
}

TEST(Metrics, ExactRegistrationOnNoiseOnlyPair) {
  const PointCloud m = synthetic_model("bunny", 128, 1);
  const LabeledPair p = generate_pair(m, PerturbationSpec{0.05, 400, 0, 0.0, 60.0, 0.3, OutlierKind::sparse, 3});
  const PairMetrics r = evaluate_pair(p, p.T_gt);
  EXPECT_EQ(r.point_acc, 1.0);
  EXPECT_LE(r.point_rmse, 0.05 * std::sqrt(3.0) + 1e-12);
}

TEST(Metrics, InliersVersusAll) {
  const PointCloud m = synthetic_model("bunny", 128, 1);
  const LabeledPair p = generate_pair(m, PerturbationSpec{});
  EXPECT_EQ(metric_subset(p, MetricPoints::inliers).cols(), static_cast<Eigen::Index>(p.inlier_count));
  EXPECT_EQ(metric_subset(p, MetricPoints::all).cols(), static_cast<Eigen::Index>(p.scene.size()));
  EXPECT_EQ(parse_metric_points("all"), MetricPoints::all);
  EXPECT_THROW(parse_metric_points("some"), std::invalid_argument);
  const PairMetrics identity = evaluate_pair(p, RigidTransform::identity(), MetricPoints::all);
  EXPECT_LT(identity.point_acc, 1.0);
}
