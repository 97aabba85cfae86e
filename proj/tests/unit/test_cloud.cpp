#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "ido/error.hpp"
#include "ido/point_cloud.hpp"
#include "ido/random.hpp"
#include "ido/shapes.hpp"
#include "ido/spatial_index.hpp"
#include "oracles.hpp"

using namespace ido;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& contents) {
  const fs::path dir = fs::temp_directory_path() / "ido_unit";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << contents;
  return p;
}

Eigen::Matrix3Xd random_points(std::uint64_t seed, Eigen::Index n) {
  CounterRng rng(seed, 0);
  Eigen::Matrix3Xd p(3, n);
  for (Eigen::Index i = 0; i < n; ++i) p.col(i) = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return p;
}

}  // namespace

TEST(PointCloud, RejectsNonFiniteAndBadNormals) {
  Eigen::Matrix3Xd p(3, 1);
  p << 0, std::nan(""), 0;
  EXPECT_THROW(PointCloud{p}, Error);
  Eigen::Matrix3Xd q = Eigen::Matrix3Xd::Zero(3, 1), n(3, 1);
  n << 0, 0, 2;
  EXPECT_THROW(PointCloud(q, n), Error);
}

TEST(CloudIo, ThreeRowCsv) {
  const PointCloud c = load_cloud(temp_file("three.csv", "0,0,0\n1,0,0\n0,1,0\n"));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.point(1), Eigen::Vector3d(1, 0, 0));
}

TEST(CloudIo, CsvHeaderTolerated) {
  const PointCloud c = load_cloud(temp_file("header.csv", "x,y,z\n0.5,1.5,-2\n"));
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.point(0), Eigen::Vector3d(0.5, 1.5, -2));
}

TEST(CloudIo, EmptyFileIsEmptyCloudError) {
  EXPECT_THROW(load_cloud(temp_file("empty.csv", "")), EmptyCloudError);
}

TEST(CloudIo, MalformedRowReportsLine) {
  try {
    load_cloud(temp_file("bad.csv", "0,0,0\n1,0,0\n1,zz,0\n"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(CloudIo, PlyRoundtripWithNormals) {
  Eigen::Matrix3Xd p = random_points(11, 514);
  Eigen::Matrix3Xd n = random_points(12, 514).colwise().normalized();
  const PointCloud c(p, n);
  const fs::path path = fs::temp_directory_path() / "ido_unit" / "roundtrip.ply";
  save_ply(path, c);
  const PointCloud back = load_cloud(path);
  ASSERT_EQ(back.size(), 514u);
  ASSERT_TRUE(back.has_normals());
  EXPECT_EQ(back.points(), p);
  EXPECT_LT((back.normals() - c.normals()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CloudIo, PlyVertexCountMismatchReportsLine) {
  const std::string ply =
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n"
      "0 0 0\n1 0 0\n";
  EXPECT_THROW(load_cloud(temp_file("short.ply", ply)), ParseError);
  const std::string bad =
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n"
      "0 0 0\n1 0\n";
  try {
    load_cloud(temp_file("bad.ply", bad));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 9u);
  }
}

TEST(Downsample, TargetEqualsCountReturnsInput) {
  const PointCloud c(random_points(13, 50));
  EXPECT_EQ(downsample_average(c, 50).points(), c.points());
}

TEST(Downsample, CubeCornersToOne) {
  Eigen::Matrix3Xd p(3, 8);
  for (int i = 0; i < 8; ++i) p.col(i) = Eigen::Vector3d(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  const PointCloud d = downsample_average(PointCloud(p), 1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_LT((d.point(0) - Eigen::Vector3d(0.5, 0.5, 0.5)).norm(), 1e-15);
}

TEST(Downsample, HitsTargetWithinFivePercent) {
  const PointCloud dense = sample_shape("bunny", 35947, 1);
  const PointCloud d = downsample_average(dense, 514);
  EXPECT_NEAR(static_cast<double>(d.size()), 514.0, 25.0);
}

TEST(Downsample, RejectsOutOfRangeTarget) {
  const PointCloud c(random_points(14, 10));
  EXPECT_THROW(downsample_average(c, 0), std::invalid_argument);
  EXPECT_THROW(downsample_average(c, 11), std::invalid_argument);
}

TEST(SpatialIndex, KnnMatchesBruteForce) {
  const Eigen::Matrix3Xd p = random_points(15, 1000);
  const SpatialIndex index(p);
  const Eigen::Matrix3Xd q = random_points(16, 100);
  for (Eigen::Index i = 0; i < q.cols(); ++i) EXPECT_EQ(index.knn(q.col(i), 7), oracle::knn_brute(p, q.col(i), 7));
}

TEST(SpatialIndex, TiesBrokenByIndex) {
  // Grid points: many equal distances from the center.
  Eigen::Matrix3Xd p(3, 27);
  int k = 0;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) p.col(k++) = Eigen::Vector3d(x, y, z);
  const SpatialIndex index(p, 2);
  for (std::size_t kk : {1u, 5u, 7u, 19u, 27u, 40u})
    EXPECT_EQ(index.knn(Eigen::Vector3d::Zero(), kk), oracle::knn_brute(p, Eigen::Vector3d::Zero(), kk));
}

TEST(SpatialIndex, StoredPointIsItsOwnNearest) {
  const Eigen::Matrix3Xd p = random_points(17, 200);
  const SpatialIndex index(p);
  const Neighbor n = index.nearest(p.col(42));
  EXPECT_EQ(n.index, 42u);
  EXPECT_EQ(n.distance, 0.0);
  EXPECT_EQ(index.knn(p.col(0), 200).size(), 200u);
}

TEST(SpatialIndex, RadiusSearchMatchesScan) {
  const Eigen::Matrix3Xd p = random_points(18, 500);
  const SpatialIndex index(p);
  std::vector<std::size_t> hits;
  for (double r2 : {0.01, 0.1, 1.0, 20.0}) {
    index.radius_search(Eigen::Vector3d(0.1, -0.2, 0.3), r2, hits);
    std::vector<std::size_t> expected;
    for (Eigen::Index i = 0; i < p.cols(); ++i)
      if (squared_distance(p.col(i), Eigen::Vector3d(0.1, -0.2, 0.3)) <= r2) expected.push_back(static_cast<std::size_t>(i));
    EXPECT_EQ(hits, expected);
  }
}

TEST(Normals, PlaneGivesUnitZ) {
  Eigen::Matrix3Xd p(3, 25);
  for (int i = 0; i < 25; ++i) p.col(i) = Eigen::Vector3d(i % 5, i / 5, 0.0);
  const NormalEstimate est = estimate_normals(PointCloud(p));
  EXPECT_EQ(est.degenerate_count, 0u);
  for (std::size_t i = 0; i < 25; ++i) EXPECT_NEAR(std::abs(est.cloud.normal(i).z()), 1.0, 1e-12);
}

TEST(Normals, SphereNormalsAreRadialAndOutward) {
  // Evenly spread sample (golden-angle spiral), so every neighbourhood is balanced.
  constexpr int n = 500;
  Eigen::Matrix3Xd p(3, n);
  const double golden = pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(1.0 - z * z);
    p.col(i) = Eigen::Vector3d(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  const PointCloud sphere(p);
  const NormalEstimate est = estimate_normals(sphere);
  EXPECT_EQ(est.degenerate_count, 0u);
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const double cosang = est.cloud.normal(i).dot(sphere.point(i).normalized());
    EXPECT_GT(cosang, std::cos(5.0 * pi / 180.0)) << i;
  }
}

TEST(Normals, RandomSphereNormalsAreMostlyRadial) {
  const PointCloud sphere = sample_shape("sphere", 500, 3);
  const NormalEstimate est = estimate_normals(sphere);
  std::size_t within = 0;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const double cosang = est.cloud.normal(i).dot(sphere.point(i).normalized());
    EXPECT_GT(cosang, 0.0) << i;  // outward
    within += cosang > std::cos(5.0 * pi / 180.0);
  }
  EXPECT_GT(within, sphere.size() / 2);
}

TEST(Normals, CollinearNeighbourhoodIsDegenerate) {
  Eigen::Matrix3Xd line(3, 3);
  line << 0, 1, 2, 0, 1, 2, 0, 1, 2;
  bool degenerate = false;
  fit_plane_normal(line, degenerate);
  EXPECT_TRUE(degenerate);

  Eigen::Matrix3Xd many(3, 10);
  for (int i = 0; i < 10; ++i) many.col(i) = Eigen::Vector3d(i, 2 * i, 0);
  const NormalEstimate est = estimate_normals(PointCloud(many));
  EXPECT_EQ(est.degenerate_count, 10u);
  EXPECT_EQ(est.cloud.normal(0), Eigen::Vector3d::UnitZ());
}

TEST(Normals, TranslationInvariant) {
  const PointCloud c = synthetic_model("bunny", 128, 5);
  const NormalEstimate a = estimate_normals(c);
  Eigen::Matrix3Xd shifted = c.points();
  shifted.colwise() += Eigen::Vector3d(3, -2, 7);
  const NormalEstimate b = estimate_normals(PointCloud(shifted));
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_GT(std::abs(a.cloud.normal(i).dot(b.cloud.normal(i))), 1.0 - 1e-9);
}

TEST(Normals, NeedsKPlusOnePoints) {
  EXPECT_THROW(estimate_normals(PointCloud(random_points(19, 6)), 6), std::invalid_argument);
}

TEST(SphericalAngles, Examples) {
  Eigen::Matrix3Xd p(3, 4);
  p << 0, 1, -1, 0,  //
      0, 1, 0, 0,    //
      1, 0, 0, 0;
  const SphericalAngles a = spherical_angles(p, Eigen::Vector3d::Zero());
  EXPECT_DOUBLE_EQ(a.elevation[0], pi / 2);
  EXPECT_DOUBLE_EQ(a.azimuth[0], 0.0);
  EXPECT_DOUBLE_EQ(a.elevation[1], 0.0);
  EXPECT_DOUBLE_EQ(a.azimuth[1], pi / 4);
  EXPECT_DOUBLE_EQ(a.azimuth[2], pi);
  ASSERT_EQ(a.at_center.size(), 1u);
  EXPECT_EQ(a.at_center[0], 3u);
  EXPECT_EQ(a.elevation[3], 0.0);
  EXPECT_EQ(a.azimuth[3], 0.0);
}

TEST(SphericalAngles, RangesAndOppositeAzimuth) {
  const Eigen::Matrix3Xd p = random_points(20, 1000);
  const SphericalAngles a = spherical_angles(p, Eigen::Vector3d::Zero());
  const SphericalAngles b = spherical_angles(Eigen::Matrix3Xd(-p), Eigen::Vector3d::Zero());
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_GE(a.elevation[i], -pi / 2);
    EXPECT_LE(a.elevation[i], pi / 2);
    EXPECT_GT(a.azimuth[i], -pi);
    EXPECT_LE(a.azimuth[i], pi);
    const double d = std::remainder(a.azimuth[i] - b.azimuth[i], 2 * pi);
    EXPECT_NEAR(std::abs(d), pi, 1e-12);
  }
  // Negative-zero y lands on +pi, not -pi.
  EXPECT_EQ(azimuth_of(Eigen::Vector3d(-1, -0.0, 0)), pi);
}

TEST(Normalize, RoundtripAndScale) {
  const Eigen::Matrix3Xd p = random_points(21, 100);
  const NormalizedCloud n = normalize_to_unit(PointCloud(p));
  EXPECT_LT(n.cloud.centroid().norm(), 1e-15);
  EXPECT_NEAR(n.cloud.points().colwise().norm().maxCoeff(), 1.0, 1e-15);
  EXPECT_LT((n.record.undo(n.cloud).points() - p).cwiseAbs().maxCoeff(), 1e-12);

  const NormalizedCloud again = normalize_to_unit(n.cloud);
  EXPECT_NEAR(again.record.scale, 1.0, 1e-15);
  EXPECT_LT((again.cloud.points() - n.cloud.points()).cwiseAbs().maxCoeff(), 1e-15);

  const NormalizedCloud big = normalize_to_unit(PointCloud(Eigen::Matrix3Xd(5.0 * n.cloud.points())));
  EXPECT_NEAR(big.record.scale, 5.0, 1e-12);
  EXPECT_LT((big.cloud.points() - n.cloud.points()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, ZeroExtentRejected) {
  EXPECT_THROW(normalize_to_unit(PointCloud(Eigen::Matrix3Xd::Ones(3, 4))), DegenerateInputError);
}
