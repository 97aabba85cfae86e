#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ido {

/// Ordered set of 3D points with optional per-point unit normals.
///
/// Points are stored column-wise. Coordinates must be finite; normals, when
/// present, match the point count and have unit length.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(Eigen::Matrix3Xd points);
  PointCloud(Eigen::Matrix3Xd points, Eigen::Matrix3Xd normals);

  static PointCloud from_points(std::span<const Eigen::Vector3d> points);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  bool empty() const noexcept { return points_.cols() == 0; }
  bool has_normals() const noexcept { return normals_.cols() != 0; }

  const Eigen::Matrix3Xd& points() const noexcept { return points_; }
  const Eigen::Matrix3Xd& normals() const noexcept { return normals_; }
  Eigen::Vector3d point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }
  Eigen::Vector3d normal(std::size_t i) const { return normals_.col(static_cast<Eigen::Index>(i)); }

  Eigen::Vector3d centroid() const;
  PointCloud subset(std::span<const std::size_t> indices) const;
  PointCloud without_normals() const { return PointCloud(points_); }

 private:
  Eigen::Matrix3Xd points_;
  Eigen::Matrix3Xd normals_;
};

// --- file I/O -------------------------------------------------------------

enum class CloudFormat { automatic, ply_ascii, csv };

/// Reads an ASCII PLY (vertex x,y,z with optional nx,ny,nz) or a CSV file
/// with one `x,y,z` row per point. `automatic` picks by file extension.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format = CloudFormat::automatic);

void save_ply(const std::filesystem::path& path, const PointCloud& cloud);
void save_csv(const std::filesystem::path& path, const PointCloud& cloud);

// --- resampling / geometry ------------------------------------------------

/// Voxel-grid average downsampling. The cell size is found by bisection so the
/// number of occupied voxels lands as close as possible to `target_count`;
/// each output point is the centroid of one occupied voxel.
PointCloud downsample_average(const PointCloud& cloud, std::size_t target_count);

struct NormalEstimate {
  PointCloud cloud;               // input points with normals attached
  std::vector<bool> degenerate;   // per point: neighborhood covariance rank < 2
  std::size_t degenerate_count = 0;
};

/// Local-plane normals from the `k` nearest neighbours (excluding the point
/// itself). Normals are oriented so that they point away from the cloud
/// centroid relative to the neighbourhood centroid; degenerate neighbourhoods
/// get +z and are flagged.
NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k = 6);

/// Normal of a single neighbourhood; `degenerate` is set when the points do
/// not span a plane.
Eigen::Vector3d fit_plane_normal(const Eigen::Matrix3Xd& neighborhood, bool& degenerate);

inline double elevation_of(const Eigen::Vector3d& d) {
  const double r = d.norm();
  if (r == 0.0) return 0.0;
  return std::asin(std::clamp(d.z() / r, -1.0, 1.0));
}

/// Azimuth in (-pi, pi].
inline double azimuth_of(const Eigen::Vector3d& d) {
  const double w = std::atan2(d.y(), d.x());
  return w == -std::numbers::pi ? std::numbers::pi : w;
}

struct SphericalAngles {
  std::vector<double> elevation;   // [-pi/2, pi/2]
  std::vector<double> azimuth;     // (-pi, pi]
  std::vector<std::size_t> at_center;  // indices of points coinciding with the center
};

SphericalAngles spherical_angles(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& center);
inline SphericalAngles spherical_angles(const PointCloud& cloud, const Eigen::Vector3d& center) {
  return spherical_angles(cloud.points(), center);
}

/// Centroid and scale removed by normalize_to_unit().
struct ScaleRecord {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  double scale = 1.0;

  PointCloud apply(const PointCloud& cloud) const;  // (p - centroid) / scale
  PointCloud undo(const PointCloud& cloud) const;   // p * scale + centroid
};

struct NormalizedCloud {
  PointCloud cloud;
  ScaleRecord record;
};

/// Centers the cloud at its centroid and scales it so the farthest point is at
/// distance 1.
NormalizedCloud normalize_to_unit(const PointCloud& cloud);

}  // namespace ido
