#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ido {

struct Neighbor {
  std::size_t index;
  double distance;  // Euclidean

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Balanced kd-tree over a fixed set of points. Immutable after construction.
class SpatialIndex {
 public:
  explicit SpatialIndex(Eigen::Matrix3Xd points, std::size_t leaf_size = 8);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const Eigen::Matrix3Xd& points() const noexcept { return points_; }

  /// The min(k, N) nearest points, ascending by distance, ties by index.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  Neighbor nearest(const Eigen::Vector3d& query) const;

  /// Indices of all points with squared distance <= radius_squared, ascending.
  void radius_search(const Eigen::Vector3d& query, double radius_squared,
                     std::vector<std::size_t>& out) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  Eigen::Matrix3Xd points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace ido
