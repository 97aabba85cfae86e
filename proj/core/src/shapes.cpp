#include "ido/shapes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

#include "ido/random.hpp"

namespace ido {

namespace {

struct Ellipsoid {
  Eigen::Vector3d center;
  Eigen::Vector3d radii;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  bool contains(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d local = rotation.transpose() * (p - center);
    return local.cwiseQuotient(radii).squaredNorm() < 1.0;
  }
  double area() const {
    // Knud Thomsen's approximation.
    constexpr double k = 1.6075;
    const double a = std::pow(radii.x(), k), b = std::pow(radii.y(), k), c = std::pow(radii.z(), k);
    return 4.0 * std::numbers::pi * std::pow((a * b + a * c + b * c) / 3.0, 1.0 / k);
  }
};

Eigen::Matrix3d rot(const Eigen::Vector3d& axis, double degrees) {
  return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
}

std::vector<Ellipsoid> bunny_parts() {
  return {
      {{0.0, 0.0, 0.0}, {1.0, 0.65, 0.6}},                                        // body
      {{0.85, 0.1, 0.45}, {0.38, 0.33, 0.33}},                                    // head
      {{0.95, 0.25, 0.95}, {0.08, 0.06, 0.35}, rot({1, 0, 0}, 15.0)},             // ear
      {{0.78, -0.05, 0.88}, {0.08, 0.06, 0.28}, rot({0, 1, 0}, -35.0)},           // shorter, bent ear
      {{-1.0, 0.05, 0.15}, {0.15, 0.15, 0.15}},                                   // tail
      {{0.55, -0.38, -0.55}, {0.28, 0.13, 0.09}, rot({0, 0, 1}, 20.0)},           // one front foot
  };
}

}  // namespace

std::vector<std::string> shape_names() { return {"bunny", "sphere"}; }

PointCloud sample_shape(const std::string& name, std::size_t dense_points, std::uint64_t seed) {
  if (dense_points == 0) throw std::invalid_argument("dense_points must be positive");
  CounterRng rng(seed, 0x5348415045ull);  // "SHAPE"
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(dense_points);

  if (name == "sphere") {
    for (std::size_t i = 0; i < dense_points; ++i) pts.push_back(rng.unit_vector());
    return PointCloud::from_points(pts);
  }
  if (name != "bunny") throw std::invalid_argument("unknown shape '" + name + "'");

  const auto parts = bunny_parts();
  double total_area = 0.0;
  for (const auto& e : parts) total_area += e.area();
  // Rejection of hidden (interior) samples: draw until the requested count.
  while (pts.size() < dense_points) {
    double pick = rng.uniform() * total_area;
    std::size_t which = 0;
    while (which + 1 < parts.size() && pick >= parts[which].area()) pick -= parts[which++].area();
    const auto& e = parts[which];
    const Eigen::Vector3d p = e.center + e.rotation * e.radii.cwiseProduct(rng.unit_vector());
    bool hidden = false;
    for (std::size_t j = 0; j < parts.size() && !hidden; ++j) hidden = j != which && parts[j].contains(p);
    if (!hidden) pts.push_back(p);
  }
  return PointCloud::from_points(pts);
}

PointCloud synthetic_model(const std::string& name, std::size_t target_points, std::uint64_t seed) {
  const std::size_t dense = std::max<std::size_t>(20000, 40 * target_points);
  const PointCloud cloud = sample_shape(name, dense, seed);
  return normalize_to_unit(downsample_average(cloud, target_points)).cloud;
}

}  // namespace ido
