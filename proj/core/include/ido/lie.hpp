#pragma once

#include <Eigen/Core>

#include "ido/point_cloud.hpp"

namespace ido {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// se(3) coordinates: translational part rho followed by rotational part phi.
///
/// This is the parameter vector the registration regresses. Twist arithmetic
/// is plain 6-vector arithmetic; only the exp/log conversions canonicalize.
struct Twist {
  Vector6d coeffs = Vector6d::Zero();

  Twist() = default;
  explicit Twist(const Vector6d& v) : coeffs(v) {}
  Twist(const Eigen::Vector3d& rho, const Eigen::Vector3d& phi) { coeffs << rho, phi; }

  static Twist zero() { return Twist(); }

  auto rho() { return coeffs.head<3>(); }
  auto rho() const { return coeffs.head<3>(); }
  auto phi() { return coeffs.tail<3>(); }
  auto phi() const { return coeffs.tail<3>(); }

  friend bool operator==(const Twist& a, const Twist& b) { return a.coeffs == b.coeffs; }
};

/// Rotation vector split into angle (>= 0) and unit axis.
struct AxisAngle {
  double angle = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();

  static AxisAngle from_vector(const Eigen::Vector3d& phi);
  Eigen::Vector3d vector() const { return angle * axis; }
};

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  Eigen::Matrix4d matrix() const;
  RigidTransform inverse() const;
  Eigen::Vector3d operator()(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

Eigen::Matrix3d hat(const Eigen::Vector3d& phi);
Eigen::Vector3d vee(const Eigen::Matrix3d& skew);

/// Rodrigues formula.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi);

struct SO3Log {
  Eigen::Vector3d phi;
  /// The angle is pi and the axis sign was fixed by convention
  /// (first non-zero component positive).
  bool ambiguous_axis = false;
};

/// Rotation vector with angle in [0, pi].
SO3Log log_so3_detailed(const Eigen::Matrix3d& R);
inline Eigen::Vector3d log_so3(const Eigen::Matrix3d& R) { return log_so3_detailed(R).phi; }

/// Left Jacobian of SO(3); couples rho and t in the se(3) exponential.
Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi);

RigidTransform exp_se3(const Twist& xi);
Twist log_se3(const RigidTransform& T);

/// Returns A after B: apply(compose(A, B), P) == apply(A, apply(B, P)).
RigidTransform compose(const RigidTransform& A, const RigidTransform& B);

/// Transforms every point (and rotates normals when present).
PointCloud apply(const RigidTransform& T, const PointCloud& cloud);
Eigen::Matrix3Xd apply(const RigidTransform& T, const Eigen::Matrix3Xd& points);

bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-9);

}  // namespace ido
