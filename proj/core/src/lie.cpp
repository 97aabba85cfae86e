#include "ido/lie.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

namespace ido {

namespace {

constexpr double kSmallAngle = 1e-6;
// (t - sin t)/t^3 loses digits to cancellation below this; the series is exact there.
constexpr double kSeriesAngle = 1e-2;
// Below this distance from pi the axis is read from the symmetric part of R.
constexpr double kNearPi = 1e-4;

}  // namespace

AxisAngle AxisAngle::from_vector(const Eigen::Vector3d& phi) {
  AxisAngle aa;
  aa.angle = phi.norm();
  if (aa.angle > 0.0) aa.axis = phi / aa.angle;
  return aa;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& p) {
  Eigen::Matrix3d m;
  m << 0.0, -p.z(), p.y(),
       p.z(), 0.0, -p.x(),
       -p.y(), p.x(), 0.0;
  return m;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d K = hat(phi);
  double a, b;  // sin(t)/t, (1 - cos(t))/t^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double half = std::sin(0.5 * theta) / (0.5 * theta);
    a = std::sin(theta) / theta;
    b = 0.5 * half * half;  // avoids 1 - cos cancellation
  }
  return Eigen::Matrix3d::Identity() + a * K + b * K * K;
}

SO3Log log_so3_detailed(const Eigen::Matrix3d& R) {
  SO3Log out;
  const Eigen::Vector3d w = 0.5 * vee(R - R.transpose());  // sin(theta) * n
  const double s = w.norm();
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    // theta / sin(theta) ~ 1 + theta^2 / 6
    out.phi = (1.0 + s * s / 6.0) * w;
    return out;
  }
  if (std::numbers::pi - theta > kNearPi) {
    out.phi = (theta / s) * w;
    return out;
  }

  // Near pi: (R + R^T)/2 = cos(t) I + (1 - cos(t)) n n^T. Read n off the
  // column with the largest diagonal entry.
  const Eigen::Matrix3d nnT = (0.5 * (R + R.transpose()) - c * Eigen::Matrix3d::Identity()) / (1.0 - c);
  int j = 0;
  nnT.diagonal().maxCoeff(&j);
  Eigen::Vector3d n = nnT.col(j) / std::sqrt(std::max(nnT(j, j), 1e-300));
  n.normalize();
  const double side = n.dot(w);
  if (s > 1e-12 && side != 0.0) {
    if (side < 0) n = -n;
  } else {
    out.ambiguous_axis = true;
    for (int k = 0; k < 3; ++k) {
      if (n[k] > 0) break;
      if (n[k] < 0) {
        n = -n;
        break;
      }
    }
  }
  out.phi = theta * n;
  return out;
}

Eigen::Matrix3d left_jacobian(const Eigen::Vector3d& phi) {
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d K = hat(phi);
  double b, c;  // (1 - cos t)/t^2, (t - sin t)/t^3
  if (theta < kSmallAngle) {
    b = 0.5 - theta2 / 24.0;
  } else {
    const double half = std::sin(0.5 * theta) / (0.5 * theta);
    b = 0.5 * half * half;
  }
  if (theta < kSeriesAngle) {
    c = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() + b * K + c * K * K;
}

RigidTransform exp_se3(const Twist& xi) {
  const Eigen::Vector3d phi = xi.phi();
  RigidTransform T;
  T.rotation = exp_so3(phi);
  T.translation = left_jacobian(phi) * Eigen::Vector3d(xi.rho());
  return T;
}

Twist log_se3(const RigidTransform& T) {
  const Eigen::Vector3d phi = log_so3(T.rotation);
  const Eigen::Vector3d rho = left_jacobian(phi).partialPivLu().solve(T.translation);
  return Twist(rho, phi);
}

RigidTransform compose(const RigidTransform& A, const RigidTransform& B) {
  RigidTransform C;
  C.rotation = A.rotation * B.rotation;
  C.translation = A.rotation * B.translation + A.translation;
  return C;
}

Eigen::Matrix3Xd apply(const RigidTransform& T, const Eigen::Matrix3Xd& points) {
  return (T.rotation * points).colwise() + T.translation;
}

PointCloud apply(const RigidTransform& T, const PointCloud& cloud) {
  Eigen::Matrix3Xd p = apply(T, cloud.points());
  if (!cloud.has_normals()) return PointCloud(std::move(p));
  Eigen::Matrix3Xd n = T.rotation * cloud.normals();
  n.colwise().normalize();
  return PointCloud(std::move(p), std::move(n));
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  return (R * R.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(R.determinant() - 1.0) <= tol;
}

}  // namespace ido
