#include "ido/registrar.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "ido/error.hpp"
#include "ido/spatial_index.hpp"

namespace ido {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::epsilon: return "epsilon";
    case Termination::max_iterations: return "maxIter";
    case Termination::degenerate: return "degenerate";
  }
  return "?";
}

RegistrationResult register_do(const ModelContext& ctx, const MapSequence& maps, const PointCloud& scene,
                               const Twist& x0, const DoOptions& options) {
  if (maps.size() == 0) throw std::invalid_argument("map sequence is empty");
  if (options.max_iterations < maps.size()) throw std::invalid_argument("max_iterations must be at least K");
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (scene.empty()) throw std::invalid_argument("scene cloud is empty");
  maps.check_compatible(ctx, /*force=*/true);

  RegistrationResult result;
  Twist x = x0;
  auto step = [&](std::size_t iteration, Histogram h, const Vector6d& dx) {
    x.coeffs -= dx;
    TraceStep s;
    s.iteration = iteration;
    s.x = x;
    s.update = dx;
    s.update_norm = dx.norm();
    if (options.record_histograms) s.histogram = std::move(h);
    result.trace.push_back(std::move(s));
  };

  const std::size_t K = maps.size();
  for (std::size_t k = 0; k < K; ++k) {
    Histogram h = ctx.evaluate(scene, x);
    const Vector6d dx = maps.maps[k] * h;
    result.final_update_norm = dx.norm();
    step(k + 1, std::move(h), dx);
  }

  const Eigen::MatrixXd& last = maps.maps.back();
  std::size_t iter = K + 1;
  while (true) {
    Histogram h = ctx.evaluate(scene, x);
    const Vector6d dx = last * h;
    result.final_update_norm = dx.norm();
    if (result.final_update_norm < options.epsilon) {
      result.terminated_by = Termination::epsilon;
      break;
    }
    if (iter > options.max_iterations) {
      result.terminated_by = Termination::max_iterations;
      break;
    }
    step(iter, std::move(h), dx);
    ++iter;
  }
  result.iterations = iter - 1;
  result.x_final = x;
  result.T_final = exp_se3(x);
  return result;
}

Twist replay(const Twist& x0, const std::vector<TraceStep>& trace) {
  Twist x = x0;
  for (const auto& s : trace) x.coeffs -= s.update;
  return x;
}

RigidTransform procrustes_fit(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target) {
  if (source.cols() != target.cols()) throw std::invalid_argument("procrustes: point counts differ");
  if (source.cols() < 3) throw DegenerateInputError("procrustes needs at least 3 pairs");

  const Eigen::Vector3d cs = source.rowwise().mean();
  const Eigen::Vector3d ct = target.rowwise().mean();
  const Eigen::Matrix3Xd s = source.colwise() - cs;
  const Eigen::Matrix3Xd t = target.colwise() - ct;

  const Eigen::JacobiSVD<Eigen::Matrix3d> spread(s * s.transpose());
  const auto sv = spread.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) throw DegenerateInputError("procrustes: source points are collinear");

  const Eigen::Matrix3d cov = s * t.transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  if ((V * U.transpose()).determinant() < 0.0) fix(2, 2) = -1.0;

  RigidTransform T;
  T.rotation = V * fix * U.transpose();
  T.translation = ct - T.rotation * cs;
  return T;
}

RegistrationResult register_icp(const PointCloud& model, const PointCloud& scene, const Twist& x0,
                                const IcpOptions& options) {
  if (model.empty() || scene.empty()) throw std::invalid_argument("ICP needs non-empty clouds");
  const SpatialIndex index(model.points());
  const Eigen::Matrix3Xd& src = scene.points();
  const auto n = src.cols();
  Eigen::Matrix3Xd matched(3, n);

  // Matches every scene point under T; returns the mean squared distance and
  // whether all scene points landed on a single model point.
  auto correspond = [&](const RigidTransform& T, bool& collapsed) {
    double sum = 0.0;
    std::size_t first = std::numeric_limits<std::size_t>::max();
    collapsed = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Neighbor nb = index.nearest(T(src.col(i)));
      matched.col(i) = model.point(nb.index);
      sum += nb.distance * nb.distance;
      if (first == std::numeric_limits<std::size_t>::max()) first = nb.index;
      collapsed = collapsed && nb.index == first;
    }
    return sum / static_cast<double>(n);
  };

  RegistrationResult result;
  RigidTransform T = exp_se3(x0);
  bool collapsed = false;
  double mse = correspond(T, collapsed);
  result.objective.push_back(mse);
  result.terminated_by = Termination::max_iterations;

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    if (collapsed || n < 3) {
      result.terminated_by = Termination::degenerate;
      break;
    }
    RigidTransform next;
    try {
      next = procrustes_fit(src, matched);
    } catch (const DegenerateInputError&) {
      result.terminated_by = Termination::degenerate;
      break;
    }
    const double next_mse = correspond(next, collapsed);
    const Twist prev = log_se3(T);
    T = next;
    result.iterations = it;
    result.objective.push_back(next_mse);

    TraceStep s;
    s.iteration = it;
    s.x = log_se3(T);
    s.update = prev.coeffs - s.x.coeffs;
    s.update_norm = s.update.norm();
    result.trace.push_back(s);

    const double improvement = mse - next_mse;
    result.final_update_norm = s.update_norm;
    mse = next_mse;
    if (improvement < options.tolerance) {
      result.terminated_by = Termination::epsilon;
      break;
    }
  }
  result.T_final = T;
  result.x_final = log_se3(T);
  return result;
}

void write_trace_csv(std::ostream& out, const RegistrationResult& result) {
  const auto old = out.precision(17);
  out << "iter,x1,x2,x3,x4,x5,x6,update_norm\n";
  for (const auto& s : result.trace) {
    out << s.iteration;
    for (int c = 0; c < 6; ++c) out << ',' << s.x.coeffs[c];
    out << ',' << s.update_norm << '\n';
  }
  out.precision(old);
}

}  // namespace ido
