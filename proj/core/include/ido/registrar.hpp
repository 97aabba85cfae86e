#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "ido/descriptor.hpp"
#include "ido/lie.hpp"
#include "ido/point_cloud.hpp"
#include "ido/regressor.hpp"

namespace ido {

enum class Termination {
  epsilon,         // update norm (DO) or objective improvement (ICP) fell below the threshold
  max_iterations,
  degenerate,      // ICP correspondences collapsed; best-so-far returned
};

std::string_view to_string(Termination t);

struct TraceStep {
  std::size_t iteration = 0;  // 1-based
  Twist x;                    // estimate after this step
  Vector6d update = Vector6d::Zero();
  double update_norm = 0.0;
  std::optional<Histogram> histogram;  // feature the update was computed from
};

struct RegistrationResult {
  Twist x_final;
  RigidTransform T_final;
  std::size_t iterations = 0;
  Termination terminated_by = Termination::max_iterations;
  /// Norm of the last update that was tested against epsilon.
  double final_update_norm = 0.0;
  std::vector<TraceStep> trace;
  /// ICP only: mean squared correspondence distance, entry 0 at x0.
  std::vector<double> objective;
};

struct DoOptions {
  std::size_t max_iterations = 1000;
  double epsilon = 0.005;
  bool record_histograms = false;
};

/// Applies D_1..D_K once each, then repeats D_K while |D_K h(x)| >= epsilon
/// and the iteration count stays within max_iterations. The first K steps
/// never stop early.
RegistrationResult register_do(const ModelContext& ctx, const MapSequence& maps, const PointCloud& scene,
                               const Twist& x0 = {}, const DoOptions& options = {});

/// Re-applies the recorded updates to x0.
Twist replay(const Twist& x0, const std::vector<TraceStep>& trace);

struct IcpOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-10;  // stop when the MSE improves by less than this
};

/// Point-to-point ICP: nearest model point for every scene point, closed-form
/// rigid fit, repeat. The returned twist maps the scene onto the model.
RegistrationResult register_icp(const PointCloud& model, const PointCloud& scene, const Twist& x0 = {},
                                const IcpOptions& options = {});

/// Least-squares rigid transform minimizing sum |R s_i + t - m_i|^2 (SVD with
/// reflection correction). Needs at least 3 source points that are not
/// collinear.
RigidTransform procrustes_fit(const Eigen::Matrix3Xd& source, const Eigen::Matrix3Xd& target);

/// CSV with columns iter,x1..x6,update_norm.
void write_trace_csv(std::ostream& out, const RegistrationResult& result);

}  // namespace ido
