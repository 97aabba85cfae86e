#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ido/lie.hpp"
#include "ido/point_cloud.hpp"

namespace ido {

/// original: front/back Gaussian votes (2 * N_M features).
/// improved: front/back, up/down and clockwise/anticlockwise (6 * N_M).
enum class DescriptorMode : std::uint8_t { original = 0, improved = 1 };

std::string_view to_string(DescriptorMode mode);
DescriptorMode parse_descriptor_mode(std::string_view text);

/// Feature vector h(x; S).
using Histogram = Eigen::VectorXd;

using Fingerprint = std::array<std::uint8_t, 32>;

/// How the Gaussian front/back votes are accumulated.
enum class GaussianEvaluation {
  exact,   // every (model, scene) pair, vectorized
  pruned,  // kd-tree radius search; pairs beyond 6 sigma (weight < e^-36) are skipped
};

struct ContextOptions {
  std::size_t normal_neighbors = 6;
  GaussianEvaluation gaussian = GaussianEvaluation::exact;
};

/// Everything about the model that stays fixed during training and
/// registration: normals, elevation/azimuth about the model center, the
/// alpha/beta/gamma weights, the Gaussian width and the reference histogram.
class ModelContext {
 public:
  /// `model` must already be normalized to unit scale (centroid at the
  /// origin, farthest point at distance 1) and have at least 7 points.
  static ModelContext build(const PointCloud& model, double sigma2, DescriptorMode mode,
                            const ScaleRecord& record = {}, const ContextOptions& options = {});

  DescriptorMode mode() const noexcept { return mode_; }
  double sigma2() const noexcept { return sigma2_; }
  std::size_t model_size() const noexcept { return model_.size(); }
  std::size_t feature_size() const noexcept { return feature_size_for(mode_, model_.size()); }
  static std::size_t feature_size_for(DescriptorMode mode, std::size_t model_size) {
    return (mode == DescriptorMode::original ? 2 : 6) * model_size;
  }

  const PointCloud& model() const noexcept { return model_; }
  const std::vector<double>& elevation() const noexcept { return elevation_; }
  const std::vector<double>& azimuth() const noexcept { return azimuth_; }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  const std::vector<double>& beta() const noexcept { return beta_; }
  const std::vector<double>& gamma() const noexcept { return gamma_; }
  const ScaleRecord& record() const noexcept { return record_; }
  const ContextOptions& options() const noexcept { return options_; }
  std::size_t degenerate_normals() const noexcept { return degenerate_normals_; }

  /// Histogram of the model against itself at the identity, cached at build.
  const Histogram& reference() const noexcept { return reference_; }
  /// SHA-256 over mode, sigma2, points and normals.
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }

  /// h(x; S) in this context's mode.
  Histogram evaluate(const PointCloud& scene, const Twist& x) const;
  Histogram evaluate(const Eigen::Matrix3Xd& scene, const Twist& x) const;

  /// Switches the mode; everything mode-independent is reused.
  ModelContext with_mode(DescriptorMode mode) const;

 private:
  ModelContext() = default;
  void finalize();

  DescriptorMode mode_ = DescriptorMode::improved;
  double sigma2_ = 0.0;
  PointCloud model_;
  std::vector<double> elevation_, azimuth_, alpha_, beta_, gamma_;
  ScaleRecord record_;
  ContextOptions options_;
  std::size_t degenerate_normals_ = 0;
  Histogram reference_;
  Fingerprint fingerprint_{};
};

/// Unweighted front/back histogram, length 2 * N_M.
Histogram histogram_original(const ModelContext& ctx, const Eigen::Matrix3Xd& scene, const Twist& x);
/// Triple-binary histogram with alpha/beta/gamma weights, length 6 * N_M.
Histogram histogram_improved(const ModelContext& ctx, const Eigen::Matrix3Xd& scene, const Twist& x);

/// Recomputes the reference histogram (equals ctx.reference()).
Histogram reference_histogram(const ModelContext& ctx);

/// For each value v_a, the fraction of entries strictly greater than v_a.
std::vector<double> strict_greater_fraction(std::span<const double> values);

/// Front fraction alpha_a = |{b : n_a . (m_b - m_a) > 0}| / N.
std::vector<double> front_fraction(const Eigen::Matrix3Xd& points, const Eigen::Matrix3Xd& normals);

/// One CSV row: iteration index followed by every histogram entry.
void write_histogram_row(std::ostream& out, std::size_t iteration, const Histogram& h);

}  // namespace ido
