#include "ido/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include <openssl/evp.h>

#include "ido/spatial_index.hpp"

namespace ido {

std::string_view to_string(DescriptorMode mode) {
  return mode == DescriptorMode::original ? "original" : "improved";
}

DescriptorMode parse_descriptor_mode(std::string_view text) {
  if (text == "original" || text == "original-do") return DescriptorMode::original;
  if (text == "improved" || text == "improved-do") return DescriptorMode::improved;
  throw std::invalid_argument("unknown descriptor mode '" + std::string(text) + "'");
}

std::vector<double> strict_greater_fraction(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(values.size());
  std::vector<double> out(values.size());
  for (std::size_t a = 0; a < values.size(); ++a) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), values[a]);
    out[a] = static_cast<double>(above) / n;
  }
  return out;
}

std::vector<double> front_fraction(const Eigen::Matrix3Xd& points, const Eigen::Matrix3Xd& normals) {
  const auto n = points.cols();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < n; ++a) {
    std::size_t front = 0;
    for (Eigen::Index b = 0; b < n; ++b)
      if (normals.col(a).dot(points.col(b) - points.col(a)) > 0.0) ++front;
    out[static_cast<std::size_t>(a)] = static_cast<double>(front) / static_cast<double>(n);
  }
  return out;
}

namespace {

constexpr double kCutoffSigmas2 = 36.0;  // skip pairs with |d|^2 > 36 sigma^2

// Gaussian front/back sums per model point, divided by the scene count.
// Accumulation within each slot runs over ascending scene index.
void gaussian_votes(const ModelContext& ctx, const Eigen::Matrix3Xd& scene, Eigen::Ref<Eigen::VectorXd> front,
                    Eigen::Ref<Eigen::VectorXd> back) {
  const Eigen::Matrix3Xd& m = ctx.model().points();
  const Eigen::Matrix3Xd& nrm = ctx.model().normals();
  const Eigen::Index nm = m.cols();
  const double inv_s2 = 1.0 / ctx.sigma2();
  const double ns = static_cast<double>(scene.cols());

  auto vote = [&](Eigen::Index a, Eigen::Index b, double& f, double& bk) {
    const Eigen::Vector3d d = scene.col(b) - m.col(a);
    const double w = std::exp(-(d.x() * d.x() + d.y() * d.y() + d.z() * d.z()) * inv_s2);
    if (nrm.col(a).dot(d) > 0.0)
      f += w;
    else
      bk += w;
  };

  if (ctx.options().gaussian == GaussianEvaluation::exact) {
    // Coordinates as contiguous rows so the kernel row vectorizes.
    const Eigen::ArrayXd sx = scene.row(0).transpose(), sy = scene.row(1).transpose(), sz = scene.row(2).transpose();
    Eigen::ArrayXd dx, dy, dz, w, side;
    for (Eigen::Index a = 0; a < nm; ++a) {
      dx = sx - m(0, a);
      dy = sy - m(1, a);
      dz = sz - m(2, a);
      w = (-(dx * dx + dy * dy + dz * dz) * inv_s2).exp();
      side = nrm(0, a) * dx + nrm(1, a) * dy + nrm(2, a) * dz;
      double f = 0.0, bk = 0.0;
      for (Eigen::Index b = 0; b < scene.cols(); ++b) {
        const bool is_front = side[b] > 0.0;
        f += is_front ? w[b] : 0.0;
        bk += is_front ? 0.0 : w[b];
      }
      front[a] = f / ns;
      back[a] = bk / ns;
    }
    return;
  }

  const SpatialIndex index(scene);
  const double r2 = kCutoffSigmas2 * ctx.sigma2();
  std::vector<std::size_t> hits;
  for (Eigen::Index a = 0; a < nm; ++a) {
    index.radius_search(m.col(a), r2, hits);
    double f = 0.0, bk = 0.0;
    for (const auto b : hits) vote(a, static_cast<Eigen::Index>(b), f, bk);
    front[a] = f / ns;
    back[a] = bk / ns;
  }
}

// Counts of scene values strictly above / strictly below each model value,
// weighted and divided by the scene count.
void order_votes(std::span<const double> model_values, const std::vector<double>& weights,
                 std::vector<double> scene_values, Eigen::Ref<Eigen::VectorXd> above,
                 Eigen::Ref<Eigen::VectorXd> below) {
  std::sort(scene_values.begin(), scene_values.end());
  const double ns = static_cast<double>(scene_values.size());
  for (std::size_t a = 0; a < model_values.size(); ++a) {
    const auto lo = std::lower_bound(scene_values.begin(), scene_values.end(), model_values[a]);
    const auto hi = std::upper_bound(lo, scene_values.end(), model_values[a]);
    const auto n_below = lo - scene_values.begin();
    const auto n_above = scene_values.end() - hi;
    const auto i = static_cast<Eigen::Index>(a);
    above[i] = weights[a] * (static_cast<double>(n_above) / ns);
    below[i] = (1.0 - weights[a]) * (static_cast<double>(n_below) / ns);
  }
}

Eigen::Matrix3Xd transform_scene(const Eigen::Matrix3Xd& scene, const Twist& x) {
  if (scene.cols() == 0) throw std::invalid_argument("scene cloud is empty");
  return apply(exp_se3(x), scene);
}

}  // namespace

Histogram histogram_original(const ModelContext& ctx, const Eigen::Matrix3Xd& scene, const Twist& x) {
  const Eigen::Matrix3Xd s = transform_scene(scene, x);
  const auto nm = static_cast<Eigen::Index>(ctx.model_size());
  Histogram h(2 * nm);
  gaussian_votes(ctx, s, h.segment(0, nm), h.segment(nm, nm));
  return h;
}

Histogram histogram_improved(const ModelContext& ctx, const Eigen::Matrix3Xd& scene, const Twist& x) {
  const Eigen::Matrix3Xd s = transform_scene(scene, x);
  const auto nm = static_cast<Eigen::Index>(ctx.model_size());
  Histogram h(6 * nm);
  gaussian_votes(ctx, s, h.segment(0, nm), h.segment(nm, nm));
  for (Eigen::Index a = 0; a < nm; ++a) {
    const double alpha = ctx.alpha()[static_cast<std::size_t>(a)];
    h[a] = alpha * h[a];
    h[nm + a] = (1.0 - alpha) * h[nm + a];
  }
  // Scene angles are measured about the model center (the origin).
  auto angles = spherical_angles(s, Eigen::Vector3d::Zero());
  order_votes(ctx.elevation(), ctx.beta(), std::move(angles.elevation), h.segment(2 * nm, nm), h.segment(3 * nm, nm));
  order_votes(ctx.azimuth(), ctx.gamma(), std::move(angles.azimuth), h.segment(4 * nm, nm), h.segment(5 * nm, nm));
  return h;
}

Histogram ModelContext::evaluate(const Eigen::Matrix3Xd& scene, const Twist& x) const {
  return mode_ == DescriptorMode::original ? histogram_original(*this, scene, x)
                                           : histogram_improved(*this, scene, x);
}

Histogram ModelContext::evaluate(const PointCloud& scene, const Twist& x) const {
  return evaluate(scene.points(), x);
}

Histogram reference_histogram(const ModelContext& ctx) {
  return ctx.evaluate(ctx.model().points(), Twist::zero());
}

ModelContext ModelContext::build(const PointCloud& model, double sigma2, DescriptorMode mode,
                                 const ScaleRecord& record, const ContextOptions& options) {
  if (model.size() < 7) throw std::invalid_argument("model needs at least 7 points");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("sigma2 must be positive");
  const Eigen::Vector3d c = model.centroid();
  const double radius = model.points().colwise().norm().maxCoeff();
  if (c.norm() > 1e-6 || std::abs(radius - 1.0) > 1e-6)
    throw std::invalid_argument("model must be normalized to unit scale (see normalize_to_unit)");

  ModelContext ctx;
  ctx.mode_ = mode;
  ctx.sigma2_ = sigma2;
  ctx.record_ = record;
  ctx.options_ = options;

  auto normals = estimate_normals(model.without_normals(), options.normal_neighbors);
  ctx.model_ = std::move(normals.cloud);
  ctx.degenerate_normals_ = normals.degenerate_count;

  auto angles = spherical_angles(ctx.model_, Eigen::Vector3d::Zero());
  ctx.elevation_ = std::move(angles.elevation);
  ctx.azimuth_ = std::move(angles.azimuth);
  ctx.alpha_ = front_fraction(ctx.model_.points(), ctx.model_.normals());
  ctx.beta_ = strict_greater_fraction(ctx.elevation_);
  ctx.gamma_ = strict_greater_fraction(ctx.azimuth_);
  ctx.finalize();
  return ctx;
}

ModelContext ModelContext::with_mode(DescriptorMode mode) const {
  ModelContext ctx = *this;
  ctx.mode_ = mode;
  ctx.finalize();
  return ctx;
}

void ModelContext::finalize() {
  reference_ = reference_histogram(*this);

  EVP_MD_CTX* md = EVP_MD_CTX_new();
  if (md == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
  auto feed_u64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    EVP_DigestUpdate(md, b, 8);
  };
  auto feed_f64 = [&](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    feed_u64(bits);
  };
  EVP_DigestUpdate(md, "IDOCTX1", 7);
  feed_u64(static_cast<std::uint64_t>(mode_));
  feed_f64(sigma2_);
  feed_u64(model_.size());
  for (std::size_t i = 0; i < model_.size(); ++i) {
    for (int c = 0; c < 3; ++c) feed_f64(model_.point(i)[c]);
    for (int c = 0; c < 3; ++c) feed_f64(model_.normal(i)[c]);
  }
  unsigned int len = 0;
  EVP_DigestFinal_ex(md, fingerprint_.data(), &len);
  EVP_MD_CTX_free(md);
}

void write_histogram_row(std::ostream& out, std::size_t iteration, const Histogram& h) {
  const auto old = out.precision(17);
  out << iteration;
  for (Eigen::Index i = 0; i < h.size(); ++i) out << ',' << h[i];
  out << '\n';
  out.precision(old);
}

}  // namespace ido
