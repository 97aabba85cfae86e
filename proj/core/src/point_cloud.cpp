#include "ido/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Eigenvalues>

#include "ido/error.hpp"
#include "ido/spatial_index.hpp"

namespace ido {

PointCloud::PointCloud(Eigen::Matrix3Xd points) : points_(std::move(points)) {
  if (!points_.allFinite()) throw Error("point cloud has non-finite coordinates");
}

PointCloud::PointCloud(Eigen::Matrix3Xd points, Eigen::Matrix3Xd normals)
    : points_(std::move(points)), normals_(std::move(normals)) {
  if (!points_.allFinite()) throw Error("point cloud has non-finite coordinates");
  if (normals_.cols() != points_.cols()) throw Error("normal count does not match point count");
  for (Eigen::Index i = 0; i < normals_.cols(); ++i) {
    if (std::abs(normals_.col(i).norm() - 1.0) > 1e-9) throw Error("normals must have unit length");
  }
}

PointCloud PointCloud::from_points(std::span<const Eigen::Vector3d> points) {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = points[i];
  return PointCloud(std::move(m));
}

Eigen::Vector3d PointCloud::centroid() const {
  if (empty()) throw EmptyCloudError("centroid of an empty cloud");
  return points_.rowwise().sum() / static_cast<double>(points_.cols());
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  Eigen::Matrix3Xd p(3, static_cast<Eigen::Index>(indices.size()));
  Eigen::Matrix3Xd n(3, has_normals() ? static_cast<Eigen::Index>(indices.size()) : 0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    p.col(static_cast<Eigen::Index>(i)) = points_.col(src);
    if (has_normals()) n.col(static_cast<Eigen::Index>(i)) = normals_.col(src);
  }
  PointCloud out;
  out.points_ = std::move(p);
  out.normals_ = std::move(n);
  return out;
}

// --- I/O --------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

PointCloud load_csv(const std::filesystem::path& path, std::istream& in) {
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split(body, ',');
    Eigen::Vector3d p;
    bool ok = fields.size() >= 3;
    for (int c = 0; ok && c < 3; ++c) ok = parse_double(fields[static_cast<std::size_t>(c)], p[c]);
    if (!ok) {
      // A single header line before the first row is tolerated.
      if (!seen_data && pts.empty() && line_no == 1) continue;
      throw ParseError(path.string(), line_no, "expected x,y,z");
    }
    seen_data = true;
    pts.push_back(p);
  }
  if (pts.empty()) throw EmptyCloudError(path.string() + ": cloud has no points");
  return PointCloud::from_points(pts);
}

PointCloud load_ply(const std::filesystem::path& path, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next() || trim(line) != "ply") throw ParseError(path.string(), 1, "missing 'ply' magic");

  struct ElementSpec {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
  };
  std::vector<ElementSpec> elements;
  bool ascii = false;
  while (true) {
    if (!next()) throw ParseError(path.string(), line_no, "unterminated header");
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii")
        throw ParseError(path.string(), line_no, "only ASCII PLY is supported");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(path.string(), line_no, "malformed element line");
      ElementSpec e;
      e.name = std::string(tok[1]);
      double c = 0;
      if (!parse_double(tok[2], c) || c < 0) throw ParseError(path.string(), line_no, "bad element count");
      e.count = static_cast<std::size_t>(c);
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(path.string(), line_no, "property before element");
      if (tok.size() >= 2 && tok[1] == "list") {
        elements.back().properties.push_back("<list>");
      } else if (tok.size() == 3) {
        elements.back().properties.emplace_back(tok[2]);
      } else {
        throw ParseError(path.string(), line_no, "malformed property line");
      }
    } else {
      throw ParseError(path.string(), line_no, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!ascii) throw ParseError(path.string(), line_no, "missing format line");

  Eigen::Matrix3Xd pts;
  Eigen::Matrix3Xd nrm;
  bool found_vertex = false;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i)
        if (!next()) throw ParseError(path.string(), line_no, "unexpected end of file in " + e.name);
      continue;
    }
    found_vertex = true;
    std::array<int, 6> col{-1, -1, -1, -1, -1, -1};
    const std::array<const char*, 6> names{"x", "y", "z", "nx", "ny", "nz"};
    for (std::size_t p = 0; p < e.properties.size(); ++p) {
      if (e.properties[p] == "<list>")
        throw ParseError(path.string(), line_no, "list properties on vertices are not supported");
      for (std::size_t k = 0; k < names.size(); ++k)
        if (e.properties[p] == names[k]) col[k] = static_cast<int>(p);
    }
    if (col[0] < 0 || col[1] < 0 || col[2] < 0)
      throw ParseError(path.string(), line_no, "vertex element lacks x/y/z");
    const bool with_normals = col[3] >= 0 && col[4] >= 0 && col[5] >= 0;
    pts.resize(3, static_cast<Eigen::Index>(e.count));
    if (with_normals) nrm.resize(3, static_cast<Eigen::Index>(e.count));
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!next()) throw ParseError(path.string(), line_no + 1, "unexpected end of file in vertex data");
      const auto tok = split_ws(line);
      if (tok.size() != e.properties.size())
        throw ParseError(path.string(), line_no, "expected " + std::to_string(e.properties.size()) + " values");
      for (int k = 0; k < 6; ++k) {
        if (col[static_cast<std::size_t>(k)] < 0 || (k >= 3 && !with_normals)) continue;
        double v = 0;
        if (!parse_double(tok[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])], v))
          throw ParseError(path.string(), line_no, "non-numeric vertex value");
        if (k < 3)
          pts(k, static_cast<Eigen::Index>(i)) = v;
        else
          nrm(k - 3, static_cast<Eigen::Index>(i)) = v;
      }
    }
    if (with_normals) {
      for (Eigen::Index i = 0; i < nrm.cols(); ++i) {
        const double n = nrm.col(i).norm();
        if (n > 0) nrm.col(i) /= n;
      }
    }
  }
  if (!found_vertex) throw ParseError(path.string(), line_no, "no vertex element");
  if (pts.cols() == 0) throw EmptyCloudError(path.string() + ": cloud has no points");
  return nrm.cols() ? PointCloud(std::move(pts), std::move(nrm)) : PointCloud(std::move(pts));
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  if (format == CloudFormat::automatic) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    format = ext == ".ply" ? CloudFormat::ply_ascii : CloudFormat::csv;
  }
  return format == CloudFormat::ply_ascii ? load_ply(path, in) : load_csv(path, in);
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n" << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.has_normals()) {
      const auto n = cloud.normal(i);
      out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
    }
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = cloud.point(i);
    out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  }
}

// --- downsampling -------------------------------------------------------------

namespace {

struct VoxelGrid {
  std::vector<std::array<std::int64_t, 3>> keys;  // sorted, unique
  std::vector<std::size_t> first;                 // run boundaries into `order`
  std::vector<std::size_t> order;
};

VoxelGrid voxelize(const Eigen::Matrix3Xd& pts, const Eigen::Vector3d& origin, double cell) {
  const auto n = static_cast<std::size_t>(pts.cols());
  std::vector<std::array<std::int64_t, 3>> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c)
      key[i][static_cast<std::size_t>(c)] =
          static_cast<std::int64_t>(std::floor((pts(c, static_cast<Eigen::Index>(i)) - origin[c]) / cell));
  }
  VoxelGrid g;
  g.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.order[i] = i;
  std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || key[g.order[i]] != key[g.order[i - 1]]) {
      g.keys.push_back(key[g.order[i]]);
      g.first.push_back(i);
    }
  }
  g.first.push_back(n);
  return g;
}

}  // namespace

PointCloud downsample_average(const PointCloud& cloud, std::size_t target_count) {
  const std::size_t n = cloud.size();
  if (target_count < 1 || target_count > n)
    throw std::invalid_argument("downsample target must be in [1, " + std::to_string(n) + "]");
  if (target_count == n) return cloud;

  const Eigen::Matrix3Xd& pts = cloud.points();
  const Eigen::Vector3d lo = pts.rowwise().minCoeff();
  const Eigen::Vector3d hi = pts.rowwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (extent <= 0.0) return PointCloud(pts.col(0).eval());

  auto occupied = [&](double cell) { return voxelize(pts, lo, cell).keys.size(); };

  // Bisection on log(cell size); the occupied count is (nearly) monotone in it.
  double log_lo = std::log(extent * 1e-7);
  double log_hi = std::log(extent * 2.0);
  double best_cell = std::exp(log_hi);
  std::size_t best_diff = occupied(best_cell);
  best_diff = best_diff > target_count ? best_diff - target_count : target_count - best_diff;
  for (int it = 0; it < 80 && best_diff != 0; ++it) {
    const double mid = 0.5 * (log_lo + log_hi);
    const double cell = std::exp(mid);
    const std::size_t c = occupied(cell);
    const std::size_t diff = c > target_count ? c - target_count : target_count - c;
    if (diff < best_diff) {
      best_diff = diff;
      best_cell = cell;
    }
    if (c > target_count)
      log_lo = mid;
    else
      log_hi = mid;
  }

  const VoxelGrid g = voxelize(pts, lo, best_cell);
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(g.keys.size()));
  for (std::size_t v = 0; v < g.keys.size(); ++v) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t j = g.first[v]; j < g.first[v + 1]; ++j) sum += pts.col(static_cast<Eigen::Index>(g.order[j]));
    out.col(static_cast<Eigen::Index>(v)) = sum / static_cast<double>(g.first[v + 1] - g.first[v]);
  }
  return PointCloud(std::move(out));
}

// --- normals ------------------------------------------------------------------

Eigen::Vector3d fit_plane_normal(const Eigen::Matrix3Xd& nb, bool& degenerate) {
  const Eigen::Vector3d mean = nb.rowwise().mean();
  const Eigen::Matrix3Xd centered = nb.colwise() - mean;
  const Eigen::Matrix3d cov = centered * centered.transpose() / static_cast<double>(nb.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Eigen::Vector3d ev = es.eigenvalues();  // ascending
  degenerate = !(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2];
  if (degenerate) return Eigen::Vector3d::UnitZ();
  return es.eigenvectors().col(0).normalized();
}

namespace {

// First non-zero component positive.
Eigen::Vector3d canonical_sign(const Eigen::Vector3d& n) {
  for (int c = 0; c < 3; ++c) {
    if (n[c] > 0) return n;
    if (n[c] < 0) return -n;
  }
  return n;
}

}  // namespace

NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k) {
  const std::size_t n = cloud.size();
  if (k < 2 || n < k + 1)
    throw std::invalid_argument("normal estimation needs at least k+1 points and k >= 2");
  const SpatialIndex index(cloud.points());
  const Eigen::Vector3d cloud_centroid = cloud.centroid();

  NormalEstimate result;
  result.degenerate.assign(n, false);
  Eigen::Matrix3Xd normals(3, static_cast<Eigen::Index>(n));
  Eigen::Matrix3Xd nb(3, static_cast<Eigen::Index>(k + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p = cloud.point(i);
    auto neighbors = index.knn(p, k + 1);
    auto self = std::find_if(neighbors.begin(), neighbors.end(), [&](const Neighbor& nbr) { return nbr.index == i; });
    if (self != neighbors.end())
      neighbors.erase(self);
    else
      neighbors.pop_back();
    nb.col(0) = p;
    for (std::size_t j = 0; j < k; ++j) nb.col(static_cast<Eigen::Index>(j + 1)) = cloud.point(neighbors[j].index);

    bool degenerate = false;
    Eigen::Vector3d normal = fit_plane_normal(nb, degenerate);
    if (degenerate) {
      result.degenerate[i] = true;
      ++result.degenerate_count;
    } else {
      const Eigen::Vector3d outward = nb.rowwise().mean() - cloud_centroid;
      const double side = normal.dot(outward);
      if (std::abs(side) <= 1e-9 * outward.norm())
        normal = canonical_sign(normal);
      else if (side < 0)
        normal = -normal;
    }
    normals.col(static_cast<Eigen::Index>(i)) = normal;
  }
  result.cloud = PointCloud(cloud.points(), std::move(normals));
  return result;
}

// --- angles / normalization -----------------------------------------------------

SphericalAngles spherical_angles(const Eigen::Matrix3Xd& points, const Eigen::Vector3d& center) {
  SphericalAngles out;
  const auto n = static_cast<std::size_t>(points.cols());
  out.elevation.resize(n);
  out.azimuth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d d = points.col(static_cast<Eigen::Index>(i)) - center;
    if (d.x() == 0.0 && d.y() == 0.0 && d.z() == 0.0) {
      out.elevation[i] = 0.0;
      out.azimuth[i] = 0.0;
      out.at_center.push_back(i);
      continue;
    }
    out.elevation[i] = elevation_of(d);
    out.azimuth[i] = azimuth_of(d);
  }
  return out;
}

PointCloud ScaleRecord::apply(const PointCloud& cloud) const {
  Eigen::Matrix3Xd p = (cloud.points().colwise() - centroid) / scale;
  return cloud.has_normals() ? PointCloud(std::move(p), cloud.normals()) : PointCloud(std::move(p));
}

PointCloud ScaleRecord::undo(const PointCloud& cloud) const {
  Eigen::Matrix3Xd p = (cloud.points() * scale).colwise() + centroid;
  return cloud.has_normals() ? PointCloud(std::move(p), cloud.normals()) : PointCloud(std::move(p));
}

NormalizedCloud normalize_to_unit(const PointCloud& cloud) {
  if (cloud.size() < 2) throw DegenerateInputError("normalization needs at least two points");
  ScaleRecord rec;
  rec.centroid = cloud.centroid();
  rec.scale = (cloud.points().colwise() - rec.centroid).colwise().norm().maxCoeff();
  if (!(rec.scale > 0.0)) throw DegenerateInputError("cloud has zero extent");
  return {rec.apply(cloud), rec};
}

}  // namespace ido
