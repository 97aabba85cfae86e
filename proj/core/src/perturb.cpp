#include "ido/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "ido/error.hpp"
#include "ido/random.hpp"

namespace ido {

namespace {

// Stream ids of the generation stages.
enum Stream : std::uint64_t { kResample = 1, kCrop = 2, kNoise = 3, kOutliers = 4, kMotion = 5 };

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi))
    throw std::out_of_range(std::string(name) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
}

}  // namespace

std::string_view to_string(OutlierKind kind) { return kind == OutlierKind::sparse ? "sparse" : "structured"; }

OutlierKind parse_outlier_kind(std::string_view text) {
  if (text == "sparse") return OutlierKind::sparse;
  if (text == "structured") return OutlierKind::structured;
  throw std::invalid_argument("unknown outlier kind '" + std::string(text) + "'");
}

void PerturbationSpec::validate() const {
  check_range("noise_std", noise_std, 0.0, 0.1);
  check_range("scene_count", static_cast<double>(scene_count), 100, 4000);
  check_range("outliers", static_cast<double>(outliers), 0, 600);
  check_range("incomplete_ratio", incomplete_ratio, 0.0, 0.7);
  check_range("rotation_deg", rotation_deg, 0.0, 180.0);
  check_range("translation", translation, 0.0, 1.0);
}

void to_json(nlohmann::json& j, const PerturbationSpec& s) {
  j = nlohmann::json{{"noise_std", s.noise_std},
                     {"scene_count", s.scene_count},
                     {"outliers", s.outliers},
                     {"incomplete_ratio", s.incomplete_ratio},
                     {"rotation_deg", s.rotation_deg},
                     {"translation", s.translation},
                     {"outlier_kind", std::string(to_string(s.outlier_kind))},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, PerturbationSpec& s) {
  PerturbationSpec d;
  s.noise_std = j.value("noise_std", d.noise_std);
  s.scene_count = j.value("scene_count", d.scene_count);
  s.outliers = j.value("outliers", d.outliers);
  s.incomplete_ratio = j.value("incomplete_ratio", d.incomplete_ratio);
  s.rotation_deg = j.value("rotation_deg", d.rotation_deg);
  s.translation = j.value("translation", d.translation);
  s.outlier_kind = parse_outlier_kind(j.value("outlier_kind", std::string("sparse")));
  s.seed = j.value("seed", d.seed);
}

LabeledPair generate_pair(const PointCloud& model, const PerturbationSpec& spec) {
  spec.validate();
  if (model.empty()) throw EmptyCloudError("model cloud is empty");
  const std::uint64_t seed = spec.seed;

  // 1. resample with replacement
  CounterRng resample(seed, kResample);
  std::vector<std::size_t> source(spec.scene_count);
  for (auto& s : source) s = resample.below(model.size());

  // 2. drop the points nearest to a random seed point (one contiguous hole)
  const auto drop = static_cast<std::size_t>(std::ceil(spec.incomplete_ratio * static_cast<double>(spec.scene_count) - 1e-9));
  if (drop > 0) {
    CounterRng crop(seed, kCrop);
    const Eigen::Vector3d center = model.point(source[crop.below(source.size())]);
    std::vector<std::pair<double, std::size_t>> order(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) order[i] = {(model.point(source[i]) - center).squaredNorm(), i};
    std::sort(order.begin(), order.end());
    std::vector<bool> removed(source.size(), false);
    for (std::size_t i = 0; i < drop && i < order.size(); ++i) removed[order[i].second] = true;
    std::vector<std::size_t> kept;
    kept.reserve(source.size() - drop);
    for (std::size_t i = 0; i < source.size(); ++i)
      if (!removed[i]) kept.push_back(source[i]);
    source = std::move(kept);
  }
  if (source.empty()) throw DegenerateInputError("perturbation removed every scene point");

  const auto inliers = static_cast<Eigen::Index>(source.size());
  Eigen::Matrix3Xd pts(3, inliers + static_cast<Eigen::Index>(spec.outliers));
  for (Eigen::Index i = 0; i < inliers; ++i) pts.col(i) = model.point(source[static_cast<std::size_t>(i)]);

  // 3. isotropic Gaussian noise
  if (spec.noise_std > 0.0) {
    CounterRng noise(seed, kNoise);
    for (Eigen::Index i = 0; i < inliers; ++i)
      for (int c = 0; c < 3; ++c) pts(c, i) += spec.noise_std * noise.normal();
  }

  // 4. outliers in the inlier bounding box grown 1.5x
  if (spec.outliers > 0) {
    CounterRng out(seed, kOutliers);
    const Eigen::Vector3d lo = pts.leftCols(inliers).rowwise().minCoeff();
    const Eigen::Vector3d hi = pts.leftCols(inliers).rowwise().maxCoeff();
    const Eigen::Vector3d mid = 0.5 * (lo + hi);
    const Eigen::Vector3d half = 0.75 * (hi - lo);
    auto in_box = [&] {
      Eigen::Vector3d p;
      for (int c = 0; c < 3; ++c) p[c] = mid[c] + half[c] * out.uniform(-1.0, 1.0);
      return p;
    };
    const auto total = static_cast<Eigen::Index>(spec.outliers);
    if (spec.outlier_kind == OutlierKind::sparse) {
      for (Eigen::Index i = 0; i < total; ++i) pts.col(inliers + i) = in_box();
    } else {
      // Structured clutter: a square plane patch plus one Gaussian blob.
      const double size = (hi - lo).maxCoeff();
      const Eigen::Vector3d normal = out.unit_vector();
      const Eigen::Vector3d u = normal.unitOrthogonal();
      const Eigen::Vector3d v = normal.cross(u);
      const Eigen::Vector3d patch_center = in_box();
      const Eigen::Vector3d blob_center = in_box();
      const Eigen::Index on_patch = total / 2;
      for (Eigen::Index i = 0; i < total; ++i) {
        Eigen::Vector3d p;
        if (i < on_patch) {
          p = patch_center + 0.25 * size * (out.uniform(-1.0, 1.0) * u + out.uniform(-1.0, 1.0) * v);
        } else {
          p = blob_center;
          for (int c = 0; c < 3; ++c) p[c] += 0.05 * size * out.normal();
        }
        pts.col(inliers + i) = p;
      }
    }
  }

  // 5. rigid motion about a uniformly random axis
  CounterRng motion(seed, kMotion);
  const Eigen::Vector3d axis = motion.unit_vector();
  const Eigen::Vector3d direction = motion.unit_vector();
  RigidTransform T_motion;
  T_motion.rotation = exp_so3(spec.rotation_deg * std::numbers::pi / 180.0 * axis);
  T_motion.translation = spec.translation * direction;

  LabeledPair pair;
  pair.scene = PointCloud(apply(T_motion, pts));
  pair.T_gt = T_motion.inverse();
  pair.x_star = log_se3(pair.T_gt);
  pair.spec = spec;
  pair.inlier_count = source.size();
  pair.source_index = std::move(source);
  return pair;
}

// --- training sets ---------------------------------------------------------------

namespace {

bool inside(const Range& r, double lo, double hi) { return r.lo >= lo && r.hi <= hi && r.lo <= r.hi; }

void to_json_range(nlohmann::json& j, const Range& r) { j = nlohmann::json::array({r.lo, r.hi}); }
Range range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("range must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

bool TrainingRanges::within_training_extents() const {
  const TrainingRanges std_ranges;
  return inside(noise_std, std_ranges.noise_std.lo, std_ranges.noise_std.hi) &&
         inside(scene_count, std_ranges.scene_count.lo, std_ranges.scene_count.hi) &&
         inside(outliers, std_ranges.outliers.lo, std_ranges.outliers.hi) &&
         inside(incomplete_ratio, std_ranges.incomplete_ratio.lo, std_ranges.incomplete_ratio.hi) &&
         inside(rotation_deg, std_ranges.rotation_deg.lo, std_ranges.rotation_deg.hi) &&
         inside(translation, std_ranges.translation.lo, std_ranges.translation.hi);
}

void to_json(nlohmann::json& j, const TrainingRanges& r) {
  j = nlohmann::json::object();
  to_json_range(j["noise_std"], r.noise_std);
  to_json_range(j["scene_count"], r.scene_count);
  to_json_range(j["outliers"], r.outliers);
  to_json_range(j["incomplete_ratio"], r.incomplete_ratio);
  to_json_range(j["rotation_deg"], r.rotation_deg);
  to_json_range(j["translation"], r.translation);
  j["outlier_kind"] = std::string(to_string(r.outlier_kind));
}

void from_json(const nlohmann::json& j, TrainingRanges& r) {
  r = TrainingRanges{};
  if (j.contains("noise_std")) r.noise_std = range_from_json(j["noise_std"]);
  if (j.contains("scene_count")) r.scene_count = range_from_json(j["scene_count"]);
  if (j.contains("outliers")) r.outliers = range_from_json(j["outliers"]);
  if (j.contains("incomplete_ratio")) r.incomplete_ratio = range_from_json(j["incomplete_ratio"]);
  if (j.contains("rotation_deg")) r.rotation_deg = range_from_json(j["rotation_deg"]);
  if (j.contains("translation")) r.translation = range_from_json(j["translation"]);
  if (j.contains("outlier_kind")) r.outlier_kind = parse_outlier_kind(j["outlier_kind"].get<std::string>());
}

GeneratedTrainingSet generate_training_set(const PointCloud& model, std::size_t n, const TrainingRanges& ranges,
                                           std::uint64_t seed) {
  GeneratedTrainingSet out;
  out.outside_training_extents = !ranges.within_training_extents();
  out.specs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(derive_seed(seed, i, 0x5452414e), 0);  // "TRAN"
    PerturbationSpec& s = out.specs[i];
    s.noise_std = rng.uniform(ranges.noise_std.lo, ranges.noise_std.hi);
    s.scene_count = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(ranges.scene_count.lo),
                                                         static_cast<std::int64_t>(ranges.scene_count.hi)));
    s.outliers = static_cast<std::size_t>(
        rng.integer(static_cast<std::int64_t>(ranges.outliers.lo), static_cast<std::int64_t>(ranges.outliers.hi)));
    s.incomplete_ratio = rng.uniform(ranges.incomplete_ratio.lo, ranges.incomplete_ratio.hi);
    s.rotation_deg = rng.uniform(ranges.rotation_deg.lo, ranges.rotation_deg.hi);
    s.translation = rng.uniform(ranges.translation.lo, ranges.translation.hi);
    s.outlier_kind = ranges.outlier_kind;
    s.seed = derive_seed(seed, i, 1);
    s.validate();
  }
  out.set.samples.resize(n);
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t i = r.begin(); i != r.end(); ++i) {
      LabeledPair pair = generate_pair(model, out.specs[i]);
      out.set.samples[i] = TrainingSample{Twist::zero(), pair.x_star, std::move(pair.scene)};
    }
  });
  return out;
}

// --- sweeps -------------------------------------------------------------------------

std::string_view to_string(Perturbation p) {
  switch (p) {
    case Perturbation::noise: return "noise";
    case Perturbation::scene_count: return "count";
    case Perturbation::outliers: return "outliers";
    case Perturbation::incomplete: return "incomplete";
    case Perturbation::rotation: return "rotation";
    case Perturbation::translation: return "translation";
  }
  return "?";
}

Perturbation parse_perturbation(std::string_view t) {
  if (t == "noise" || t == "noise_std") return Perturbation::noise;
  if (t == "count" || t == "scene_count" || t == "points") return Perturbation::scene_count;
  if (t == "outliers" || t == "outlier") return Perturbation::outliers;
  if (t == "incomplete" || t == "incomplete_ratio" || t == "occlusion") return Perturbation::incomplete;
  if (t == "rotation" || t == "rotation_deg") return Perturbation::rotation;
  if (t == "translation") return Perturbation::translation;
  throw std::invalid_argument("unknown perturbation '" + std::string(t) + "'");
}

std::vector<double> sweep_levels(Perturbation p, std::size_t count) {
  double lo = 0.0, hi = 0.0;
  switch (p) {
    case Perturbation::noise: hi = 0.1; break;
    case Perturbation::scene_count: lo = 100; hi = 4000; break;
    case Perturbation::outliers: hi = 600; break;
    case Perturbation::incomplete: hi = 0.7; break;
    case Perturbation::rotation: hi = 180; break;
    case Perturbation::translation: hi = 1.0; break;
  }
  std::vector<double> levels(count);
  for (std::size_t i = 0; i < count; ++i)
    levels[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  if (count > 1) levels.back() = hi;
  if (p == Perturbation::scene_count || p == Perturbation::outliers)
    for (auto& l : levels) l = std::round(l);
  return levels;
}

void set_level(PerturbationSpec& spec, Perturbation p, double level) {
  switch (p) {
    case Perturbation::noise: spec.noise_std = level; break;
    case Perturbation::scene_count: spec.scene_count = static_cast<std::size_t>(std::llround(level)); break;
    case Perturbation::outliers: spec.outliers = static_cast<std::size_t>(std::llround(level)); break;
    case Perturbation::incomplete: spec.incomplete_ratio = level; break;
    case Perturbation::rotation: spec.rotation_deg = level; break;
    case Perturbation::translation: spec.translation = level; break;
  }
}

std::vector<SweepCase> generate_sweep(const PointCloud& model, Perturbation p, const std::vector<double>& levels,
                                      std::size_t per_level, std::uint64_t seed, const PerturbationSpec& base) {
  std::vector<SweepCase> cases(levels.size() * per_level);
  const std::uint64_t sweep_seed = derive_seed(seed, static_cast<std::uint64_t>(p), 0x53574550);  // "SWEP"
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (std::size_t c = 0; c < per_level; ++c) {
      auto& sc = cases[l * per_level + c];
      sc.level_index = l;
      sc.level = levels[l];
      sc.case_index = c;
      sc.pair.spec = base;
      set_level(sc.pair.spec, p, levels[l]);
      sc.pair.spec.seed = derive_seed(sweep_seed, l, c);
      sc.pair.spec.validate();
    }
  }
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, cases.size()), [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t i = r.begin(); i != r.end(); ++i) cases[i].pair = generate_pair(model, cases[i].pair.spec);
  });
  return cases;
}

// --- pair directories -----------------------------------------------------------------

void save_pair(const std::filesystem::path& dir, const LabeledPair& pair) {
  std::filesystem::create_directories(dir);
  save_ply(dir / "scene.ply", pair.scene);
  {
    std::ofstream out(dir / "spec.json");
    out << nlohmann::json(pair.spec).dump(2) << '\n';
  }
  nlohmann::json gt;
  gt["x_star"] = std::vector<double>(pair.x_star.coeffs.data(), pair.x_star.coeffs.data() + 6);
  std::vector<double> T;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) T.push_back(pair.T_gt.rotation(r, c));
    T.push_back(pair.T_gt.translation[r]);
  }
  gt["T_gt"] = T;
  gt["inlier_count"] = pair.inlier_count;
  gt["source_index"] = pair.source_index;
  std::ofstream out(dir / "gt.json");
  out << gt.dump(2) << '\n';
}

LabeledPair load_pair(const std::filesystem::path& dir) {
  LabeledPair pair;
  pair.scene = load_cloud(dir / "scene.ply", CloudFormat::ply_ascii);
  auto read_json = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) throw Error("cannot open " + (dir / name).string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError((dir / name).string(), 0, e.what());
    }
  };
  pair.spec = read_json("spec.json").get<PerturbationSpec>();
  const auto gt = read_json("gt.json");
  const auto x = gt.at("x_star").get<std::vector<double>>();
  const auto T = gt.at("T_gt").get<std::vector<double>>();
  if (x.size() != 6 || T.size() != 12) throw ParseError((dir / "gt.json").string(), 0, "x_star needs 6, T_gt 12 numbers");
  for (int i = 0; i < 6; ++i) pair.x_star.coeffs[i] = x[static_cast<std::size_t>(i)];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pair.T_gt.rotation(r, c) = T[static_cast<std::size_t>(4 * r + c)];
    pair.T_gt.translation[r] = T[static_cast<std::size_t>(4 * r + 3)];
  }
  pair.inlier_count = gt.value("inlier_count", pair.scene.size());
  pair.source_index = gt.value("source_index", std::vector<std::size_t>{});
  if (pair.inlier_count > pair.scene.size()) throw ParseError((dir / "gt.json").string(), 0, "inlier_count exceeds scene size");
  return pair;
}

}  // namespace ido
