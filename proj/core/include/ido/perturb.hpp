#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ido/lie.hpp"
#include "ido/point_cloud.hpp"
#include "ido/regressor.hpp"

namespace ido {

enum class OutlierKind { sparse, structured };

std::string_view to_string(OutlierKind kind);
OutlierKind parse_outlier_kind(std::string_view text);

/// One synthetic corruption of the model. Defaults are the standard test
/// condition; ranges are the sweep extents.
struct PerturbationSpec {
  double noise_std = 0.05;         // [0, 0.1], model units
  std::size_t scene_count = 400;   // [100, 4000]
  std::size_t outliers = 300;      // [0, 600]
  double incomplete_ratio = 0.3;   // [0, 0.7]
  double rotation_deg = 60.0;      // [0, 180]
  double translation = 0.3;        // [0, 1.0]
  OutlierKind outlier_kind = OutlierKind::sparse;
  std::uint64_t seed = 0;

  /// Throws std::out_of_range naming the offending field.
  void validate() const;

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

void to_json(nlohmann::json& j, const PerturbationSpec& spec);
void from_json(const nlohmann::json& j, PerturbationSpec& spec);

/// Scene plus ground truth. Inliers come first (scene[0, inlier_count)),
/// followed by outliers.
struct LabeledPair {
  PointCloud scene;
  Twist x_star;                // registration parameter mapping the scene onto the model
  RigidTransform T_gt;         // exp_se3(x_star)
  PerturbationSpec spec;
  std::size_t inlier_count = 0;
  std::vector<std::size_t> source_index;  // model point each inlier was drawn from
};

/// Pipeline: resample with replacement -> ball crop -> Gaussian noise ->
/// outliers -> random rigid motion. Each stage draws from its own
/// counter-based stream keyed by spec.seed.
LabeledPair generate_pair(const PointCloud& model, const PerturbationSpec& spec);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Per-sample perturbation ranges for training data.
struct TrainingRanges {
  Range noise_std{0.0, 0.05};
  Range scene_count{400, 800};
  Range outliers{0, 300};
  Range incomplete_ratio{0.0, 0.3};
  Range rotation_deg{0.0, 90.0};
  Range translation{0.0, 0.3};
  OutlierKind outlier_kind = OutlierKind::sparse;

  /// False when any range leaves the standard training extents (allowed for
  /// ablations, but reported).
  bool within_training_extents() const;
};

void to_json(nlohmann::json& j, const TrainingRanges& r);
void from_json(const nlohmann::json& j, TrainingRanges& r);

struct GeneratedTrainingSet {
  TrainingSet set;  // x0 = 0 for every sample
  std::vector<PerturbationSpec> specs;
  bool outside_training_extents = false;
};

GeneratedTrainingSet generate_training_set(const PointCloud& model, std::size_t n, const TrainingRanges& ranges,
                                           std::uint64_t seed);

enum class Perturbation { noise, scene_count, outliers, incomplete, rotation, translation };

inline constexpr Perturbation kAllPerturbations[] = {Perturbation::noise,      Perturbation::outliers,
                                                     Perturbation::scene_count, Perturbation::incomplete,
                                                     Perturbation::rotation,    Perturbation::translation};

std::string_view to_string(Perturbation p);
/// Accepts noise, outliers, count (scene_count), incomplete, rotation, translation.
Perturbation parse_perturbation(std::string_view text);

/// `count` evenly spaced levels covering the sweep extent of `p`.
std::vector<double> sweep_levels(Perturbation p, std::size_t count);

/// Sets the field swept by `p` to `level`.
void set_level(PerturbationSpec& spec, Perturbation p, double level);

struct SweepCase {
  std::size_t level_index = 0;
  double level = 0.0;
  std::size_t case_index = 0;  // within the level
  LabeledPair pair;
};

/// per_level pairs for each level; every other field stays at `base`.
std::vector<SweepCase> generate_sweep(const PointCloud& model, Perturbation p, const std::vector<double>& levels,
                                      std::size_t per_level, std::uint64_t seed,
                                      const PerturbationSpec& base = {});

/// Pair directory: scene.ply, spec.json, gt.json.
void save_pair(const std::filesystem::path& dir, const LabeledPair& pair);
LabeledPair load_pair(const std::filesystem::path& dir);

}  // namespace ido
