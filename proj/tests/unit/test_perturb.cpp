#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "ido/perturb.hpp"
#include "ido/shapes.hpp"

using namespace ido;

namespace {

const PointCloud& model() {
  static const PointCloud m = synthetic_model("bunny", 128, 1);
  return m;
}

PerturbationSpec clean(std::size_t count, std::uint64_t seed) {
  return PerturbationSpec{0.0, count, 0, 0.0, 0.0, 0.0, OutlierKind::sparse, seed};
}

}  // namespace

TEST(Perturb, DefaultsAreTheStandardCondition) {
  const PerturbationSpec s;
  EXPECT_EQ(s.noise_std, 0.05);
  EXPECT_EQ(s.scene_count, 400u);
  EXPECT_EQ(s.outliers, 300u);
  EXPECT_EQ(s.incomplete_ratio, 0.3);
  EXPECT_EQ(s.rotation_deg, 60.0);
  EXPECT_EQ(s.translation, 0.3);
  EXPECT_NO_THROW(s.validate());
}

TEST(Perturb, OutOfRangeRejected) {
  for (auto mutate : std::vector<void (*)(PerturbationSpec&)>{
           [](PerturbationSpec& s) { s.noise_std = 0.11; }, [](PerturbationSpec& s) { s.scene_count = 99; },
           [](PerturbationSpec& s) { s.outliers = 601; }, [](PerturbationSpec& s) { s.incomplete_ratio = 0.71; },
           [](PerturbationSpec& s) { s.rotation_deg = -1; }, [](PerturbationSpec& s) { s.translation = 1.5; }}) {
    PerturbationSpec s;
    mutate(s);
    EXPECT_THROW(generate_pair(model(), s), std::out_of_range);
  }
}

TEST(Perturb, CleanSpecIsAResampling) {
  const LabeledPair p = generate_pair(model(), clean(300, 4));
  EXPECT_EQ(p.x_star.coeffs, Vector6d::Zero());
  ASSERT_EQ(p.scene.size(), 300u);
  EXPECT_EQ(p.inlier_count, 300u);
  for (std::size_t i = 0; i < 300; ++i) EXPECT_EQ(p.scene.point(i), model().point(p.source_index[i]));
}

TEST(Perturb, HalfTurnHasAnglePi) {
  PerturbationSpec s = clean(200, 5);
  s.rotation_deg = 180.0;
  const LabeledPair p = generate_pair(model(), s);
  EXPECT_NEAR(p.x_star.phi().norm(), std::numbers::pi, 1e-9);
}

TEST(Perturb, GroundTruthMapsSceneOntoModel) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PerturbationSpec s = clean(250, seed);
    s.rotation_deg = 17.0 * static_cast<double>(seed);
    s.translation = 0.1 * static_cast<double>(seed);
    const LabeledPair p = generate_pair(model(), s);
    const RigidTransform T = exp_se3(p.x_star);
    for (std::size_t i = 0; i < p.scene.size(); ++i)
      ASSERT_LT((T(p.scene.point(i)) - model().point(p.source_index[i])).norm(), 1e-9);
    EXPECT_LT((T.matrix() - p.T_gt.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Perturb, Deterministic) {
  const LabeledPair a = generate_pair(model(), PerturbationSpec{});
  const LabeledPair b = generate_pair(model(), PerturbationSpec{});
  EXPECT_EQ(a.scene.points(), b.scene.points());
  EXPECT_EQ(a.x_star, b.x_star);
  PerturbationSpec other;
  other.seed = 1;
  EXPECT_NE(generate_pair(model(), other).scene.points(), a.scene.points());
}

TEST(Perturb, IncompletenessRemovesABall) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PerturbationSpec s = clean(400, seed);
    const LabeledPair full = generate_pair(model(), s);
    s.incomplete_ratio = 0.3;
    const LabeledPair cut = generate_pair(model(), s);
    ASSERT_EQ(cut.scene.size(), 400u - 120u);

    // Removed = full multiset minus kept multiset.
    std::vector<std::size_t> kept = cut.source_index, all = full.source_index, removed;
    std::sort(kept.begin(), kept.end());
    std::sort(all.begin(), all.end());
    std::set_difference(all.begin(), all.end(), kept.begin(), kept.end(), std::back_inserter(removed));
    ASSERT_EQ(removed.size(), 120u);

    bool some_center_works = false;
    for (std::size_t c : all) {
      const Eigen::Vector3d center = model().point(c);
      double max_removed = 0, min_kept = 1e300;
      for (std::size_t r : removed) max_removed = std::max(max_removed, (model().point(r) - center).norm());
      for (std::size_t k : kept) min_kept = std::min(min_kept, (model().point(k) - center).norm());
      if (max_removed <= min_kept) {
        some_center_works = true;
        break;
      }
    }
    EXPECT_TRUE(some_center_works) << seed;
  }
}

TEST(Perturb, NoiseHasRequestedSpread) {
  PerturbationSpec s = clean(4000, 6);
  s.noise_std = 0.05;
  const LabeledPair p = generate_pair(model(), s);
  double ss = 0;
  for (std::size_t i = 0; i < p.scene.size(); ++i) ss += (p.scene.point(i) - model().point(p.source_index[i])).squaredNorm();
  EXPECT_NEAR(std::sqrt(ss / (3.0 * 4000)), 0.05, 0.002);
}

TEST(Perturb, SparseOutliersInsideScaledBox) {
  PerturbationSpec s = clean(400, 7);
  s.outliers = 600;
  const LabeledPair p = generate_pair(model(), s);
  ASSERT_EQ(p.scene.size(), 1000u);
  EXPECT_EQ(p.inlier_count, 400u);
  const Eigen::Matrix3Xd in = p.scene.points().leftCols(400);
  const Eigen::Vector3d lo = in.rowwise().minCoeff(), hi = in.rowwise().maxCoeff();
  const Eigen::Vector3d mid = 0.5 * (lo + hi), half = 0.75 * (hi - lo);
  for (Eigen::Index i = 400; i < 1000; ++i)
    for (int c = 0; c < 3; ++c) EXPECT_LE(std::abs(p.scene.points()(c, i) - mid[c]), half[c] + 1e-12);
}

TEST(Perturb, StructuredOutliersContainAPlanePatch) {
  PerturbationSpec s = clean(400, 8);
  s.outliers = 200;
  s.outlier_kind = OutlierKind::structured;
  const LabeledPair p = generate_pair(model(), s);
  const Eigen::Matrix3Xd patch = p.scene.points().middleCols(400, 100);
  const Eigen::Matrix3Xd centered = patch.colwise() - patch.rowwise().mean();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  EXPECT_LT(svd.singularValues()[2], 1e-10 * svd.singularValues()[0]);
}

TEST(Perturb, JsonRoundtrip) {
  PerturbationSpec s;
  s.noise_std = 0.1 / 3.0;
  s.outlier_kind = OutlierKind::structured;
  s.seed = 0xFFFFFFFFFFFFFFFFull;
  EXPECT_EQ(nlohmann::json(s).get<PerturbationSpec>(), s);
  EXPECT_THROW(parse_outlier_kind("dense"), std::invalid_argument);
}

TEST(Perturb, PairDirectoryRoundtrip) {
  const LabeledPair p = generate_pair(model(), PerturbationSpec{});
  const auto dir = std::filesystem::temp_directory_path() / "ido_unit" / "pair";
  std::filesystem::remove_all(dir);
  save_pair(dir, p);
  for (const char* f : {"scene.ply", "spec.json", "gt.json"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
  const LabeledPair q = load_pair(dir);
  EXPECT_EQ(q.scene.points(), p.scene.points());
  EXPECT_EQ(q.spec, p.spec);
  EXPECT_EQ(q.x_star, p.x_star);
  EXPECT_EQ(q.T_gt.rotation, p.T_gt.rotation);
  EXPECT_EQ(q.T_gt.translation, p.T_gt.translation);
  EXPECT_EQ(q.inlier_count, p.inlier_count);
}

TEST(TrainingSetGen, RangesAndDeterminism) {
  const auto a = generate_training_set(model(), 1, TrainingRanges{}, 42);
  const auto b = generate_training_set(model(), 1, TrainingRanges{}, 42);
  EXPECT_EQ(a.set.samples[0].scene.points(), b.set.samples[0].scene.points());
  EXPECT_EQ(a.set.samples[0].x_star, b.set.samples[0].x_star);

  const auto many = generate_training_set(model(), 50, TrainingRanges{}, 43);
  EXPECT_FALSE(many.outside_training_extents);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& s = many.specs[i];
    EXPECT_EQ(many.set.samples[i].x0, Twist::zero());
    EXPECT_LE(s.noise_std, 0.05);
    EXPECT_GE(s.scene_count, 400u);
    EXPECT_LE(s.scene_count, 800u);
    EXPECT_LE(s.outliers, 300u);
    EXPECT_LE(s.incomplete_ratio, 0.3);
    EXPECT_LE(s.rotation_deg, 90.0);
    EXPECT_LE(s.translation, 0.3);
  }
  EXPECT_NE(many.specs[0].rotation_deg, many.specs[1].rotation_deg);
}

TEST(TrainingSetGen, WideRangesFlagged) {
  TrainingRanges r;
  r.rotation_deg = {0.0, 180.0};
  EXPECT_TRUE(generate_training_set(model(), 2, r, 1).outside_training_extents);
  const TrainingRanges back = nlohmann::json(r).get<TrainingRanges>();
  EXPECT_EQ(back.rotation_deg.hi, 180.0);
}

TEST(Sweep, LevelsAndNames) {
  EXPECT_EQ(sweep_levels(Perturbation::rotation, 10).back(), 180.0);
  EXPECT_EQ(sweep_levels(Perturbation::noise, 4), (std::vector<double>{0.0, 0.1 / 3.0, 0.2 / 3.0, 0.1}));
  EXPECT_EQ(sweep_levels(Perturbation::scene_count, 4), (std::vector<double>{100, 1400, 2700, 4000}));
  for (Perturbation p : kAllPerturbations) EXPECT_EQ(parse_perturbation(to_string(p)), p);
  EXPECT_THROW(parse_perturbation("shear"), std::invalid_argument);
}

TEST(Sweep, CasesCarryTheirLevel) {
  std::vector<double> levels;
  for (int d = 0; d <= 180; d += 20) levels.push_back(d);
  const auto cases = generate_sweep(model(), Perturbation::rotation, levels, 2, 3);
  ASSERT_EQ(cases.size(), 20u);
  for (const auto& c : cases) {
    EXPECT_EQ(c.pair.spec.rotation_deg, levels[c.level_index]);
    EXPECT_EQ(c.level, levels[c.level_index]);
    EXPECT_EQ(c.pair.spec.noise_std, 0.05);
  }
  EXPECT_NE(cases[0].pair.spec.seed, cases[1].pair.spec.seed);
  EXPECT_TRUE(generate_sweep(model(), Perturbation::noise, {0.0, 0.1}, 0, 3).empty());
}
