#include <sstream>

#include <gtest/gtest.h>

#include "ido/error.hpp"
#include "ido/perturb.hpp"
#include "ido/random.hpp"
#include "ido/regressor.hpp"
#include "ido/shapes.hpp"
#include "oracles.hpp"

using namespace ido;

namespace {

Eigen::MatrixXd gaussian_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols, double sd) {
  CounterRng rng(seed, 0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sd * rng.normal();
  return m;
}

}  // namespace

TEST(Ridge, ZeroTargetsGiveZeroMap) {
  const Eigen::MatrixXd H = gaussian_matrix(1, 20, 8, 1.0);
  EXPECT_EQ(ridge_solve_exact(Eigen::MatrixXd::Zero(20, 6), H, 0.0002), Eigen::MatrixXd::Zero(6, 8));
  EXPECT_EQ(ridge_solve_averaged(Eigen::MatrixXd::Zero(20, 6), H, 0.0002), Eigen::MatrixXd::Zero(6, 8));
}

TEST(Ridge, HugeLambdaShrinksToZero) {
  const Eigen::MatrixXd H = gaussian_matrix(2, 30, 10, 1.0), R = gaussian_matrix(3, 30, 6, 1.0);
  EXPECT_LT(ridge_solve_exact(R, H, 1e9).norm(), 1e-6);
}

TEST(Ridge, NonPositiveLambdaRejected) {
  const Eigen::MatrixXd H = gaussian_matrix(4, 5, 3, 1.0), R = gaussian_matrix(5, 5, 6, 1.0);
  EXPECT_THROW(ridge_solve_exact(R, H, 0.0), std::invalid_argument);
  EXPECT_THROW(ridge_solve_averaged(R, H, -1.0), std::invalid_argument);
}

TEST(Ridge, MatchesGradientDescent) {
  const Eigen::MatrixXd H = gaussian_matrix(6, 50, 40, 3.0), R = gaussian_matrix(7, 50, 6, 1.0);
  const Eigen::MatrixXd exact = ridge_solve_exact(R, H, 0.0002);
  const Eigen::MatrixXd gd = oracle::ridge_gradient_descent(R, H, 0.0002, 100000, 1e-3);
  EXPECT_LT((exact - gd).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Ridge, NormalEquationResidual) {
  const Eigen::MatrixXd H = gaussian_matrix(8, 200, 60, 0.05), R = gaussian_matrix(9, 200, 6, 1.0);
  const double lambda = 0.0002;
  const Eigen::MatrixXd D = ridge_solve_exact(R, H, lambda);
  const Eigen::MatrixXd A = H.transpose() * H + 200 * lambda * Eigen::MatrixXd::Identity(60, 60);
  const Eigen::MatrixXd RtH = R.transpose() * H;
  EXPECT_LT((D * A - RtH).norm() / RtH.norm(), 1e-10);
}

TEST(Ridge, AveragedFormulaSingleSample) {
  const Eigen::MatrixXd H = gaussian_matrix(10, 1, 12, 1.0), R = gaussian_matrix(11, 1, 6, 1.0);
  const double lambda = 0.0002;
  const Eigen::MatrixXd expected = R.transpose() * H / (lambda + H.squaredNorm());
  EXPECT_LT((ridge_solve_averaged(R, H, lambda) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ridge, AveragedFormulaIsAPerSampleAverage) {
  const Eigen::MatrixXd H = gaussian_matrix(12, 4, 5, 1.0), R = gaussian_matrix(13, 4, 6, 1.0);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 5);
  for (int i = 0; i < 4; ++i)
    expected += R.row(i).transpose() * H.row(i) / (0.1 + H.row(i).squaredNorm());
  expected /= 4.0;
  EXPECT_LT((ridge_solve_averaged(R, H, 0.1) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ridge, SolverNames) {
  EXPECT_EQ(parse_ridge_solver("exact"), RidgeSolver::exact);
  EXPECT_EQ(parse_ridge_solver("averaged"), RidgeSolver::averaged);
  EXPECT_THROW(parse_ridge_solver("sgd"), std::invalid_argument);
}

class TrainingFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new PointCloud(synthetic_model("bunny", 48, 1));
    ctx_ = new ModelContext(ModelContext::build(*model_, 0.03, DescriptorMode::improved));
  }
  static void TearDownTestSuite() {
    delete ctx_;
    delete model_;
  }
  static PointCloud* model_;
  static ModelContext* ctx_;
};

PointCloud* TrainingFixture::model_ = nullptr;
ModelContext* TrainingFixture::ctx_ = nullptr;

TEST_F(TrainingFixture, AlreadyAlignedSampleLearnsZeroMap) {
  TrainingSet set;
  set.samples.push_back({Twist::zero(), Twist::zero(), *model_});
  const TrainingResult r = train(*ctx_, set, {1, 0.0002, RidgeSolver::exact});
  ASSERT_EQ(r.maps.size(), 1u);
  EXPECT_EQ(r.maps.maps[0], Eigen::MatrixXd::Zero(6, static_cast<Eigen::Index>(ctx_->feature_size())));
  EXPECT_EQ(r.trace.mean_error, (std::vector<double>{0.0, 0.0}));
}

TEST_F(TrainingFixture, SingleSampleUpdateMovesTowardGroundTruth) {
  // Sign check: one step of the learned map must land (almost) on x*.
  LabeledPair pair = generate_pair(*model_, PerturbationSpec{0.0, 200, 0, 0.0, 20.0, 0.1, OutlierKind::sparse, 3});
  TrainingSet set;
  set.samples.push_back({Twist::zero(), pair.x_star, pair.scene});
  const TrainingResult r = train(*ctx_, set, {1, 1e-9, RidgeSolver::exact});
  EXPECT_LT((r.final_estimates[0].coeffs - pair.x_star.coeffs).norm(), 1e-3 * pair.x_star.coeffs.norm());
  EXPECT_LT(r.trace.mean_error[1], r.trace.mean_error[0]);
}

TEST_F(TrainingFixture, StrictDecreaseAndDeterminism) {
  const auto data = generate_training_set(*model_, 60, TrainingRanges{}, 5);
  const TrainingResult a = train(*ctx_, data.set, {5, 0.0002, RidgeSolver::exact});
  const TrainingResult b = train(*ctx_, data.set, {5, 0.0002, RidgeSolver::exact});
  ASSERT_EQ(a.trace.sum_squared_error.size(), 6u);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_LT(a.trace.sum_squared_error[k], a.trace.sum_squared_error[k - 1]);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(a.maps.maps[k], b.maps.maps[k]);
  EXPECT_EQ(a.maps.fingerprint, ctx_->fingerprint());
  EXPECT_EQ(a.maps.feature_size(), ctx_->feature_size());
}

TEST_F(TrainingFixture, RejectsBadInput) {
  TrainingSet set;
  EXPECT_THROW(train(*ctx_, set, {}), std::invalid_argument);
  set.samples.push_back({Twist::zero(), Twist::zero(), *model_});
  EXPECT_THROW(train(*ctx_, set, {0, 0.0002, RidgeSolver::exact}), std::invalid_argument);
  set.samples.push_back({Twist::zero(), Twist(Vector6d::Constant(std::nan(""))), *model_});
  try {
    train(*ctx_, set, {1, 0.0002, RidgeSolver::exact});
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.sample(), 1u);
  }
}

TEST_F(TrainingFixture, TraceCsv) {
  TrainingTrace t{{1.0, 0.5}, {0.1, 0.05}, {4.0, 1.0}};
  std::ostringstream out;
  write_training_trace(out, t);
  EXPECT_EQ(out.str(), "iteration,mean_error,std_error,sum_squared_error\n0,1,0.10000000000000001,4\n1,0.5,0.050000000000000003,1\n");
}

TEST_F(TrainingFixture, MapFileRoundtrip) {
  const auto data = generate_training_set(*model_, 10, TrainingRanges{}, 6);
  const MapSequence maps = train(*ctx_, data.set, {3, 0.0002, RidgeSolver::exact}).maps;
  std::stringstream buf;
  write_maps(buf, maps);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "IDO1");
  EXPECT_EQ(bytes.size(), 4 + 4 + 1 + 4 * 4 + 8 + 8 + 32 + 3 * 6 * ctx_->feature_size() * 8);
  const MapSequence back = read_maps(buf);
  EXPECT_EQ(back.mode, maps.mode);
  EXPECT_EQ(back.lambda, maps.lambda);
  EXPECT_EQ(back.sigma2, maps.sigma2);
  EXPECT_EQ(back.model_size, maps.model_size);
  EXPECT_EQ(back.fingerprint, maps.fingerprint);
  ASSERT_EQ(back.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(back.maps[k], maps.maps[k]);
  back.check_compatible(*ctx_);
}

TEST_F(TrainingFixture, MapFileRejectsCorruption) {
  const auto data = generate_training_set(*model_, 5, TrainingRanges{}, 7);
  const MapSequence maps = train(*ctx_, data.set, {1, 0.0002, RidgeSolver::exact}).maps;
  std::stringstream buf;
  write_maps(buf, maps);
  std::string bytes = buf.str();

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream in1(bad_magic);
  EXPECT_THROW(read_maps(in1), ParseError);

  std::istringstream in2(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_maps(in2), ParseError);

  std::string bad_mode = bytes;
  bad_mode[8] = 7;
  std::istringstream in3(bad_mode);
  EXPECT_THROW(read_maps(in3), ParseError);
}

TEST_F(TrainingFixture, FingerprintMismatchNeedsForce) {
  const auto data = generate_training_set(*model_, 5, TrainingRanges{}, 8);
  MapSequence maps = train(*ctx_, data.set, {1, 0.0002, RidgeSolver::exact}).maps;
  maps.fingerprint[0] ^= 1;
  EXPECT_THROW(maps.check_compatible(*ctx_), MapMismatchError);
  EXPECT_NO_THROW(maps.check_compatible(*ctx_, true));
  const auto original = ctx_->with_mode(DescriptorMode::original);
  EXPECT_THROW(maps.check_compatible(original, true), MapMismatchError);
}
