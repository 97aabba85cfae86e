#include "ido/regressor.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "ido/error.hpp"

namespace ido {

namespace {

void check_ridge_inputs(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
  if (targets.rows() != features.rows()) throw std::invalid_argument("targets and features differ in sample count");
  if (targets.rows() == 0) throw std::invalid_argument("ridge regression needs at least one sample");
}

}  // namespace

Eigen::MatrixXd ridge_solve_exact(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features, double lambda) {
  check_ridge_inputs(targets, features, lambda);
  const auto f = features.cols();
  const double n = static_cast<double>(features.rows());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(f, f);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(features.transpose());
  gram.diagonal().array() += n * lambda;
  const Eigen::MatrixXd rhs = features.transpose() * targets;  // f x p
  Eigen::LLT<Eigen::MatrixXd> llt(gram.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) throw std::runtime_error("ridge system is not positive definite");
  return llt.solve(rhs).transpose();
}

Eigen::MatrixXd ridge_solve_averaged(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features, double lambda) {
  check_ridge_inputs(targets, features, lambda);
  const Eigen::VectorXd weight = (features.rowwise().squaredNorm().array() + lambda).inverse();
  const double n = static_cast<double>(features.rows());
  return (targets.transpose() * weight.asDiagonal() * features) / n;
}

std::string_view to_string(RidgeSolver solver) { return solver == RidgeSolver::exact ? "exact" : "averaged"; }

RidgeSolver parse_ridge_solver(std::string_view text) {
  if (text == "exact") return RidgeSolver::exact;
  if (text == "averaged") return RidgeSolver::averaged;
  throw std::invalid_argument("unknown solver '" + std::string(text) + "'");
}

void MapSequence::check_compatible(const ModelContext& ctx, bool force) const {
  if (mode != ctx.mode())
    throw MapMismatchError("maps were trained in " + std::string(to_string(mode)) + " mode, context is " +
                           std::string(to_string(ctx.mode())));
  if (model_size != ctx.model_size())
    throw MapMismatchError("maps expect " + std::to_string(model_size) + " model points, context has " +
                           std::to_string(ctx.model_size()));
  for (const auto& d : maps) {
    if (d.rows() != static_cast<Eigen::Index>(kParams) || d.cols() != static_cast<Eigen::Index>(ctx.feature_size()))
      throw MapMismatchError("map dimensions do not match the context feature size");
  }
  if (!force && fingerprint != ctx.fingerprint())
    throw MapMismatchError("model fingerprint differs from the one the maps were trained on");
}

namespace {

void record_errors(const TrainingSet& set, const std::vector<Twist>& x, TrainingTrace& trace) {
  const std::size_t n = set.samples.size();
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = (set.samples[i].x_star.coeffs - x[i].coeffs).norm();
    sum += e;
    sum_sq += e * e;
  }
  const double mean = sum / static_cast<double>(n);
  trace.mean_error.push_back(mean);
  trace.std_error.push_back(std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean)));
  trace.sum_squared_error.push_back(sum_sq);
}

}  // namespace

TrainingResult train(const ModelContext& ctx, const TrainingSet& set, const TrainingOptions& options) {
  if (options.maps < 1) throw std::invalid_argument("need at least one map");
  if (!(options.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const std::size_t n = set.samples.size();
  if (n == 0) throw std::invalid_argument("training set is empty");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = set.samples[i];
    if (s.scene.empty()) throw TrainingError(i, 0, "empty scene");
    if (!s.x0.coeffs.allFinite() || !s.x_star.coeffs.allFinite()) throw TrainingError(i, 0, "non-finite twist");
  }

  const auto f = static_cast<Eigen::Index>(ctx.feature_size());
  constexpr auto p = static_cast<Eigen::Index>(MapSequence::kParams);

  TrainingResult result;
  result.maps.mode = ctx.mode();
  result.maps.lambda = options.lambda;
  result.maps.sigma2 = ctx.sigma2();
  result.maps.model_size = ctx.model_size();
  result.maps.fingerprint = ctx.fingerprint();

  std::vector<Twist> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = set.samples[i].x0;
  record_errors(set, x, result.trace);

  Eigen::MatrixXd features(static_cast<Eigen::Index>(n), f);
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(n), p);
  for (std::size_t k = 0; k < options.maps; ++k) {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
      for (std::size_t i = r.begin(); i != r.end(); ++i)
        features.row(static_cast<Eigen::Index>(i)) = ctx.evaluate(set.samples[i].scene, x[i]).transpose();
    });
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      if (!features.row(row).allFinite()) throw TrainingError(i, k, "non-finite feature");
      // D h should approximate x_k - x*, so that x - D h moves toward x*.
      targets.row(row) = (x[i].coeffs - set.samples[i].x_star.coeffs).transpose();
      if (!targets.row(row).allFinite()) throw TrainingError(i, k, "non-finite residual");
    }

    Eigen::MatrixXd D = options.solver == RidgeSolver::exact ? ridge_solve_exact(targets, features, options.lambda)
                                                             : ridge_solve_averaged(targets, features, options.lambda);
    const Eigen::MatrixXd step = features * D.transpose();  // N x p
    for (std::size_t i = 0; i < n; ++i) x[i].coeffs -= step.row(static_cast<Eigen::Index>(i)).transpose();
    result.maps.maps.push_back(std::move(D));
    record_errors(set, x, result.trace);
  }
  result.final_estimates = std::move(x);
  return result;
}

void write_training_trace(std::ostream& out, const TrainingTrace& trace) {
  const auto old = out.precision(17);
  out << "iteration,mean_error,std_error,sum_squared_error\n";
  for (std::size_t k = 0; k < trace.mean_error.size(); ++k)
    out << k << ',' << trace.mean_error[k] << ',' << trace.std_error[k] << ',' << trace.sum_squared_error[k] << '\n';
  out.precision(old);
}

}  // namespace ido
