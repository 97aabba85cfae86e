#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ido/descriptor.hpp"
#include "ido/lie.hpp"
#include "ido/point_cloud.hpp"

namespace ido {

/// Fits D (p x f) so that D h_i approximates r_i, minimizing
///   (1/N) sum_i |r_i - D h_i|^2 + lambda |D|_F^2.
/// Solves D (H^T H + N lambda I) = R^T H with a Cholesky factorization.
/// `targets` is N x p, `features` is N x f.
Eigen::MatrixXd ridge_solve_exact(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features, double lambda);

/// Average of per-sample rank-one ridge solutions:
///   D = (1/N) sum_i r_i h_i^T / (lambda + h_i^T h_i).
/// Not the minimizer of the objective above when N > 1.
Eigen::MatrixXd ridge_solve_averaged(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& features, double lambda);

enum class RidgeSolver { exact, averaged };
std::string_view to_string(RidgeSolver solver);
RidgeSolver parse_ridge_solver(std::string_view text);

struct TrainingSample {
  Twist x0;
  Twist x_star;
  PointCloud scene;
};

struct TrainingSet {
  std::vector<TrainingSample> samples;
};

/// Learned update maps D_1..D_K plus the settings that produced them.
struct MapSequence {
  static constexpr std::size_t kParams = 6;

  DescriptorMode mode = DescriptorMode::improved;
  double lambda = 0.0;
  double sigma2 = 0.0;
  std::size_t model_size = 0;
  Fingerprint fingerprint{};
  std::vector<Eigen::MatrixXd> maps;  // each kParams x feature_size()

  std::size_t size() const noexcept { return maps.size(); }
  std::size_t feature_size() const noexcept { return ModelContext::feature_size_for(mode, model_size); }

  /// Throws MapMismatchError when mode or dimensions disagree with `ctx`,
  /// or when the fingerprint differs and `force` is false.
  void check_compatible(const ModelContext& ctx, bool force = false) const;
};

struct TrainingOptions {
  std::size_t maps = 30;
  double lambda = 0.0002;
  RidgeSolver solver = RidgeSolver::exact;
};

/// Per-iteration statistics of |x*_i - x_k_i|_2; entry 0 is before the first map.
struct TrainingTrace {
  std::vector<double> mean_error;
  std::vector<double> std_error;
  std::vector<double> sum_squared_error;
};

struct TrainingResult {
  MapSequence maps;
  TrainingTrace trace;
  std::vector<Twist> final_estimates;
};

/// Learns the map sequence: for k = 0..K-1 fit D_{k+1} on the current
/// estimates, then move every estimate by x := x - D_{k+1} h(x).
/// Features are extracted in parallel; results do not depend on the number
/// of worker threads.
TrainingResult train(const ModelContext& ctx, const TrainingSet& set, const TrainingOptions& options);

/// Writes the trace as CSV: iteration,mean_error,std_error,sum_squared_error.
void write_training_trace(std::ostream& out, const TrainingTrace& trace);

// --- IDO1 map files ------------------------------------------------------------

void write_maps(std::ostream& out, const MapSequence& maps);
MapSequence read_maps(std::istream& in);
void save_maps(const std::filesystem::path& path, const MapSequence& maps);
MapSequence load_maps(const std::filesystem::path& path);

}  // namespace ido
