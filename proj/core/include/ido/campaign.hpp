#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ido/descriptor.hpp"
#include "ido/metrics.hpp"
#include "ido/perturb.hpp"
#include "ido/registrar.hpp"
#include "ido/regressor.hpp"

namespace ido {

enum class Algorithm { improved_do, original_do, icp };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::improved_do, Algorithm::original_do, Algorithm::icp};

/// "improved-do", "original-do", "icp".
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct SweepConfig {
  Perturbation perturbation = Perturbation::noise;
  std::vector<double> levels;
  std::size_t per_level = 20;
};

struct CampaignConfig {
  std::vector<SweepConfig> sweeps;
  std::vector<Algorithm> algorithms{std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};
  PerturbationSpec base;  // fields not being swept
  std::uint64_t seed = 0;
  double t_pt = 0.1;
  DoOptions do_options;
  IcpOptions icp_options{1000, 1e-10};
  MetricPoints metric_points = MetricPoints::inliers;
  bool force = false;                  // accept maps trained on a different model
  std::filesystem::path output_dir;    // empty: keep results in memory only
  std::filesystem::path data_dir;      // set: read pairs written by write_sweep_pairs instead of generating
};

struct CaseResult {
  std::size_t case_id = 0;  // index within the sweep
  std::size_t level_index = 0;
  double level = 0.0;
  double point_acc = 0.0;
  double point_rmse = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
};

struct LevelSummary {
  double level = 0.0;
  std::size_t cases = 0;
  double acc_mean = 0.0, acc_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double iterations_mean = 0.0, iterations_std = 0.0;
};

struct MetricReport {
  Algorithm algorithm = Algorithm::improved_do;
  Perturbation perturbation = Perturbation::noise;
  std::vector<CaseResult> cases;    // empty when loaded from a level file
  std::vector<LevelSummary> levels;
};

struct DoVariant {
  const ModelContext* ctx = nullptr;
  const MapSequence* maps = nullptr;
};

struct CampaignInputs {
  PointCloud model;  // normalized
  std::optional<DoVariant> improved;
  std::optional<DoVariant> original;
};

/// Mean and sample standard deviation per level, in level order.
std::vector<LevelSummary> summarize_levels(const std::vector<CaseResult>& cases);

/// Runs every algorithm on every sweep. Cases run concurrently; results are
/// stored by index so output does not depend on the worker count. With an
/// output_dir, writes <dir>/<algorithm>/<perturbation>_cases.csv and
/// <perturbation>_levels.csv. Progress and the runtime estimate go to `log`.
std::vector<MetricReport> run_campaign(const CampaignConfig& config, const CampaignInputs& inputs,
                                       std::ostream* log = nullptr);

void write_cases_csv(std::ostream& out, Algorithm algorithm, const std::vector<CaseResult>& cases);
void write_levels_csv(std::ostream& out, Algorithm algorithm, const std::vector<LevelSummary>& levels);
std::vector<LevelSummary> read_levels_csv(const std::filesystem::path& path);

/// Loads every <algorithm>/<perturbation>_levels.csv under `dir`.
std::vector<MetricReport> load_reports(const std::filesystem::path& dir);

/// Per-perturbation averages across levels, one column per algorithm.
struct SummaryTable {
  std::vector<Algorithm> algorithms;
  std::vector<Perturbation> rows;
  std::vector<std::vector<double>> acc;   // [row][algorithm]
  std::vector<std::vector<double>> rmse;  // [row][algorithm]

  /// NaN when the cell has no data.
  double acc_of(Perturbation p, Algorithm a) const;
  double rmse_of(Perturbation p, Algorithm a) const;
};

SummaryTable summarize(const std::vector<MetricReport>& reports);
void write_summary_csv(std::ostream& out, const SummaryTable& table);
void write_summary_text(std::ostream& out, const SummaryTable& table);

/// Writes <dir>/<perturbation>/l<level>_c<case>/ for every case of the sweep.
void write_sweep_pairs(const std::filesystem::path& dir, Perturbation p, const std::vector<SweepCase>& cases);
/// Reads back what write_sweep_pairs wrote for `sweep`.
std::vector<SweepCase> read_sweep_pairs(const std::filesystem::path& dir, const SweepConfig& sweep);

// --- experiment configuration ---------------------------------------------------------

struct ModelConfig {
  std::string shape = "bunny";
  std::filesystem::path input;  // PLY/CSV to downsample instead of a synthetic shape
  std::size_t points = 128;
};

struct TrainingConfig {
  std::size_t samples = 500;
  TrainingRanges ranges;
  TrainingOptions options{10, 0.0002, RidgeSolver::exact};
  double sigma2 = 0.03;
};

/// One JSON file with sections model, training, sweeps, algorithms,
/// output_dir and seed.
struct ExperimentConfig {
  ModelConfig model;
  TrainingConfig training;
  CampaignConfig campaign;
  std::size_t levels_per_sweep = 4;
  std::map<Algorithm, std::filesystem::path> maps;  // explicit map files
  std::filesystem::path output_dir = "ido_out";
  std::uint64_t seed = 0;

  /// Map file of a DO algorithm: the explicit path or <output_dir>/maps_<alg>.ido1.
  std::filesystem::path maps_path(Algorithm a) const;
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace ido
