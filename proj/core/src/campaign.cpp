#include "ido/campaign.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <tbb/blocked_range.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>

#include "ido/error.hpp"
#include "ido/random.hpp"

namespace ido {

namespace {

// Shortest round-trip text; independent of locale.
std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string num(std::size_t v) { return std::to_string(v); }

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

struct Registered {
  RigidTransform T;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
};

Registered run_one(Algorithm a, const CampaignConfig& config, const CampaignInputs& inputs, const PointCloud& scene) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  RegistrationResult r;
  if (a == Algorithm::icp) {
    r = register_icp(inputs.model, scene, Twist{}, config.icp_options);
  } else {
    const DoVariant& v = a == Algorithm::improved_do ? *inputs.improved : *inputs.original;
    r = register_do(*v.ctx, *v.maps, scene, Twist{}, config.do_options);
  }
  const auto stop = clock::now();
  return {r.T_final, r.iterations, std::chrono::duration<double, std::milli>(stop - start).count()};
}

void check_inputs(const CampaignConfig& config, const CampaignInputs& inputs) {
  for (Algorithm a : config.algorithms) {
    if (a == Algorithm::icp) continue;
    const auto& v = a == Algorithm::improved_do ? inputs.improved : inputs.original;
    if (!v || !v->ctx || !v->maps)
      throw MapMismatchError("no trained maps for " + std::string(to_string(a)));
    const DescriptorMode want = a == Algorithm::improved_do ? DescriptorMode::improved : DescriptorMode::original;
    if (v->ctx->mode() != want || v->maps->mode != want)
      throw MapMismatchError(std::string(to_string(a)) + " needs " + std::string(to_string(want)) + " maps");
    v->maps->check_compatible(*v->ctx, config.force);
  }
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::improved_do: return "improved-do";
    case Algorithm::original_do: return "original-do";
    case Algorithm::icp: return "icp";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view t) {
  if (t == "improved-do" || t == "improved") return Algorithm::improved_do;
  if (t == "original-do" || t == "original" || t == "do") return Algorithm::original_do;
  if (t == "icp") return Algorithm::icp;
  throw std::invalid_argument("unknown algorithm '" + std::string(t) + "'");
}

std::vector<LevelSummary> summarize_levels(const std::vector<CaseResult>& cases) {
  std::map<std::size_t, std::vector<const CaseResult*>> by_level;
  for (const auto& c : cases) by_level[c.level_index].push_back(&c);
  std::vector<LevelSummary> out;
  for (const auto& [index, rows] : by_level) {
    LevelSummary s;
    s.level = rows.front()->level;
    s.cases = rows.size();
    std::vector<double> acc, rmse, iters;
    for (const auto* r : rows) {
      acc.push_back(r->point_acc);
      rmse.push_back(r->point_rmse);
      iters.push_back(static_cast<double>(r->iterations));
    }
    mean_std(acc, s.acc_mean, s.acc_std);
    mean_std(rmse, s.rmse_mean, s.rmse_std);
    mean_std(iters, s.iterations_mean, s.iterations_std);
    out.push_back(s);
  }
  return out;
}

std::vector<MetricReport> run_campaign(const CampaignConfig& config, const CampaignInputs& inputs, std::ostream* log) {
  std::vector<MetricReport> reports;
  if (config.sweeps.empty() || config.algorithms.empty()) return reports;
  check_inputs(config, inputs);

  std::size_t total_cases = 0;
  for (const auto& s : config.sweeps) total_cases += s.levels.size() * s.per_level;
  if (log) {
    // Calibrate on one default pair per algorithm.
    PerturbationSpec probe = config.base;
    probe.seed = derive_seed(config.seed, 0xCA11B);
    const LabeledPair pair = generate_pair(inputs.model, probe);
    double per_case_ms = 0.0;
    for (Algorithm a : config.algorithms) per_case_ms += run_one(a, config, inputs, pair.scene).wall_ms;
    const double workers = std::max(1, tbb::info::default_concurrency());
    const double seconds = per_case_ms * static_cast<double>(total_cases) / workers / 1000.0;
    *log << "campaign: " << total_cases << " pairs x " << config.algorithms.size() << " algorithms, estimated "
         << std::llround(seconds) << " s on " << workers << " worker(s)\n";
  }

  for (const auto& sweep : config.sweeps) {
    const std::vector<SweepCase> cases =
        config.data_dir.empty()
            ? generate_sweep(inputs.model, sweep.perturbation, sweep.levels, sweep.per_level, config.seed, config.base)
            : read_sweep_pairs(config.data_dir, sweep);
    for (Algorithm a : config.algorithms) {
      MetricReport report;
      report.algorithm = a;
      report.perturbation = sweep.perturbation;
      report.cases.resize(cases.size());
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, cases.size()), [&](const tbb::blocked_range<std::size_t>& r) {
        for (std::size_t i = r.begin(); i != r.end(); ++i) {
          const SweepCase& sc = cases[i];
          const Registered reg = run_one(a, config, inputs, sc.pair.scene);
          const PairMetrics m = evaluate_pair(sc.pair, reg.T, config.metric_points, config.t_pt);
          report.cases[i] = CaseResult{i, sc.level_index, sc.level, m.point_acc, m.point_rmse, reg.iterations, reg.wall_ms};
        }
      });
      report.levels = summarize_levels(report.cases);
      if (!config.output_dir.empty()) {
        const auto dir = config.output_dir / std::string(to_string(a));
        const std::string stem(to_string(sweep.perturbation));
        auto cases_out = open_out(dir / (stem + "_cases.csv"));
        write_cases_csv(cases_out, a, report.cases);
        auto levels_out = open_out(dir / (stem + "_levels.csv"));
        write_levels_csv(levels_out, a, report.levels);
      }
      if (log) {
        double acc = 0.0;
        for (const auto& l : report.levels) acc += l.acc_mean;
        *log << "  " << to_string(a) << " / " << to_string(sweep.perturbation) << ": mean PointAcc "
             << (report.levels.empty() ? 0.0 : acc / static_cast<double>(report.levels.size())) << '\n';
      }
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

void write_cases_csv(std::ostream& out, Algorithm algorithm, const std::vector<CaseResult>& cases) {
  out << "case_id,level,algorithm,point_acc,point_rmse,iterations,wall_ms\n";
  for (const auto& c : cases)
    out << c.case_id << ',' << num(c.level) << ',' << to_string(algorithm) << ',' << num(c.point_acc) << ','
        << num(c.point_rmse) << ',' << c.iterations << ',' << num(c.wall_ms) << '\n';
}

void write_levels_csv(std::ostream& out, Algorithm algorithm, const std::vector<LevelSummary>& levels) {
  out << "level,algorithm,cases,point_acc_mean,point_acc_std,point_rmse_mean,point_rmse_std,iterations_mean,"
         "iterations_std\n";
  for (const auto& l : levels)
    out << num(l.level) << ',' << to_string(algorithm) << ',' << num(l.cases) << ',' << num(l.acc_mean) << ','
        << num(l.acc_std) << ',' << num(l.rmse_mean) << ',' << num(l.rmse_std) << ',' << num(l.iterations_mean) << ','
        << num(l.iterations_std) << '\n';
}

std::vector<LevelSummary> read_levels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<LevelSummary> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 9) throw ParseError(path.string(), lineno, "expected 9 columns");
    try {
      LevelSummary l;
      l.level = std::stod(cells[0]);
      l.cases = std::stoul(cells[2]);
      l.acc_mean = std::stod(cells[3]);
      l.acc_std = std::stod(cells[4]);
      l.rmse_mean = std::stod(cells[5]);
      l.rmse_std = std::stod(cells[6]);
      l.iterations_mean = std::stod(cells[7]);
      l.iterations_std = std::stod(cells[8]);
      out.push_back(l);
    } catch (const std::logic_error& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

std::vector<MetricReport> load_reports(const std::filesystem::path& dir) {
  std::vector<MetricReport> out;
  for (Algorithm a : kAllAlgorithms) {
    for (Perturbation p : kAllPerturbations) {
      const auto path = dir / std::string(to_string(a)) / (std::string(to_string(p)) + "_levels.csv");
      if (!std::filesystem::exists(path)) continue;
      MetricReport r;
      r.algorithm = a;
      r.perturbation = p;
      r.levels = read_levels_csv(path);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// --- summary table ---------------------------------------------------------------------

namespace {

double cell(const SummaryTable& t, const std::vector<std::vector<double>>& grid, Perturbation p, Algorithm a) {
  const auto r = std::find(t.rows.begin(), t.rows.end(), p);
  const auto c = std::find(t.algorithms.begin(), t.algorithms.end(), a);
  if (r == t.rows.end() || c == t.algorithms.end()) return std::numeric_limits<double>::quiet_NaN();
  return grid[static_cast<std::size_t>(r - t.rows.begin())][static_cast<std::size_t>(c - t.algorithms.begin())];
}

}  // namespace

double SummaryTable::acc_of(Perturbation p, Algorithm a) const { return cell(*this, acc, p, a); }
double SummaryTable::rmse_of(Perturbation p, Algorithm a) const { return cell(*this, rmse, p, a); }

SummaryTable summarize(const std::vector<MetricReport>& reports) {
  SummaryTable t;
  for (Algorithm a : kAllAlgorithms)
    if (std::any_of(reports.begin(), reports.end(), [&](const MetricReport& r) { return r.algorithm == a; }))
      t.algorithms.push_back(a);
  for (Perturbation p : kAllPerturbations)
    if (std::any_of(reports.begin(), reports.end(), [&](const MetricReport& r) { return r.perturbation == p; }))
      t.rows.push_back(p);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  t.acc.assign(t.rows.size(), std::vector<double>(t.algorithms.size(), nan));
  t.rmse = t.acc;
  for (const auto& r : reports) {
    if (r.levels.empty()) continue;
    double acc = 0.0, rmse = 0.0;
    for (const auto& l : r.levels) {
      acc += l.acc_mean;
      rmse += l.rmse_mean;
    }
    const auto row = static_cast<std::size_t>(std::find(t.rows.begin(), t.rows.end(), r.perturbation) - t.rows.begin());
    const auto col =
        static_cast<std::size_t>(std::find(t.algorithms.begin(), t.algorithms.end(), r.algorithm) - t.algorithms.begin());
    t.acc[row][col] = acc / static_cast<double>(r.levels.size());
    t.rmse[row][col] = rmse / static_cast<double>(r.levels.size());
  }
  return t;
}

void write_summary_csv(std::ostream& out, const SummaryTable& t) {
  out << "perturbation";
  for (Algorithm a : t.algorithms) out << ',' << to_string(a) << "_point_acc";
  for (Algorithm a : t.algorithms) out << ',' << to_string(a) << "_point_rmse";
  out << '\n';
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out << to_string(t.rows[r]);
    for (double v : t.acc[r]) out << ',' << num(v);
    for (double v : t.rmse[r]) out << ',' << num(v);
    out << '\n';
  }
}

void write_summary_text(std::ostream& out, const SummaryTable& t) {
  auto table = [&](const char* title, const std::vector<std::vector<double>>& grid) {
    out << title << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-12s", "");
    out << buf;
    for (Algorithm a : t.algorithms) {
      std::snprintf(buf, sizeof buf, " %12s", std::string(to_string(a)).c_str());
      out << buf;
    }
    out << '\n';
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      std::snprintf(buf, sizeof buf, "%-12s", std::string(to_string(t.rows[r])).c_str());
      out << buf;
      for (double v : grid[r]) {
        std::snprintf(buf, sizeof buf, " %12.3f", v);
        out << buf;
      }
      out << '\n';
    }
  };
  table("Average PointAcc", t.acc);
  out << '\n';
  table("Average PointRMSE", t.rmse);
}

// --- pair directories --------------------------------------------------------------------

namespace {

std::filesystem::path case_dir(const std::filesystem::path& dir, Perturbation p, std::size_t level, std::size_t c) {
  return dir / std::string(to_string(p)) / ("l" + std::to_string(level) + "_c" + std::to_string(c));
}

}  // namespace

void write_sweep_pairs(const std::filesystem::path& dir, Perturbation p, const std::vector<SweepCase>& cases) {
  for (const auto& sc : cases) save_pair(case_dir(dir, p, sc.level_index, sc.case_index), sc.pair);
}

std::vector<SweepCase> read_sweep_pairs(const std::filesystem::path& dir, const SweepConfig& sweep) {
  std::vector<SweepCase> out;
  for (std::size_t l = 0; l < sweep.levels.size(); ++l) {
    for (std::size_t c = 0; c < sweep.per_level; ++c) {
      const auto path = case_dir(dir, sweep.perturbation, l, c);
      if (!std::filesystem::is_directory(path)) throw Error("missing pair directory " + path.string());
      SweepCase sc;
      sc.level_index = l;
      sc.level = sweep.levels[l];
      sc.case_index = c;
      sc.pair = load_pair(path);
      out.push_back(std::move(sc));
    }
  }
  return out;
}

// --- experiment configuration ---------------------------------------------------------------

std::filesystem::path ExperimentConfig::maps_path(Algorithm a) const {
  if (auto it = maps.find(a); it != maps.end()) return it->second;
  return output_dir / ("maps_" + std::string(to_string(a)) + ".ido1");
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.seed = j.value("seed", std::uint64_t{0});
  c.output_dir = j.value("output_dir", c.output_dir.string());

  if (j.contains("model")) {
    const auto& m = j["model"];
    c.model.shape = m.value("shape", c.model.shape);
    c.model.input = m.value("input", std::string());
    c.model.points = m.value("points", c.model.points);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    c.training.samples = t.value("samples", c.training.samples);
    c.training.options.maps = t.value("maps", c.training.options.maps);
    c.training.options.lambda = t.value("lambda", c.training.options.lambda);
    c.training.sigma2 = t.value("sigma2", c.training.sigma2);
    if (t.contains("solver")) c.training.options.solver = parse_ridge_solver(t["solver"].get<std::string>());
    if (t.contains("ranges")) c.training.ranges = t["ranges"].get<TrainingRanges>();
  }

  auto& cp = c.campaign;
  std::vector<nlohmann::json> sweep_entries;
  std::size_t per_level = 20;
  if (j.contains("sweeps")) {
    const auto& s = j["sweeps"];
    c.levels_per_sweep = s.value("levels", c.levels_per_sweep);
    per_level = s.value("per_level", per_level);
    if (s.contains("base")) cp.base = s["base"].get<PerturbationSpec>();
    cp.t_pt = s.value("t_pt", cp.t_pt);
    cp.do_options.max_iterations = s.value("max_iterations", cp.do_options.max_iterations);
    cp.icp_options.max_iterations = s.value("icp_max_iterations", cp.icp_options.max_iterations);
    cp.do_options.epsilon = s.value("epsilon", cp.do_options.epsilon);
    if (s.contains("metric_points")) cp.metric_points = parse_metric_points(s["metric_points"].get<std::string>());
    cp.data_dir = s.value("data_dir", std::string());
    if (s.contains("perturbations"))
      for (const auto& e : s["perturbations"]) sweep_entries.push_back(e);
    else
      for (Perturbation p : kAllPerturbations) sweep_entries.emplace_back(std::string(to_string(p)));
  }
  for (const auto& e : sweep_entries) {
    SweepConfig sc;
    sc.per_level = per_level;
    if (e.is_string()) {
      sc.perturbation = parse_perturbation(e.get<std::string>());
      sc.levels = sweep_levels(sc.perturbation, c.levels_per_sweep);
    } else {
      sc.perturbation = parse_perturbation(e.at("name").get<std::string>());
      sc.per_level = e.value("per_level", per_level);
      sc.levels = e.contains("levels") ? e["levels"].get<std::vector<double>>()
                                       : sweep_levels(sc.perturbation, c.levels_per_sweep);
    }
    cp.sweeps.push_back(std::move(sc));
  }

  if (j.contains("algorithms")) {
    cp.algorithms.clear();
    const auto& a = j["algorithms"];
    if (a.is_array()) {
      for (const auto& name : a) cp.algorithms.push_back(parse_algorithm(name.get<std::string>()));
    } else {
      for (const auto& [name, body] : a.items()) {
        const Algorithm alg = parse_algorithm(name);
        cp.algorithms.push_back(alg);
        if (body.is_object() && body.contains("maps")) c.maps[alg] = body["maps"].get<std::string>();
      }
    }
  }
  cp.seed = c.seed;
  cp.output_dir = c.output_dir;
  return c;
}

nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["model"] = {{"shape", c.model.shape}, {"input", c.model.input.string()}, {"points", c.model.points}};
  j["training"] = {{"samples", c.training.samples},
                   {"maps", c.training.options.maps},
                   {"lambda", c.training.options.lambda},
                   {"sigma2", c.training.sigma2},
                   {"solver", std::string(to_string(c.training.options.solver))},
                   {"ranges", c.training.ranges}};
  nlohmann::json sweeps = nlohmann::json::array();
  for (const auto& s : c.campaign.sweeps)
    sweeps.push_back({{"name", std::string(to_string(s.perturbation))}, {"levels", s.levels}, {"per_level", s.per_level}});
  j["sweeps"] = {{"levels", c.levels_per_sweep},
                 {"perturbations", sweeps},
                 {"base", c.campaign.base},
                 {"t_pt", c.campaign.t_pt},
                 {"max_iterations", c.campaign.do_options.max_iterations},
                 {"icp_max_iterations", c.campaign.icp_options.max_iterations},
                 {"epsilon", c.campaign.do_options.epsilon},
                 {"metric_points", std::string(to_string(c.campaign.metric_points))},
                 {"data_dir", c.campaign.data_dir.string()}};
  nlohmann::json algs = nlohmann::json::object();
  for (Algorithm a : c.campaign.algorithms) {
    nlohmann::json body = nlohmann::json::object();
    if (auto it = c.maps.find(a); it != c.maps.end()) body["maps"] = it->second.string();
    algs[std::string(to_string(a))] = body;
  }
  j["algorithms"] = algs;
  return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  try {
    return experiment_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

}  // namespace ido
