#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stcut/bulk_surface_solver.hpp"
#include "stcut/surface_examples.hpp"

namespace stcut::cli {

enum class Experiment { surface_example1, surface_example2, coupled_lai, custom };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& text);

/// Manufactured solution used by surface runs; `custom` picks it freely.
enum class Solution { example1, example2 };

std::string to_string(Solution s);
Solution parse_solution(const std::string& text);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::surface_example1;
  Solution solution = Solution::example1;
  std::vector<int> meshes{20, 40, 80};
  int p = 1;
  int q = 1;
  StabilizationMode stab = StabilizationMode::combined_new;
  double stab_constant = 0.1;  ///< c_{F,i} = c_{Gamma,i} = stab_constant / i!
  TrackerSettings tracker;
  double time_step_ratio = 1.0 / 12.0;  ///< k / h
  double final_time = 0.25;
  bool compute_condition = true;
  int condition_slab = 0;
  int condition_dense_limit = 4000;
  /// Off gives byte-identical CSVs across runs (the column is then 0).
  bool record_wall_time = true;

  CoupledParameters coupled;
  bool use_multiplier = true;
  std::vector<double> snapshot_times{0.5, 1.0, 1.5, 2.0};
  double self_convergence_time = 0.5;
  NewtonOptions newton;

  std::string output_dir = "out";

  bool is_coupled() const { return experiment == Experiment::coupled_lai; }
  bool operator==(const ExperimentConfig& other) const;
};

/// Paper setup of each experiment.
ExperimentConfig default_config(Experiment e);
/// Base constant of the stabilization arm for the experiment.
double default_stab_constant(Experiment e, StabilizationMode mode);

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& config);

/// Missing keys take the defaults of the experiment named in the document;
/// unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json serialize(const ExperimentConfig& config);

/// Least-squares slope of log(y) against log(h) over the last three points
/// and over all points. NaN when fewer than two usable points remain.
struct RateFit {
  double last3 = 0.0;
  double all = 0.0;
};
RateFit fit_rates(const std::vector<double>& h, const std::vector<double>& y);

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double k = 0.0;
  int p = 0;
  int q = 0;
  std::string stab_mode;
  double l2 = 0.0;
  double h1 = 0.0;
  double cond = 0.0;
  int dofs = 0;
  double wall_time = 0.0;
  bool ok = true;
  std::string error;
};

struct ConvergenceStudy {
  ExperimentConfig config;
  std::vector<ConvergenceRow> rows;
  RateFit l2;
  RateFit h1;
  RateFit cond;
  bool all_ok() const;
};

ConvergenceRow run_surface_case(const ExperimentConfig& config, int n);
ConvergenceStudy run_convergence_study(const ExperimentConfig& config);

struct CoupledRun {
  int n = 0;
  double h = 0.0;
  double k = 0.0;
  std::unique_ptr<BackgroundMesh> mesh;
  std::unique_ptr<DofHandler> dofs;
  CoupledResult result;
  double wall_time = 0.0;
  bool ok = true;
  std::string error;
};

struct SelfConvergenceRow {
  double h_fine = 0.0;
  double bulk = 0.0;
  double surface = 0.0;
};

struct CoupledDemo {
  ExperimentConfig config;
  std::vector<CoupledRun> runs;
  /// Consecutive mesh pairs at self_convergence_time, when several meshes run.
  std::vector<SelfConvergenceRow> self;
  RateFit bulk_rate;
  RateFit surface_rate;
  bool all_ok() const;
};

CoupledProblem coupled_problem(const ExperimentConfig& config);
CoupledRun run_coupled_case(const ExperimentConfig& config, int n);
CoupledDemo run_coupled_demo(const ExperimentConfig& config);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_rates_csv(std::ostream& out, const std::vector<std::pair<std::string, RateFit>>& fits);
void write_timeseries_csv(std::ostream& out, const std::vector<CoupledStep>& steps);
void write_field_csv(std::ostream& out, const std::vector<std::array<double, 3>>& points, const std::string& value);
void write_self_convergence_csv(std::ostream& out, const std::vector<SelfConvergenceRow>& rows);

/// File stem shared by all outputs of a surface study.
std::string study_stem(const ExperimentConfig& config);

/// Writes CSV tables and SVG plots into `dir` (created if missing) and returns
/// the paths written.
std::vector<std::filesystem::path> emit_outputs(const ConvergenceStudy& study, const std::filesystem::path& dir);
std::vector<std::filesystem::path> emit_outputs(const CoupledDemo& demo, const std::filesystem::path& dir);

}  // namespace stcut::cli
