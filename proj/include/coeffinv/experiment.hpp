#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coeffinv/problem.hpp"
#include "coeffinv/regcal.hpp"

namespace coeffinv {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MeshSpec {
  // 1D
  int n_cells = 101;
  double grading_ratio = 1.0;
  // 2D
  int nx = 51;
  int ny = 51;
};

struct PriorSpec {
  PriorKind kind = PriorKind::Network;
  std::vector<int> layers;  // empty = dimension default
};

struct RegSpec {
  std::string type = "none";  // none | tikhonov | generalized_tikhonov
  double alpha = 0.0;
};

struct ExperimentConfig {
  std::string id;
  int dimension = 1;
  MeshSpec mesh;
  std::string coefficient = "const";
  std::string solution;  // defaulted from dimension/coefficient when empty
  double delta = 0.0;
  std::uint64_t noise_seed = 3;
  std::uint64_t weight_seed = 2;
  PriorSpec prior;
  std::optional<double> mask_distance;
  RegSpec regularization;
  double gtol = 1e-6;
  int max_iter = 5000;
  std::string output_dir;
};

/// Parses and validates a config; error messages carry the offending field
/// path (for example "mesh.n_cells: must be an integer >= 2").
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct BuiltProblem {
  ManufacturedCase mcase;
  InverseProblem problem;
  DofField data_clean;  // data before noise, for diagnostics
};

BuiltProblem build_problem(const ExperimentConfig& config);

struct ExperimentOutcome {
  ExperimentConfig config;
  OptimizationResult opt;
  double u_err = 0.0;  // L2 vs the unperturbed exact solution
  double q_err = 0.0;  // L2 vs the exact coefficient
  double q_err_inf = 0.0;
  bool completed = false;
  std::string message;
};

/// Runs one inverse experiment and writes results.csv, solution.csv,
/// coefficient.csv, trace.csv (and network.json for network priors) under
/// out_dir. Non-convergence is recorded, not fatal. Wall-clock time is kept
/// out of the CSVs so repeated runs are byte-identical; it is returned in
/// the outcome and reported separately.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir, bool dump_mesh = false);

/// Known suite ids: table1, table2, graded_mesh, discontinuous, incomplete,
/// morozov, illposed.
std::vector<std::string> suite_ids();

/// Configs for the plain experiment suites (morozov and illposed rows are
/// built internally by run_suite).
std::vector<ExperimentConfig> suite_configs(const std::string& suite);

/// Runs a full suite with up to `workers` rows in parallel, writing one
/// aggregate CSV named <suite>.csv plus per-row directories and a
/// timings.csv sidecar (the only non-deterministic output). Returns 0 when
/// every row completed (converged or cleanly reported).
int run_suite(const std::string& suite, const std::filesystem::path& out_dir, int workers = 0,
              std::ostream* log = nullptr);

/// Number of cells for a graded 1D mesh that keeps the largest cell at or
/// below h_target while reaching the requested grading ratio.
int cells_for_grading(double ratio, double h_target);

struct GradientCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  int vectors = 0;
};

/// Central-difference verification of the end-to-end gradient for network
/// and FEM-space priors in 1D and 2D, masked and unmasked. The relative
/// error for component k is |g_k - fd_k| / max(1, |fd_k|).
std::vector<GradientCheckCase> run_gradient_checks(int vectors_per_case = 20,
                                                   std::uint64_t base_seed = 1234,
                                                   double fd_step = 1e-6);

}  // namespace coeffinv
