#include "coeffinv/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "coeffinv/rng.hpp"

namespace coeffinv {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string prior_name(PriorKind kind) {
  return kind == PriorKind::Network ? "network" : "fem";
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string default_solution_id(const ExperimentConfig& config) {
  if (config.coefficient == "step") return "fem_reference";
  return config.dimension == 1 ? "sine_squared" : "sine_product";
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  require(j.is_object(), "config: expected a JSON object");

  require(j.contains("id") && j["id"].is_string() && !j["id"].get<std::string>().empty(),
          "id: required non-empty string");
  c.id = j["id"].get<std::string>();

  require(j.contains("dimension") && j["dimension"].is_number_integer(),
          "dimension: required integer (1 or 2)");
  c.dimension = j["dimension"].get<int>();
  require(c.dimension == 1 || c.dimension == 2, "dimension: must be 1 or 2");

  if (j.contains("mesh")) {
    const auto& m = j["mesh"];
    require(m.is_object(), "mesh: expected an object");
    if (c.dimension == 1) {
      if (m.contains("n_cells")) {
        require(m["n_cells"].is_number_integer() && m["n_cells"].get<int>() >= 2,
                "mesh.n_cells: must be an integer >= 2");
        c.mesh.n_cells = m["n_cells"].get<int>();
      }
      if (m.contains("grading_ratio")) {
        require(m["grading_ratio"].is_number() && m["grading_ratio"].get<double>() >= 1.0 &&
                    std::isfinite(m["grading_ratio"].get<double>()),
                "mesh.grading_ratio: must be a finite number >= 1");
        c.mesh.grading_ratio = m["grading_ratio"].get<double>();
      }
    } else {
      if (m.contains("nx")) {
        require(m["nx"].is_number_integer() && m["nx"].get<int>() >= 1,
                "mesh.nx: must be an integer >= 1");
        c.mesh.nx = m["nx"].get<int>();
      }
      if (m.contains("ny")) {
        require(m["ny"].is_number_integer() && m["ny"].get<int>() >= 1,
                "mesh.ny: must be an integer >= 1");
        c.mesh.ny = m["ny"].get<int>();
      }
    }
  }

  if (j.contains("coefficient")) {
    require(j["coefficient"].is_string(), "coefficient: expected a string id");
    c.coefficient = j["coefficient"].get<std::string>();
  }
  const std::vector<std::string> coeff_1d{"const", "linear", "quadratic", "sine", "step"};
  const std::vector<std::string> coeff_2d{"const", "linear", "quadratic", "sine"};
  const auto& valid = c.dimension == 1 ? coeff_1d : coeff_2d;
  require(std::find(valid.begin(), valid.end(), c.coefficient) != valid.end(),
          "coefficient: unknown id '" + c.coefficient + "' for dimension " +
              std::to_string(c.dimension));

  if (j.contains("solution")) {
    require(j["solution"].is_string(), "solution: expected a string id");
    c.solution = j["solution"].get<std::string>();
  }
  if (c.solution.empty()) c.solution = default_solution_id(c);
  require(c.solution == default_solution_id(c),
          "solution: '" + c.solution + "' is not valid for coefficient '" + c.coefficient +
              "' in dimension " + std::to_string(c.dimension) + " (expected '" +
              default_solution_id(c) + "')");

  if (j.contains("delta")) {
    require(j["delta"].is_number() && j["delta"].get<double>() >= 0.0 &&
                std::isfinite(j["delta"].get<double>()),
            "delta: must be a finite number >= 0");
    c.delta = j["delta"].get<double>();
  }

  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    require(s.is_object(), "seeds: expected an object with 'noise' and 'weights'");
    if (s.contains("noise")) {
      require(s["noise"].is_number_unsigned() || s["noise"].is_number_integer(),
              "seeds.noise: must be a non-negative integer");
      c.noise_seed = s["noise"].get<std::uint64_t>();
    }
    if (s.contains("weights")) {
      require(s["weights"].is_number_unsigned() || s["weights"].is_number_integer(),
              "seeds.weights: must be a non-negative integer");
      c.weight_seed = s["weights"].get<std::uint64_t>();
    }
  }

  if (j.contains("prior")) {
    const auto& p = j["prior"];
    require(p.is_object() && p.contains("type") && p["type"].is_string(),
            "prior.type: required string ('network' or 'fem_space')");
    const std::string type = p["type"].get<std::string>();
    if (type == "network") {
      c.prior.kind = PriorKind::Network;
      if (p.contains("layers")) {
        require(p["layers"].is_array(), "prior.layers: expected an array of layer sizes");
        c.prior.layers = p["layers"].get<std::vector<int>>();
        require(c.prior.layers.size() >= 2, "prior.layers: need at least input and output sizes");
        require(c.prior.layers.front() == c.dimension,
                "prior.layers: input size must equal the dimension");
        require(c.prior.layers.back() == 1, "prior.layers: output size must be 1");
        for (int s : c.prior.layers) {
          require(s >= 1, "prior.layers: sizes must be positive");
        }
      }
    } else if (type == "fem_space") {
      c.prior.kind = PriorKind::FemSpace;
      require(!p.contains("layers"), "prior.layers: not valid for the fem_space prior");
    } else {
      throw ConfigError("prior.type: unknown prior '" + type + "'");
    }
  }
  if (c.prior.kind == PriorKind::Network && c.prior.layers.empty()) {
    c.prior.layers = default_network_layers(c.dimension);
  }

  if (j.contains("mask_distance") && !j["mask_distance"].is_null()) {
    require(j["mask_distance"].is_number(), "mask_distance: expected a number in (0, 0.5]");
    const double d = j["mask_distance"].get<double>();
    require(d > 0.0 && d <= 0.5, "mask_distance: must be in (0, 0.5]");
    require(c.dimension == 1, "mask_distance: only supported on 1D meshes");
    c.mask_distance = d;
  }

  if (j.contains("regularization")) {
    const auto& r = j["regularization"];
    require(r.is_object() && r.contains("type") && r["type"].is_string(),
            "regularization.type: required string");
    c.regularization.type = r["type"].get<std::string>();
    require(c.regularization.type == "none" || c.regularization.type == "tikhonov" ||
                c.regularization.type == "generalized_tikhonov",
            "regularization.type: unknown type '" + c.regularization.type + "'");
    if (c.regularization.type != "none") {
      require(r.contains("alpha") && r["alpha"].is_number(),
              "regularization.alpha: required number > 0");
      c.regularization.alpha = r["alpha"].get<double>();
      require(c.regularization.alpha > 0.0 && std::isfinite(c.regularization.alpha),
              "regularization.alpha: must be finite and > 0");
    }
  }

  if (j.contains("gtol")) {
    require(j["gtol"].is_number() && j["gtol"].get<double>() > 0.0,
            "gtol: must be a number > 0");
    c.gtol = j["gtol"].get<double>();
  }
  if (j.contains("max_iter")) {
    require(j["max_iter"].is_number_integer() && j["max_iter"].get<int>() >= 1,
            "max_iter: must be an integer >= 1");
    c.max_iter = j["max_iter"].get<int>();
  }
  if (j.contains("output_dir")) {
    require(j["output_dir"].is_string(), "output_dir: expected a string path");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError("config " + path.string() + ": " + err.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["dimension"] = c.dimension;
  if (c.dimension == 1) {
    j["mesh"] = {{"n_cells", c.mesh.n_cells}, {"grading_ratio", c.mesh.grading_ratio}};
  } else {
    j["mesh"] = {{"nx", c.mesh.nx}, {"ny", c.mesh.ny}};
  }
  j["coefficient"] = c.coefficient;
  j["solution"] = c.solution;
  j["delta"] = c.delta;
  j["seeds"] = {{"noise", c.noise_seed}, {"weights", c.weight_seed}};
  if (c.prior.kind == PriorKind::Network) {
    j["prior"] = {{"type", "network"}, {"layers", c.prior.layers}};
  } else {
    j["prior"] = {{"type", "fem_space"}};
  }
  if (c.mask_distance) j["mask_distance"] = *c.mask_distance;
  if (c.regularization.type != "none") {
    j["regularization"] = {{"type", c.regularization.type}, {"alpha", c.regularization.alpha}};
  } else {
    j["regularization"] = {{"type", "none"}};
  }
  j["gtol"] = c.gtol;
  j["max_iter"] = c.max_iter;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

BuiltProblem build_problem(const ExperimentConfig& config) {
  BuiltProblem built;
  built.mcase = builtin_case(config.coefficient, config.dimension);

  MeshPtr mesh = config.dimension == 1
                     ? build_interval_mesh(config.mesh.n_cells, config.mesh.grading_ratio)
                     : build_unit_square_mesh(config.mesh.nx, config.mesh.ny);

  auto [forcing, data] = make_synthetic_data(mesh, built.mcase, config.delta, config.noise_seed);
  auto [forcing_clean, data_clean] = config.delta > 0.0
                                         ? make_synthetic_data(mesh, built.mcase, 0.0, 0)
                                         : std::make_pair(forcing, data);
  built.data_clean = std::move(data_clean);

  InverseProblem& p = built.problem;
  p.mesh = mesh;
  p.forcing = std::move(forcing);
  p.data = std::move(data);
  p.boundary = built.mcase.fem_reference
                   ? BoundaryValues{{0, 0.0}, {mesh->n_vertices() - 1, 0.0}}
                   : boundary_values(*mesh, built.mcase.u);
  if (config.mask_distance) p.cell_mask = boundary_mask(*mesh, *config.mask_distance);
  p.prior = config.prior.kind;
  p.network_layers = config.prior.layers.empty() ? default_network_layers(config.dimension)
                                                 : config.prior.layers;
  if (config.regularization.type == "tikhonov") {
    p.reg.kind = Regularization::Kind::Tikhonov;
    p.reg.alpha = config.regularization.alpha;
  } else if (config.regularization.type == "generalized_tikhonov") {
    p.reg.kind = Regularization::Kind::GeneralizedTikhonov;
    p.reg.alpha = config.regularization.alpha;
    p.reg.q_star = interpolate(built.mcase.q, mesh).values;
  }
  p.noise_level = config.delta;
  p.noise_seed = config.noise_seed;
  return built;
}

namespace {

void write_results_csv(const std::filesystem::path& path, const ExperimentOutcome& o) {
  std::ofstream out(path);
  out << "id,prior,delta,noise_seed,weight_seed,iterations,converged,u_err_l2,q_err_l2,q_err_inf\n";
  out << o.config.id << ',' << prior_name(o.config.prior.kind) << ',' << g17(o.config.delta)
      << ',' << o.config.noise_seed << ',' << o.config.weight_seed << ',' << o.opt.iterations
      << ',' << (o.opt.converged ? 1 : 0) << ',' << g17(o.u_err) << ',' << g17(o.q_err) << ','
      << g17(o.q_err_inf) << '\n';
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir, bool dump_mesh) {
  ExperimentOutcome outcome;
  outcome.config = config;

  const BuiltProblem built = build_problem(config);
  const InverseProblem& problem = built.problem;

  const Objective objective = [&problem](const Eigen::VectorXd& params) {
    const EvalReport report = objective_and_gradient(problem, params);
    return std::make_pair(report.objective, report.gradient);
  };

  const Eigen::VectorXd x0 = initial_parameters(problem, config.weight_seed);
  try {
    outcome.opt = bfgs_minimize(objective, x0, config.gtol, config.max_iter);
    outcome.completed = true;
    outcome.message = outcome.opt.stop_reason;
  } catch (const std::exception& err) {
    outcome.completed = false;
    outcome.message = err.what();
    outcome.opt.params = x0;
  }

  const DofField q = realize_coefficient(problem, outcome.opt.params);
  DofField u;
  try {
    u = solve_forward(assemble_system(problem.mesh, q, problem.forcing, problem.boundary));
  } catch (const SingularSystem&) {
    u = built.data_clean;  // degenerate final coefficient; report data-sized placeholders
    u.values.setZero();
  }

  // error norms against the unperturbed exact fields
  if (built.mcase.fem_reference) {
    DofField diff = u;
    diff.values -= built.data_clean.values;
    outcome.u_err = std::sqrt(diff.values.dot(assemble_mass(*problem.mesh) * diff.values));
  } else {
    outcome.u_err = error_norm(u, built.mcase.u, 5);
  }
  outcome.q_err = error_norm(q, built.mcase.q, 5);
  outcome.q_err_inf = 0.0;
  for (int v = 0; v < problem.mesh->n_vertices(); ++v) {
    outcome.q_err_inf = std::max(
        outcome.q_err_inf,
        std::abs(q.values[v] - built.mcase.q(problem.mesh->x(v), problem.mesh->y(v))));
  }

  std::filesystem::create_directories(out_dir);
  write_results_csv(out_dir / "results.csv", outcome);
  write_field_csv(u, out_dir / "solution.csv");
  write_field_csv(q, out_dir / "coefficient.csv");
  write_trace_csv(outcome.opt, out_dir / "trace.csv");
  {
    std::ofstream cfg(out_dir / "config.json");
    cfg << config_to_json(config).dump(2) << '\n';
  }
  if (config.prior.kind == PriorKind::Network) {
    Network net(problem.network_layers);
    net.unflatten(outcome.opt.params);
    net.init_seed = config.weight_seed;
    net.save_json(out_dir / "network.json");
  }
  if (dump_mesh) write_mesh_csv(*problem.mesh, out_dir);
  return outcome;
}

int cells_for_grading(double ratio, double h_target) {
  if (ratio <= 1.0) return std::max(2, static_cast<int>(std::lround(1.0 / h_target)));
  int n = 2;
  while (true) {
    const double r = std::pow(ratio, 1.0 / (n - 1));
    const double h0 = (r - 1.0) / (std::pow(r, n) - 1.0);
    if (h0 * std::pow(r, n - 1) <= h_target) return n;
    ++n;
  }
}

std::vector<std::string> suite_ids() {
  return {"table1", "table2", "graded_mesh", "discontinuous", "incomplete", "morozov", "illposed"};
}

namespace {

const std::vector<std::string> kCoefficients{"const", "linear", "quadratic", "sine"};

std::string delta_tag(double delta) { return delta == 0.0 ? "d0" : "d005"; }

ExperimentConfig base_config_1d() {
  ExperimentConfig c;
  c.dimension = 1;
  c.mesh.n_cells = 101;
  c.gtol = 1e-6;
  c.max_iter = 5000;
  return c;
}

}  // namespace

std::vector<ExperimentConfig> suite_configs(const std::string& suite) {
  std::vector<ExperimentConfig> configs;
  if (suite == "table1") {
    for (const auto& coeff : kCoefficients) {
      for (const PriorKind prior : {PriorKind::Network, PriorKind::FemSpace}) {
        for (const double delta : {0.0, 0.05}) {
          ExperimentConfig c = base_config_1d();
          c.coefficient = coeff;
          c.prior.kind = prior;
          if (prior == PriorKind::Network) c.prior.layers = {1, 3, 1};
          c.delta = delta;
          c.id = "table1-" + coeff + "-" + prior_name(prior) + "-" + delta_tag(delta);
          c.solution = default_solution_id(c);
          configs.push_back(std::move(c));
        }
      }
    }
  } else if (suite == "table2") {
    for (const auto& coeff : kCoefficients) {
      for (const double delta : {0.0, 0.05}) {
        ExperimentConfig c;
        c.dimension = 2;
        c.mesh.nx = c.mesh.ny = 51;
        c.coefficient = coeff;
        c.prior.kind = PriorKind::Network;
        c.prior.layers = {2, 10, 1};
        c.delta = delta;
        c.gtol = 1e-7;
        c.max_iter = 3000;
        c.id = "table2-" + coeff + "-network-" + delta_tag(delta);
        c.solution = default_solution_id(c);
        configs.push_back(std::move(c));
      }
    }
  } else if (suite == "graded_mesh") {
    for (int ratio = 1; ratio <= 128; ratio *= 2) {
      ExperimentConfig c = base_config_1d();
      c.mesh.grading_ratio = ratio;
      c.mesh.n_cells = cells_for_grading(ratio, 1.0 / 101.0);
      c.prior.kind = PriorKind::Network;
      c.prior.layers = {1, 3, 1};
      c.id = "graded-ratio" + std::to_string(ratio);
      c.solution = default_solution_id(c);
      configs.push_back(std::move(c));
    }
  } else if (suite == "discontinuous") {
    for (const PriorKind prior : {PriorKind::Network, PriorKind::FemSpace}) {
      for (const double delta : {0.0, 0.05}) {
        ExperimentConfig c = base_config_1d();
        c.coefficient = "step";
        c.prior.kind = prior;
        if (prior == PriorKind::Network) c.prior.layers = {1, 3, 1};
        c.delta = delta;
        c.id = "discontinuous-" + prior_name(prior) + "-" + delta_tag(delta);
        c.solution = default_solution_id(c);
        configs.push_back(std::move(c));
      }
    }
  } else if (suite == "incomplete") {
    for (const double d : {0.4, 0.2, 0.1}) {
      for (const PriorKind prior : {PriorKind::Network, PriorKind::FemSpace}) {
        for (const double delta : {0.0, 0.05}) {
          ExperimentConfig c = base_config_1d();
          c.coefficient = "const";
          c.prior.kind = prior;
          if (prior == PriorKind::Network) c.prior.layers = {1, 3, 1};
          c.delta = delta;
          c.mask_distance = d;
          char tag[16];
          std::snprintf(tag, sizeof(tag), "d%g", d);
          c.id = "incomplete-" + std::string(tag) + "-" + prior_name(prior) + "-" +
                 delta_tag(delta);
          c.solution = default_solution_id(c);
          configs.push_back(std::move(c));
        }
      }
    }
  } else {
    throw ConfigError("suite_configs: unknown or special suite '" + suite + "'");
  }
  return configs;
}

namespace {

struct RowRecord {
  std::string csv_line;
  bool completed = false;
  std::string message;
  double wall_time = 0.0;
  std::string id;
};

RowRecord run_plain_row(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  RowRecord record;
  record.id = config.id;
  try {
    const ExperimentOutcome o = run_experiment(config, out_dir / "rows" / config.id);
    record.completed = o.completed;
    record.message = o.message;
    record.wall_time = o.opt.wall_time;
    std::ostringstream line;
    line << o.config.id << ',' << o.config.coefficient << ','
         << prior_name(o.config.prior.kind) << ',' << g17(o.config.delta) << ','
         << o.config.noise_seed << ',' << o.config.weight_seed << ',' << o.opt.iterations << ','
         << (o.opt.converged ? 1 : 0) << ',' << g17(o.u_err) << ',' << g17(o.q_err) << ','
         << g17(o.q_err_inf);
    record.csv_line = line.str();
  } catch (const std::exception& err) {
    record.completed = false;
    record.message = err.what();
    record.csv_line = config.id + ",,,,,,,,,error";
  }
  return record;
}

RowRecord run_morozov_row(const std::string& coefficient, PriorKind prior,
                          const std::filesystem::path& out_dir) {
  ExperimentConfig c = base_config_1d();
  c.coefficient = coefficient;
  c.prior.kind = prior;
  if (prior == PriorKind::Network) c.prior.layers = {1, 3, 1};
  c.delta = 0.05;
  c.regularization.type = "generalized_tikhonov";
  c.regularization.alpha = 1.0;  // replaced by the calibrated value
  c.id = "morozov-" + coefficient + "-" + prior_name(prior);
  c.solution = default_solution_id(c);

  RowRecord record;
  record.id = c.id;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const BuiltProblem built = build_problem(c);
    // noise measure: realized noise energy discounted by the discrepancy
    // factor 0.99 (the prior never fits the last percent of the noise)
    const double measure =
        0.99 * realized_noise_measure(built.problem.data, built.data_clean);
    const Eigen::VectorXd x0 = initial_parameters(built.problem, c.weight_seed);
    const AlphaSearchResult search =
        find_optimal_alpha(built.problem, measure, {0.01, 10.0}, x0);

    c.regularization.alpha = search.alpha;
    const std::filesystem::path row_dir = out_dir / "rows" / c.id;
    const ExperimentOutcome o = run_experiment(c, row_dir);

    {
      std::vector<DiscrepancySample> samples = search.curve.samples;
      std::sort(samples.begin(), samples.end(),
                [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
      std::ofstream curve(row_dir / "discrepancy_curve.csv");
      curve << "alpha,misfit_integral,f\n";
      for (const auto& s : samples) {
        curve << g17(s.alpha) << ',' << g17(s.misfit_integral) << ',' << g17(s.f) << '\n';
      }
    }

    record.completed = o.completed;
    record.message = o.message;
    std::ostringstream line;
    line << c.id << ',' << coefficient << ',' << prior_name(prior) << ','
         << g17(search.alpha) << ',' << search.curve.samples.size() << ',' << g17(measure)
         << ',' << o.opt.iterations << ',' << (o.opt.converged ? 1 : 0) << ',' << g17(o.u_err)
         << ',' << g17(o.q_err);
    record.csv_line = line.str();
  } catch (const std::exception& err) {
    record.completed = false;
    record.message = err.what();
    record.csv_line = c.id + "," + coefficient + "," + prior_name(prior) + ",,,,,,,error";
  }
  record.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return record;
}

void write_timings(const std::filesystem::path& out_dir, const std::vector<RowRecord>& rows) {
  std::ofstream out(out_dir / "timings.csv");
  out << "id,wall_seconds\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.3f", r.wall_time);
    out << r.id << ',' << buf << '\n';
  }
}

}  // namespace

int run_suite(const std::string& suite, const std::filesystem::path& out_dir, int workers,
              std::ostream* log) {
  std::ostream& msg = log ? *log : std::cerr;
  std::filesystem::create_directories(out_dir);

  if (suite == "illposed") {
    const std::vector<int> ns{1, 10, 100};
    const auto rows = illposedness_table(ns);
    std::ofstream out(out_dir / "illposed.csv");
    out << "n,u_err_inf,q_err_inf\n";
    for (const auto& r : rows) {
      out << r.n << ',' << g17(r.u_err_inf) << ',' << g17(r.q_err_inf) << '\n';
    }
    msg << "illposed: wrote " << (out_dir / "illposed.csv").string() << "\n";
    return 0;
  }

  std::vector<std::function<RowRecord()>> jobs;
  std::string header;
  if (suite == "morozov") {
    header = "id,coefficient,prior,alpha_opt,curve_samples,noise_measure,iterations,converged,"
             "u_err_l2,q_err_l2";
    for (const auto& coeff : kCoefficients) {
      for (const PriorKind prior : {PriorKind::Network, PriorKind::FemSpace}) {
        jobs.emplace_back([=]() { return run_morozov_row(coeff, prior, out_dir); });
      }
    }
  } else {
    header = "id,coefficient,prior,delta,noise_seed,weight_seed,iterations,converged,u_err_l2,"
             "q_err_l2,q_err_inf";
    for (const ExperimentConfig& config : suite_configs(suite)) {
      jobs.emplace_back([=]() { return run_plain_row(config, out_dir); });
    }
  }

  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
    workers = std::min(workers, 8);
  }
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));

  std::vector<RowRecord> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      rows[i] = jobs[i]();
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  std::ofstream aggregate(out_dir / (suite + ".csv"));
  aggregate << header << '\n';
  int failures = 0;
  for (const auto& r : rows) {
    aggregate << r.csv_line << '\n';
    if (!r.completed) {
      ++failures;
      msg << "row " << r.id << " failed: " << r.message << "\n";
    } else {
      msg << "row " << r.id << ": " << r.message << "\n";
    }
  }
  write_timings(out_dir, rows);
  msg << suite << ": " << rows.size() - failures << "/" << rows.size() << " rows completed\n";
  return failures == 0 ? 0 : 1;
}

std::vector<GradientCheckCase> run_gradient_checks(int vectors_per_case, std::uint64_t base_seed,
                                                   double fd_step) {
  struct Setup {
    std::string name;
    int dim;
    PriorKind prior;
    bool masked;
  };
  const std::vector<Setup> setups{
      {"1d-network", 1, PriorKind::Network, false},
      {"1d-network-masked", 1, PriorKind::Network, true},
      {"1d-fem", 1, PriorKind::FemSpace, false},
      {"1d-fem-masked", 1, PriorKind::FemSpace, true},
      {"2d-network", 2, PriorKind::Network, false},
      {"2d-fem", 2, PriorKind::FemSpace, false},
  };

  std::vector<GradientCheckCase> results;
  for (const auto& setup : setups) {
    ExperimentConfig config;
    config.id = "gradient-check";
    config.dimension = setup.dim;
    if (setup.dim == 1) {
      config.mesh.n_cells = 31;
    } else {
      config.mesh.nx = config.mesh.ny = 9;
    }
    config.coefficient = "linear";
    config.solution = default_solution_id(config);
    config.delta = 0.02;
    config.prior.kind = setup.prior;
    if (setup.prior == PriorKind::Network) {
      config.prior.layers = default_network_layers(setup.dim);
    }
    if (setup.masked) config.mask_distance = 0.3;

    const BuiltProblem built = build_problem(config);
    const InverseProblem& problem = built.problem;
    const int n_params = problem.parameter_count();

    SplitMix64 rng(base_seed);
    GradientCheckCase result{setup.name, 0.0, vectors_per_case};
    for (int trial = 0; trial < vectors_per_case; ++trial) {
      Eigen::VectorXd params(n_params);
      for (int i = 0; i < n_params; ++i) {
        params[i] = setup.prior == PriorKind::Network ? rng.next_double()
                                                      : 1.0 + 0.6 * (rng.next_double() - 0.5);
      }
      const Eigen::VectorXd grad = objective_and_gradient(problem, params).gradient;
      for (int k = 0; k < n_params; ++k) {
        Eigen::VectorXd p = params;
        p[k] = params[k] + fd_step;
        const double fp = objective_and_gradient(problem, p).objective;
        p[k] = params[k] - fd_step;
        const double fm = objective_and_gradient(problem, p).objective;
        const double fd = (fp - fm) / (2.0 * fd_step);
        const double rel = std::abs(grad[k] - fd) / std::max(1.0, std::abs(fd));
        result.max_rel_err = std::max(result.max_rel_err, rel);
      }
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace coeffinv
