// Acceptance suite: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Exit code 0 only if all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "coeffinv/experiment.hpp"

using namespace coeffinv;

namespace {

namespace fs = std::filesystem;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

struct Check {
  std::string name;
  std::function<bool(std::ostream&)> run;
};

ExperimentConfig config_1d(const std::string& coefficient, PriorKind prior, double delta) {
  ExperimentConfig c;
  c.id = "acceptance-" + coefficient + "-" + (prior == PriorKind::Network ? "net" : "fem") +
         (delta > 0 ? "-noisy" : "-clean");
  c.dimension = 1;
  c.mesh.n_cells = 101;
  c.coefficient = coefficient;
  c.solution = coefficient == "step" ? "fem_reference" : "sine_squared";
  c.delta = delta;
  c.prior.kind = prior;
  if (prior == PriorKind::Network) c.prior.layers = {1, 3, 1};
  c.gtol = 1e-6;
  c.max_iter = 5000;
  return c;
}

ExperimentOutcome run(const ExperimentConfig& config) {
  static int counter = 0;
  const fs::path dir =
      fs::temp_directory_path() / "coeffinv_acceptance" / (config.id + std::to_string(counter++));
  return run_experiment(config, dir);
}

double fitted_rate(const std::vector<double>& h, const std::vector<double>& err) {
  // least-squares slope of log(err) against log(h)
  const int n = static_cast<int>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

bool criterion_gradients(std::ostream& out) {
  const double t0 = now_seconds();
  bool ok = true;
  for (const auto& gc : run_gradient_checks(20)) {
    out << "    " << gc.name << ": max rel err " << gc.max_rel_err << " over " << gc.vectors
        << " vectors\n";
    ok = ok && gc.max_rel_err <= 1e-4;
  }
  const double elapsed = now_seconds() - t0;
  out << "    elapsed " << elapsed << " s (limit 60)\n";
  return ok && elapsed < 60.0;
}

bool criterion_convergence_order(std::ostream& out) {
  constexpr double kPi = 3.14159265358979323846;
  // 1D: q = 1 + x with the manufactured solution
  std::vector<double> h1, e1;
  for (const int n : {25, 50, 100, 200}) {
    const auto mesh = build_interval_mesh(n, 1.0);
    const ManufacturedCase mc = builtin_case("linear", 1);
    const DofField u = solve_forward(assemble_system(mesh, interpolate(mc.q, mesh),
                                                     interpolate(mc.f, mesh),
                                                     boundary_values(*mesh, mc.u)));
    h1.push_back(1.0 / n);
    e1.push_back(error_norm(u, mc.u, 5));
  }
  const double rate1 = fitted_rate(h1, e1);

  // 2D: q = 1 + x + y on the unit square
  std::vector<double> h2, e2;
  for (const int n : {8, 16, 32, 64}) {
    const auto mesh = build_unit_square_mesh(n, n);
    const ManufacturedCase mc = builtin_case("linear", 2);
    const DofField u = solve_forward(assemble_system(mesh, interpolate(mc.q, mesh),
                                                     interpolate(mc.f, mesh),
                                                     boundary_values(*mesh, mc.u)));
    h2.push_back(1.0 / n);
    e2.push_back(error_norm(u, mc.u, 5));
  }
  const double rate2 = fitted_rate(h2, e2);
  out << "    L2 rates: 1D " << rate1 << ", 2D " << rate2 << " (want 2.0 +/- 0.2)\n";
  (void)kPi;
  return std::abs(rate1 - 2.0) <= 0.2 && std::abs(rate2 - 2.0) <= 0.2;
}

bool criterion_table1_noiseless(std::ostream& out) {
  const std::vector<std::pair<std::string, double>> cases{
      {"const", 1e-2}, {"linear", 1e-2}, {"quadratic", 3e-2}, {"sine", 5e-2}};
  bool ok = true;
  for (const auto& [coeff, tol] : cases) {
    const double t0 = now_seconds();
    const ExperimentOutcome o = run(config_1d(coeff, PriorKind::Network, 0.0));
    const double elapsed = now_seconds() - t0;
    const bool pass =
        o.completed && o.q_err <= tol && o.opt.iterations <= 2000 && elapsed <= 60.0;
    out << "    " << coeff << ": ||q-q_exact|| = " << o.q_err << " (tol " << tol << "), "
        << o.opt.iterations << " iterations, " << elapsed << " s" << (pass ? "" : "  <-- FAIL")
        << "\n";
    ok = ok && pass;
  }
  return ok;
}

bool criterion_table1_noisy(std::ostream& out) {
  bool ok = true;
  for (const auto& coeff : {"const", "linear", "quadratic", "sine"}) {
    const ExperimentOutcome o = run(config_1d(coeff, PriorKind::Network, 0.05));
    const bool pass = o.completed && o.q_err <= 1e-1;
    out << "    network " << coeff << ": ||q-q_exact|| = " << o.q_err << " (tol 0.1)"
        << (pass ? "" : "  <-- FAIL") << "\n";
    ok = ok && pass;
  }
  int unstable = 0;
  for (const auto& coeff : {"const", "linear", "quadratic", "sine"}) {
    const ExperimentOutcome o = run(config_1d(coeff, PriorKind::FemSpace, 0.05));
    out << "    fem " << coeff << ": ||q-q_exact|| = " << o.q_err << "\n";
    if (o.q_err >= 1.0) ++unstable;
  }
  out << "    unregularized fem rows with error >= 1: " << unstable << "/4 (need >= 3)\n";
  return ok && unstable >= 3;
}

bool criterion_table2_scaled(std::ostream& out) {
  ExperimentConfig c;
  c.id = "acceptance-2d-const";
  c.dimension = 2;
  c.mesh.nx = c.mesh.ny = 51;
  c.coefficient = "const";
  c.solution = "sine_product";
  c.prior.kind = PriorKind::Network;
  c.prior.layers = {2, 10, 1};
  c.gtol = 1e-7;
  c.max_iter = 500;
  const double t0 = now_seconds();
  const ExperimentOutcome o = run(c);
  const double elapsed = now_seconds() - t0;
  out << "    51x51 network: ||q-q_exact|| = " << o.q_err << " (tol 1e-2), "
      << o.opt.iterations << " iterations (limit 500), " << elapsed << " s (limit 600)\n";
  return o.completed && o.opt.converged && o.q_err <= 1e-2 && o.opt.iterations <= 500 &&
         elapsed <= 600.0;
}

bool criterion_mesh_independence(std::ostream& out) {
  std::vector<int> iterations;
  std::vector<double> errors;
  for (const ExperimentConfig& config : suite_configs("graded_mesh")) {
    const ExperimentOutcome o = run(config);
    if (!o.completed) return false;
    iterations.push_back(o.opt.iterations);
    errors.push_back(o.q_err);
    out << "    ratio " << config.mesh.grading_ratio << " (" << config.mesh.n_cells
        << " cells): " << o.opt.iterations << " iterations, ||q-q_exact|| = " << o.q_err << "\n";
  }
  std::vector<int> tail(iterations.end() - 4, iterations.end());
  std::sort(tail.begin(), tail.end());
  const double plateau = 0.5 * (tail[1] + tail[2]);
  bool ok = true;
  for (int it : iterations) ok = ok && std::abs(it - plateau) <= 0.25 * plateau;
  const double err_lo = *std::min_element(errors.end() - 4, errors.end());
  const double err_hi = *std::max_element(errors.end() - 4, errors.end());
  out << "    iteration plateau " << plateau << "; last-four error spread "
      << (err_hi - err_lo) / err_lo * 100.0 << "% (limit 5%)\n";
  return ok && (err_hi - err_lo) <= 0.05 * err_lo;
}

bool criterion_discontinuous(std::ostream& out) {
  const ExperimentOutcome clean = run(config_1d("step", PriorKind::Network, 0.0));
  const ExperimentOutcome noisy = run(config_1d("step", PriorKind::Network, 0.05));
  out << "    noiseless ||q-q_exact|| = " << clean.q_err << " (tol 5e-2)\n";
  out << "    noisy     ||q-q_exact|| = " << noisy.q_err << " (tol 3e-1)\n";
  return clean.completed && clean.q_err <= 5e-2 && noisy.completed && noisy.q_err <= 3e-1;
}

bool criterion_incomplete(std::ostream& out) {
  ExperimentConfig c = config_1d("const", PriorKind::Network, 0.0);
  c.mask_distance = 0.1;
  const ExperimentOutcome o = run(c);
  out << "    d=0.1: ||q-q_exact||_inf over the whole domain = " << o.q_err_inf
      << " (tol 5e-2)\n";
  return o.completed && o.q_err_inf <= 5e-2;
}

bool criterion_morozov(std::ostream& out) {
  ExperimentConfig c = config_1d("const", PriorKind::Network, 0.05);
  c.regularization.type = "generalized_tikhonov";
  c.regularization.alpha = 1.0;
  const BuiltProblem built = build_problem(c);
  const double measure = 0.99 * realized_noise_measure(built.problem.data, built.data_clean);
  const Eigen::VectorXd x0 = initial_parameters(built.problem, c.weight_seed);
  const AlphaSearchResult search = find_optimal_alpha(built.problem, measure, {0.01, 10.0}, x0);

  const bool monotone = search.curve.monotone;

  c.regularization.alpha = search.alpha;
  const ExperimentOutcome at_alpha = run(c);
  const ExperimentOutcome unregularized = run(config_1d("const", PriorKind::Network, 0.05));
  out << "    alpha_opt = " << search.alpha << " (want within [0.1, 1.0]); curve "
      << (monotone ? "monotone" : "NOT monotone") << " over " << search.curve.samples.size()
      << " samples\n";
  out << "    ||q-q_exact|| at alpha_opt = " << at_alpha.q_err << " vs unregularized "
      << unregularized.q_err << " (limit 2x)\n";
  return monotone && search.alpha >= 0.1 && search.alpha <= 1.0 && at_alpha.completed &&
         at_alpha.q_err <= 2.0 * unregularized.q_err;
}

bool criterion_illposedness(std::ostream& out) {
  const auto rows = illposedness_table({1, 10, 100});
  bool ok = true;
  for (const auto& row : rows) {
    out << "    N = " << row.n << ": ||u_N - u||_inf = " << row.u_err_inf
        << ", ||q_N - q||_inf = " << row.q_err_inf << "\n";
    ok = ok && std::abs(row.q_err_inf - 0.5) <= 1e-6;
  }
  ok = ok && rows[0].u_err_inf > rows[1].u_err_inf && rows[1].u_err_inf > rows[2].u_err_inf;
  const double decade = rows[1].u_err_inf / rows[2].u_err_inf;
  out << "    data-error decay factor over N = 10 -> 100: " << decade << " (want 10 +/- 2)\n";
  return ok && decade >= 8.0 && decade <= 12.0;
}

bool criterion_determinism(std::ostream& out) {
  const fs::path base = fs::temp_directory_path() / "coeffinv_acceptance_det";
  fs::remove_all(base);
  std::ostringstream sink;
  if (run_suite("graded_mesh", base / "a", 4, &sink) != 0) return false;
  if (run_suite("graded_mesh", base / "b", 4, &sink) != 0) return false;

  int compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), base / "a");
    if (rel.filename() == "timings.csv") continue;  // wall-clock sidecar, excluded by design
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(base / "b" / rel, std::ios::binary);
    if (!fb.good()) {
      out << "    missing counterpart for " << rel.string() << "\n";
      return false;
    }
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      out << "    mismatch in " << rel.string() << "\n";
      return false;
    }
    ++compared;
  }
  out << "    " << compared
      << " files byte-identical across two parallel suite runs (timings.csv excluded)\n";
  fs::remove_all(base);
  return compared > 0;
}

}  // namespace

int main() {
  const std::vector<Check> checks{
      {"1. adjoint/chain-rule gradients match finite differences (<= 1e-4)", criterion_gradients},
      {"2. forward solver L2 convergence rate 2.0 +/- 0.2 (1D and 2D)", criterion_convergence_order},
      {"3. noiseless 1D network recovery within the per-coefficient tolerances",
       criterion_table1_noiseless},
      {"4. noisy 1D: network <= 0.1, unregularized FEM-space unstable (>= 1)",
       criterion_table1_noisy},
      {"5. 2D 51x51 network recovery: error <= 1e-2 within 500 iterations", criterion_table2_scaled},
      {"6. graded-mesh iteration plateau (+/- 25%) and error stability (5%)",
       criterion_mesh_independence},
      {"7. discontinuous coefficient: <= 5e-2 noiseless, <= 3e-1 noisy", criterion_discontinuous},
      {"8. incomplete data d=0.1: sup-norm recovery <= 5e-2 on the whole domain",
       criterion_incomplete},
      {"9. Morozov: monotone discrepancy, alpha in [0.1, 1.0], error within 2x",
       criterion_morozov},
      {"10. ill-posedness table: q error pinned at 0.5, data error decays ~10x/decade",
       criterion_illposedness},
      {"11. repeated suite runs produce byte-identical CSVs", criterion_determinism},
  };

  int failures = 0;
  for (const auto& check : checks) {
    std::ostringstream detail;
    bool ok = false;
    try {
      ok = check.run(detail);
    } catch (const std::exception& err) {
      detail << "    exception: " << err.what() << "\n";
    }
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", check.name.c_str());
    std::fputs(detail.str().c_str(), stdout);
    if (!ok) ++failures;
  }
  std::printf("%zu/%zu acceptance criteria passed\n", checks.size() - failures, checks.size());
  return failures == 0 ? 0 : 1;
}
