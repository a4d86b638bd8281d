#include "coeffinv/regcal.hpp"

#include <algorithm>
#include <cmath>

namespace coeffinv {

DiscrepancyEval discrepancy(const InverseProblem& problem, double alpha, double noise_measure,
                            const Eigen::VectorXd& x0, const InnerSolveOptions& opts) {
  if (!(alpha > 0.0)) throw std::invalid_argument("discrepancy: alpha must be positive");
  if (problem.reg.kind != Regularization::Kind::GeneralizedTikhonov) {
    throw std::invalid_argument("discrepancy: problem must use generalized Tikhonov regularization");
  }
  InverseProblem inner = problem;
  inner.reg.alpha = alpha;

  const Objective objective = [&inner](const Eigen::VectorXd& params) {
    const EvalReport report = objective_and_gradient(inner, params);
    return std::make_pair(report.objective, report.gradient);
  };

  DiscrepancyEval eval;
  eval.inner = bfgs_minimize(objective, x0, opts.gtol, opts.max_iter);
  const DofField q = realize_coefficient(inner, eval.inner.params);
  const DofField u =
      solve_forward(assemble_system(inner.mesh, q, inner.forcing, inner.boundary));
  eval.misfit_integral = 2.0 * misfit(u, inner.data, inner.cell_mask);
  eval.f = eval.misfit_integral - noise_measure;
  return eval;
}

double find_root_log_bisection(const std::function<double(double)>& f, double alpha_lo,
                               double alpha_hi, double rel_tol, int max_expand) {
  if (!(alpha_lo > 0.0) || !(alpha_hi > alpha_lo)) {
    throw std::invalid_argument("find_root_log_bisection: need 0 < alpha_lo < alpha_hi");
  }
  double lo = alpha_lo, hi = alpha_hi;
  double f_lo = f(lo), f_hi = f(hi);

  for (int i = 0; i < max_expand && f_lo > 0.0; ++i) {
    hi = lo;
    f_hi = f_lo;
    lo *= 0.5;
    f_lo = f(lo);
  }
  for (int i = 0; i < max_expand && f_hi < 0.0; ++i) {
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
    f_hi = f(hi);
  }
  if (!(f_lo < 0.0) || !(f_hi > 0.0)) {
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    throw BracketFailure("find_root_log_bisection: no sign change after bracket expansion");
  }

  while (hi / lo > 1.0 + rel_tol) {
    const double mid = std::sqrt(lo * hi);
    const double f_mid = f(mid);
    if (f_mid == 0.0) return mid;
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  // return the candidate with the smallest residual so that the root beats
  // both final bracket endpoints
  const double mid = std::sqrt(lo * hi);
  const double f_mid = f(mid);
  double best = mid, best_f = std::abs(f_mid);
  if (std::abs(f_lo) < best_f) {
    best = lo;
    best_f = std::abs(f_lo);
  }
  if (std::abs(f_hi) < best_f) best = hi;
  return best;
}

AlphaSearchResult find_optimal_alpha(const InverseProblem& problem, double noise_measure,
                                     std::pair<double, double> bracket, const Eigen::VectorXd& x0,
                                     double rel_tol, const InnerSolveOptions& opts) {
  AlphaSearchResult result;
  Eigen::VectorXd warm = x0;

  const std::function<double(double)> f = [&](double alpha) {
    const DiscrepancyEval eval = discrepancy(problem, alpha, noise_measure, warm, opts);
    warm = eval.inner.params;  // warm-start the next inner solve
    result.curve.samples.push_back({alpha, eval.misfit_integral, eval.f});
    return eval.f;
  };

  result.alpha = find_root_log_bisection(f, bracket.first, bracket.second, rel_tol);
  result.curve.root = result.alpha;

  // bracketing record: tightest sampled alphas around the root
  result.curve.bracket_lo = bracket.first;
  result.curve.bracket_hi = bracket.second;
  for (const auto& s : result.curve.samples) {
    if (s.alpha <= result.alpha && s.f <= 0.0) {
      result.curve.bracket_lo = std::max(result.curve.bracket_lo, s.alpha);
    }
    if (s.alpha >= result.alpha && s.f >= 0.0) {
      result.curve.bracket_hi = std::min(result.curve.bracket_hi, s.alpha);
    }
  }

  std::vector<DiscrepancySample> sorted = result.curve.samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].f < sorted[i - 1].f - 1e-8) result.curve.monotone = false;
  }
  return result;
}

double sup_norm(const std::function<double(double)>& fn, double a, double b, int n_grid) {
  if (n_grid < 3) throw std::invalid_argument("sup_norm: need at least 3 grid points");
  const auto value = [&fn](double x) { return std::abs(fn(x)); };

  double best_x = a;
  double best = -1.0;
  for (int i = 0; i <= n_grid; ++i) {
    const double x = a + (b - a) * i / n_grid;
    const double v = value(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }

  // golden-section refinement in the bracket around the best grid sample
  const double h = (b - a) / n_grid;
  double lo = std::max(a, best_x - h);
  double hi = std::min(b, best_x + h);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo);
  double x2 = lo + gr * (hi - lo);
  double v1 = value(x1), v2 = value(x2);
  for (int iter = 0; iter < 200 && hi - lo > 1e-14; ++iter) {
    if (v1 < v2) {
      lo = x1;
      x1 = x2;
      v1 = v2;
      x2 = lo + gr * (hi - lo);
      v2 = value(x2);
    } else {
      hi = x2;
      x2 = x1;
      v2 = v1;
      x1 = hi - gr * (hi - lo);
      v1 = value(x1);
    }
  }
  return std::max(best, std::max(v1, v2));
}

std::vector<IllposednessRow> illposedness_table(const std::vector<int>& n_list) {
  std::vector<IllposednessRow> rows;
  rows.reserve(n_list.size());
  const double pi = 3.14159265358979323846;
  for (int n : n_list) {
    if (n < 1) throw std::invalid_argument("illposedness_table: n must be >= 1");
    const auto delta_n = [n](double x) {
      return (x / n) * std::sin(n * x) + (1.0 / (double(n) * n)) * std::cos(n * x);
    };
    const auto q_err = [n](double x) {
      return 1.0 / (2.0 + std::cos(n * x)) - 0.5;
    };
    IllposednessRow row;
    row.n = n;
    // grid density scales with the oscillation count
    const int grid = std::max(20000, 200 * n);
    row.u_err_inf = sup_norm(delta_n, 0.0, pi, grid);
    row.q_err_inf = sup_norm(q_err, 0.0, pi, grid);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace coeffinv
