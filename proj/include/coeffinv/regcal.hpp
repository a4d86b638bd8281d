#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "coeffinv/optim.hpp"
#include "coeffinv/problem.hpp"

namespace coeffinv {

class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DiscrepancySample {
  double alpha;
  double misfit_integral;  // integral of (u - data)^2 at the inner optimum
  double f;                // misfit_integral - noise_measure
};

struct DiscrepancyCurve {
  std::vector<DiscrepancySample> samples;  // in evaluation order
  std::optional<double> root;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  // false when the alpha-sorted samples decrease by more than the 1e-8
  // solver-noise tolerance somewhere
  bool monotone = true;
};

struct InnerSolveOptions {
  double gtol = 1e-6;
  int max_iter = 3000;
};

struct DiscrepancyEval {
  double f;
  double misfit_integral;
  OptimizationResult inner;
};

/// Solves the inner inverse problem to convergence with generalized
/// Tikhonov weight alpha starting from x0 and returns the Morozov
/// discrepancy: the misfit integral minus the supplied noise measure.
DiscrepancyEval discrepancy(const InverseProblem& problem, double alpha, double noise_measure,
                            const Eigen::VectorXd& x0, const InnerSolveOptions& opts = {});

/// Bisection on log(alpha) for a sign change of f; expands the bracket
/// geometrically (up to max_expand doublings per side) when the endpoints
/// do not straddle zero. Generic so the root logic is testable without
/// inverse solves.
double find_root_log_bisection(const std::function<double(double)>& f, double alpha_lo,
                               double alpha_hi, double rel_tol = 0.05, int max_expand = 6);

struct AlphaSearchResult {
  double alpha;
  DiscrepancyCurve curve;
};

/// Morozov calibration: root of the discrepancy over alpha. Inner solves
/// warm-start from the previous alpha's solution; each evaluation is a full
/// inverse solve, so the tolerance is deliberately loose.
AlphaSearchResult find_optimal_alpha(const InverseProblem& problem, double noise_measure,
                                     std::pair<double, double> bracket,
                                     const Eigen::VectorXd& x0, double rel_tol = 0.05,
                                     const InnerSolveOptions& opts = {});

struct IllposednessRow {
  int n;
  double u_err_inf;  // sup |u_n - u| on (0, pi)
  double q_err_inf;  // sup |q_n - q|
};

/// Reproduces the classic non-continuity example: on (0, pi) with u = x^2
/// and q = 1/2, the perturbed pairs q_n = (2 + cos(n x))^{-1},
/// u_n = u + (x/n) sin(n x) + (1/n^2) cos(n x) have data error going to 0
/// while the coefficient error stays at 1/2. Sup norms are taken on a dense
/// grid refined by golden-section search.
std::vector<IllposednessRow> illposedness_table(const std::vector<int>& n_list);

/// Sup of |fn| on (a, b): dense grid of n_grid points plus golden-section
/// refinement around the best sample.
double sup_norm(const std::function<double(double)>& fn, double a, double b, int n_grid = 20000);

}  // namespace coeffinv
