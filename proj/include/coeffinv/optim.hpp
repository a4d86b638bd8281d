#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coeffinv {

/// Objective callable: returns (value, gradient). May throw
/// std::runtime_error for domain failures; during line-search trials such
/// failures are treated as infinite objective values and stepped around.
using Objective = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

class NonFiniteEvaluation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TracePoint {
  double objective;
  double gradient_norm;  // infinity norm
  double step_length;
};

struct OptimizationResult {
  Eigen::VectorXd params;
  int iterations = 0;
  double f_final = 0.0;
  double gnorm_final = 0.0;
  bool converged = false;
  std::string stop_reason;
  std::vector<TracePoint> trace;
  double wall_time = 0.0;
  int evaluations = 0;
};

/// Dense BFGS with strong-Wolfe line search (c1 = 1e-4, c2 = 0.9, cubic
/// interpolation). Stops when the infinity norm of the gradient drops to
/// gtol or after max_iter iterations. The initial inverse Hessian is the
/// identity scaled by 1/||grad0||_inf clamped to [1e-8, 1e8]; curvature
/// pairs with y^T s <= 1e-10 ||y|| ||s|| are skipped. A failed line search
/// returns the best point seen with converged = false.
OptimizationResult bfgs_minimize(const Objective& objective, Eigen::VectorXd x0, double gtol,
                                 int max_iter = 5000);

/// CSV dump of the iterate trace: iter,objective,gnorm,step.
void write_trace_csv(const OptimizationResult& result, const std::filesystem::path& path);

}  // namespace coeffinv
