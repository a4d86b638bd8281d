#include "coeffinv/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>

namespace coeffinv {

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr double kAlphaMax = 1e10;
constexpr int kMaxBracket = 25;
constexpr int kMaxZoom = 40;

struct Point {
  double alpha = 0.0;
  double f = std::numeric_limits<double>::infinity();
  double dphi = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd x;
  Eigen::VectorXd g;
  bool valid = false;  // finite f and g
};

struct LineSearchContext {
  const Objective& objective;
  const Eigen::VectorXd& x0;
  const Eigen::VectorXd& direction;
  double f0;
  double dphi0;
  int evaluations = 0;

  Point at(double alpha) {
    Point p;
    p.alpha = alpha;
    p.x = x0 + alpha * direction;
    ++evaluations;
    try {
      auto [f, g] = objective(p.x);
      if (std::isfinite(f) && g.allFinite()) {
        p.f = f;
        p.g = std::move(g);
        p.dphi = p.g.dot(direction);
        p.valid = true;
      }
    } catch (const std::runtime_error&) {
      // domain failure along the ray: treat as +inf and step shorter
    }
    return p;
  }

  bool sufficient_decrease(const Point& p) const {
    return p.valid && p.f <= f0 + kC1 * p.alpha * dphi0;
  }
  bool curvature_ok(const Point& p) const { return std::abs(p.dphi) <= -kC2 * dphi0; }
};

// minimizer of the cubic through (a.alpha, a.f, a.dphi), (b.alpha, b.f, b.dphi)
std::optional<double> cubic_minimizer(const Point& a, const Point& b) {
  const double da = a.dphi, db = b.dphi;
  const double d1 = da + db - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::nullopt;
  const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::nullopt;
  const double alpha = b.alpha - (b.alpha - a.alpha) * (db + d2 - d1) / denom;
  if (!std::isfinite(alpha)) return std::nullopt;
  return alpha;
}

std::optional<Point> zoom(LineSearchContext& ctx, Point lo, Point hi) {
  for (int iter = 0; iter < kMaxZoom; ++iter) {
    const double span = hi.alpha - lo.alpha;
    if (std::abs(span) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) return std::nullopt;

    double trial_alpha = 0.0;
    bool have_trial = false;
    if (lo.valid && hi.valid) {
      if (auto c = cubic_minimizer(lo, hi)) {
        const double lo_a = std::min(lo.alpha, hi.alpha);
        const double hi_a = std::max(lo.alpha, hi.alpha);
        const double margin = 0.1 * (hi_a - lo_a);
        if (*c > lo_a + margin && *c < hi_a - margin) {
          trial_alpha = *c;
          have_trial = true;
        }
      }
    }
    if (!have_trial) trial_alpha = lo.alpha + 0.5 * span;

    Point trial = ctx.at(trial_alpha);
    if (!ctx.sufficient_decrease(trial) || trial.f >= lo.f) {
      hi = std::move(trial);
    } else {
      if (ctx.curvature_ok(trial)) return trial;
      if (trial.dphi * span >= 0.0) hi = lo;
      lo = std::move(trial);
    }
  }
  return std::nullopt;
}

std::optional<Point> strong_wolfe_search(LineSearchContext& ctx, double alpha_init) {
  Point prev;
  prev.alpha = 0.0;
  prev.f = ctx.f0;
  prev.dphi = ctx.dphi0;
  prev.valid = true;

  double alpha = alpha_init;
  for (int iter = 0; iter < kMaxBracket; ++iter) {
    Point current = ctx.at(alpha);
    if (!current.valid || !ctx.sufficient_decrease(current) ||
        (iter > 0 && current.f >= prev.f)) {
      return zoom(ctx, std::move(prev), std::move(current));
    }
    if (ctx.curvature_ok(current)) return current;
    if (current.dphi >= 0.0) return zoom(ctx, std::move(current), std::move(prev));
    if (alpha >= kAlphaMax) return std::nullopt;
    prev = std::move(current);
    alpha = std::min(2.0 * alpha, kAlphaMax);
  }
  return std::nullopt;
}

}  // namespace

OptimizationResult bfgs_minimize(const Objective& objective, Eigen::VectorXd x0, double gtol,
                                 int max_iter) {
  if (!(gtol > 0.0)) throw std::invalid_argument("bfgs_minimize: gtol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = x0.size();

  OptimizationResult result;
  auto [f, g] = objective(x0);
  result.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NonFiniteEvaluation("bfgs_minimize: objective is not finite at the starting point");
  }

  Eigen::VectorXd x = std::move(x0);
  double gnorm = g.lpNorm<Eigen::Infinity>();

  const auto initial_scale = [](double gn) {
    const double s = gn > 0.0 ? 1.0 / gn : 1.0;
    return std::clamp(s, 1e-8, 1e8);
  };
  Eigen::MatrixXd H = initial_scale(gnorm) * Eigen::MatrixXd::Identity(n, n);

  result.stop_reason = "max_iterations";
  if (gnorm <= gtol) {
    result.converged = true;
    result.stop_reason = "gtol";
    max_iter = 0;
  }

  for (int k = 0; k < max_iter; ++k) {
    Eigen::VectorXd p = -(H * g);
    double dphi0 = g.dot(p);
    if (dphi0 >= 0.0) {
      // fall back to scaled steepest descent if the model lost descent
      H = initial_scale(gnorm) * Eigen::MatrixXd::Identity(n, n);
      p = -(H * g);
      dphi0 = g.dot(p);
      if (dphi0 >= 0.0) {
        result.stop_reason = "no_descent_direction";
        break;
      }
    }

    LineSearchContext ctx{objective, x, p, f, dphi0};
    auto accepted = strong_wolfe_search(ctx, 1.0);
    result.evaluations += ctx.evaluations;
    if (!accepted) {
      result.stop_reason = "line_search_failure";
      break;
    }

    const Eigen::VectorXd s = accepted->x - x;
    const Eigen::VectorXd yv = accepted->g - g;
    x = std::move(accepted->x);
    f = accepted->f;
    g = std::move(accepted->g);
    gnorm = g.lpNorm<Eigen::Infinity>();
    result.iterations = k + 1;
    result.trace.push_back({f, gnorm, accepted->alpha});

    if (gnorm <= gtol) {
      result.converged = true;
      result.stop_reason = "gtol";
      break;
    }

    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      const Eigen::VectorXd Hy = H * yv;
      const double yHy = yv.dot(Hy);
      const double rho = 1.0 / sy;
      H.noalias() += ((sy + yHy) * rho * rho) * (s * s.transpose());
      H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    // else: curvature pair too degenerate, keep the previous inverse Hessian
  }

  result.params = std::move(x);
  result.f_final = f;
  result.gnorm_final = gnorm;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_trace_csv(const OptimizationResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "iter,objective,gnorm,step\n";
  char buf[128];
  int iter = 1;
  for (const TracePoint& t : result.trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", iter++, t.objective,
                  t.gradient_norm, t.step_length);
    out << buf;
  }
}

}  // namespace coeffinv
