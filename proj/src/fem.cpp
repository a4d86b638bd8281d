#include "coeffinv/fem.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

namespace coeffinv {

namespace {

// Gauss-Legendre rules on [-1, 1]; n points integrate degree 2n-1 exactly.
struct GaussRule1D {
  std::span<const double> points;
  std::span<const double> weights;
};

GaussRule1D gauss_rule_1d(int n) {
  static const std::array<double, 2> p2{-0.5773502691896257, 0.5773502691896257};
  static const std::array<double, 2> w2{1.0, 1.0};
  static const std::array<double, 3> p3{-0.7745966692414834, 0.0, 0.7745966692414834};
  static const std::array<double, 3> w3{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  static const std::array<double, 4> p4{-0.8611363115940526, -0.3399810435848563,
                                        0.3399810435848563, 0.8611363115940526};
  static const std::array<double, 4> w4{0.3478548451374538, 0.6521451548625461,
                                        0.6521451548625461, 0.3478548451374538};
  static const std::array<double, 5> p5{-0.9061798459386640, -0.5384693101056831, 0.0,
                                        0.5384693101056831, 0.9061798459386640};
  static const std::array<double, 5> w5{0.2369268850561891, 0.4786286704993665,
                                        0.5688888888888889, 0.4786286704993665,
                                        0.2369268850561891};
  switch (n) {
    case 2: return {p2, w2};
    case 3: return {p3, w3};
    case 4: return {p4, w4};
    case 5: return {p5, w5};
    default: throw std::invalid_argument("gauss_rule_1d: unsupported point count");
  }
}

// Degree-5 7-point rule on the reference triangle, barycentric coordinates.
struct TriRule {
  std::array<std::array<double, 3>, 7> bary;
  std::array<double, 7> weights;  // sum to 1, scale by cell area
};

const TriRule& tri_rule_degree5() {
  static const TriRule rule = [] {
    TriRule r{};
    const double a1 = 0.4701420641051151;
    const double a2 = 0.1012865073234563;
    const double w0 = 0.225;
    const double w1 = 0.1323941527885062;
    const double w2 = 0.1259391805448272;
    r.bary[0] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    r.weights[0] = w0;
    r.bary[1] = {a1, a1, 1.0 - 2.0 * a1};
    r.bary[2] = {a1, 1.0 - 2.0 * a1, a1};
    r.bary[3] = {1.0 - 2.0 * a1, a1, a1};
    r.weights[1] = r.weights[2] = r.weights[3] = w1;
    r.bary[4] = {a2, a2, 1.0 - 2.0 * a2};
    r.bary[5] = {a2, 1.0 - 2.0 * a2, a2};
    r.bary[6] = {1.0 - 2.0 * a2, a2, a2};
    r.weights[4] = r.weights[5] = r.weights[6] = w2;
    return r;
  }();
  return rule;
}

std::atomic<bool> warned_nonpositive_q{false};

void warn_nonpositive(int count) {
  if (!warned_nonpositive_q.exchange(true)) {
    std::cerr << "coeffinv: assemble_system: coefficient is non-positive at " << count
              << " vertices; proceeding (further warnings suppressed)\n";
  }
}

}  // namespace

Factorization::Factorization(const SparseSystem& system) : constrained_(system.constrained_rows) {
  // SimplicialLDLT wants column-major storage; for a symmetric matrix the
  // conversion is a plain copy of the same numbers.
  Eigen::SparseMatrix<double> cols(system.matrix);
  ldlt_.compute(cols);
  if (ldlt_.info() != Eigen::Success) {
    throw SingularSystem("factorization failed (matrix numerically singular or not factorizable)");
  }
  double max_diag = 0.0;
  for (int i = 0; i < system.matrix.rows(); ++i) {
    max_diag = std::max(max_diag, std::abs(system.matrix.coeff(i, i)));
  }
  const auto& d = ldlt_.vectorD();
  const double tol = 1e-14 * max_diag;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) < tol) {
      throw SingularSystem("near-zero factorization pivot: coefficient degenerates on part of the domain");
    }
  }
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& rhs) const {
  return ldlt_.solve(rhs);
}

Eigen::VectorXd Factorization::solve_dirichlet_zero(Eigen::VectorXd rhs) const {
  for (int i : constrained_) rhs[i] = 0.0;
  return ldlt_.solve(rhs);
}

SparseSystem assemble_system(const MeshPtr& mesh, const DofField& q, const DofField& f,
                             const BoundaryValues& g) {
  const Mesh& m = *mesh;
  const int nv = m.n_vertices();
  const int vpc = m.vertices_per_cell();
  if (q.values.size() != nv || f.values.size() != nv) {
    throw std::invalid_argument("assemble_system: field size does not match mesh");
  }
  if (!q.values.allFinite() || !f.values.allFinite()) {
    throw std::invalid_argument("assemble_system: non-finite field values");
  }
  const int nonpos = static_cast<int>((q.values.array() <= 0.0).count());
  if (nonpos > 0) warn_nonpositive(nonpos);

  // Dirichlet lift: full vector with g on the boundary, 0 elsewhere.
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(nv);
  for (const auto& [v, val] : g) {
    if (v < 0 || v >= nv || !m.is_boundary(v)) {
      throw std::invalid_argument("assemble_system: boundary value on non-boundary vertex");
    }
    lift[v] = val;
  }

  Eigen::VectorXd rhs = assemble_mass(m) * f.values;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(m.n_cells()) * vpc * vpc + m.boundary_vertices.size());
  for (int c = 0; c < m.n_cells(); ++c) {
    const auto cv = m.cell(c);
    double qbar = 0.0;
    for (int v : cv) qbar += q.values[v];
    qbar /= vpc;  // mean of the P1 interpolant over the cell, exact for linear q
    const double scale = qbar * m.cell_measure(c);
    for (int i = 0; i < vpc; ++i) {
      const int gi = cv[i];
      for (int j = 0; j < vpc; ++j) {
        const int gj = cv[j];
        double dot = 0.0;
        for (int d = 0; d < m.dim; ++d) {
          dot += m.basis_gradient(c, i, d) * m.basis_gradient(c, j, d);
        }
        const double k = scale * dot;
        const bool bi = m.is_boundary(gi);
        const bool bj = m.is_boundary(gj);
        if (!bi && !bj) {
          triplets.emplace_back(gi, gj, k);
        } else if (!bi && bj) {
          rhs[gi] -= k * lift[gj];  // symmetric elimination compensation
        }
      }
    }
  }
  for (int b : m.boundary_vertices) {
    triplets.emplace_back(b, b, 1.0);
    rhs[b] = lift[b];
  }

  SparseSystem system;
  system.mesh = mesh;
  system.matrix.resize(nv, nv);
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.rhs = std::move(rhs);
  system.constrained_rows = m.boundary_vertices;
  return system;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_mass(const Mesh& mesh,
                                                           std::span<const double> cell_weights) {
  if (!cell_weights.empty() && static_cast<int>(cell_weights.size()) != mesh.n_cells()) {
    throw std::invalid_argument("assemble_mass: weight count does not match cell count");
  }
  const int nv = mesh.n_vertices();
  const int vpc = mesh.vertices_per_cell();
  // consistent P1 element mass: measure/((d+1)(d+2)) * (1 + delta_ij)
  const double off = 1.0 / ((vpc) * (vpc + 1.0));
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_cells()) * vpc * vpc);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const double w = cell_weights.empty() ? 1.0 : cell_weights[c];
    if (w == 0.0) continue;
    const auto cv = mesh.cell(c);
    const double scale = w * mesh.cell_measure(c) * off;
    for (int i = 0; i < vpc; ++i) {
      for (int j = 0; j < vpc; ++j) {
        triplets.emplace_back(cv[i], cv[j], scale * (i == j ? 2.0 : 1.0));
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> mass(nv, nv);
  mass.setFromTriplets(triplets.begin(), triplets.end());
  return mass;
}

DofField solve_forward(const SparseSystem& system) {
  return solve_forward(system, Factorization(system));
}

DofField solve_forward(const SparseSystem& system, const Factorization& factorization) {
  DofField u;
  u.mesh = system.mesh;
  u.values = factorization.solve(system.rhs);
  const double residual = (system.matrix * u.values - system.rhs).lpNorm<Eigen::Infinity>();
  const double scale = std::max(system.rhs.lpNorm<Eigen::Infinity>(), 1.0);
  if (!u.values.allFinite() || residual > 1e-10 * scale) {
    throw SingularSystem("forward solve residual too large; system is ill-conditioned");
  }
  return u;
}

double error_norm(const DofField& u, const ScalarFn& exact, int order) {
  if (order < 4) throw std::invalid_argument("error_norm: order must be >= 4");
  const Mesh& m = *u.mesh;
  double total = 0.0;
  if (m.dim == 1) {
    // smallest point count with 2n-1 >= order
    const int n = std::min(5, (order + 2) / 2);
    if (2 * n - 1 < order) throw std::invalid_argument("error_norm: order above 9 unsupported in 1D");
    const auto rule = gauss_rule_1d(n);
    for (int c = 0; c < m.n_cells(); ++c) {
      const auto cv = m.cell(c);
      const double a = m.x(cv[0]);
      const double b = m.x(cv[1]);
      const double ua = u.values[cv[0]];
      const double ub = u.values[cv[1]];
      double acc = 0.0;
      for (std::size_t k = 0; k < rule.points.size(); ++k) {
        const double t = 0.5 * (rule.points[k] + 1.0);  // in [0,1]
        const double xq = a + (b - a) * t;
        const double uh = ua + (ub - ua) * t;
        const double d = uh - exact(xq, 0.0);
        acc += rule.weights[k] * d * d;
      }
      total += 0.5 * (b - a) * acc;
    }
  } else {
    if (order > 5) throw std::invalid_argument("error_norm: order above 5 unsupported in 2D");
    const TriRule& rule = tri_rule_degree5();
    for (int c = 0; c < m.n_cells(); ++c) {
      const auto cv = m.cell(c);
      double acc = 0.0;
      for (std::size_t k = 0; k < rule.bary.size(); ++k) {
        double xq = 0.0, yq = 0.0, uh = 0.0;
        for (int i = 0; i < 3; ++i) {
          xq += rule.bary[k][i] * m.x(cv[i]);
          yq += rule.bary[k][i] * m.y(cv[i]);
          uh += rule.bary[k][i] * u.values[cv[i]];
        }
        const double d = uh - exact(xq, yq);
        acc += rule.weights[k] * d * d;
      }
      total += m.cell_measure(c) * acc;
    }
  }
  if (!std::isfinite(total)) throw std::domain_error("error_norm: non-finite integrand");
  return std::sqrt(total);
}

DofField interpolate(const ScalarFn& fn, const MeshPtr& mesh) {
  DofField field;
  field.mesh = mesh;
  field.values.resize(mesh->n_vertices());
  for (int v = 0; v < mesh->n_vertices(); ++v) {
    const double val = fn(mesh->x(v), mesh->y(v));
    if (!std::isfinite(val)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "interpolate: non-finite value at vertex %d (x=%.6g, y=%.6g)",
                    v, mesh->x(v), mesh->y(v));
      throw std::domain_error(buf);
    }
    field.values[v] = val;
  }
  return field;
}

BoundaryValues boundary_values(const Mesh& mesh, const ScalarFn& fn) {
  BoundaryValues g;
  for (int v : mesh.boundary_vertices) g[v] = fn(mesh.x(v), mesh.y(v));
  return g;
}

void write_field_csv(const DofField& field, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  const Mesh& m = *field.mesh;
  out << (m.dim == 1 ? "index,x,value\n" : "index,x,y,value\n");
  char buf[96];
  for (int v = 0; v < m.n_vertices(); ++v) {
    out << v;
    std::snprintf(buf, sizeof(buf), ",%.17g", m.x(v));
    out << buf;
    if (m.dim == 2) {
      std::snprintf(buf, sizeof(buf), ",%.17g", m.y(v));
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g", field.values[v]);
    out << buf << '\n';
  }
}

}  // namespace coeffinv
