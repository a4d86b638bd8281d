#include "coeffinv/problem.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "coeffinv/rng.hpp"

namespace coeffinv {

namespace {

constexpr double kPi = 3.14159265358979323846;

ManufacturedCase case_1d(const std::string& id) {
  // solution u = sin^2(2 pi x); u' = 2 pi sin(4 pi x); u'' = 8 pi^2 cos(4 pi x)
  const ScalarFn u = [](double x, double) {
    const double s = std::sin(2.0 * kPi * x);
    return s * s;
  };
  const auto du = [](double x) { return 2.0 * kPi * std::sin(4.0 * kPi * x); };
  const auto d2u = [](double x) { return 8.0 * kPi * kPi * std::cos(4.0 * kPi * x); };

  ManufacturedCase mc;
  mc.coefficient_id = id;
  mc.dim = 1;
  mc.u = u;
  if (id == "const") {
    mc.q = [](double, double) { return 1.0; };
    mc.f = [d2u](double x, double) { return -d2u(x); };
  } else if (id == "linear") {
    mc.q = [](double x, double) { return 1.0 + x; };
    mc.f = [du, d2u](double x, double) { return -(du(x) + (1.0 + x) * d2u(x)); };
  } else if (id == "quadratic") {
    mc.q = [](double x, double) { return 1.0 + x * x; };
    mc.f = [du, d2u](double x, double) { return -(2.0 * x * du(x) + (1.0 + x * x) * d2u(x)); };
  } else if (id == "sine") {
    mc.q = [](double x, double) { return 1.0 + 0.5 * std::sin(2.0 * kPi * x); };
    mc.f = [du, d2u](double x, double) {
      const double dq = kPi * std::cos(2.0 * kPi * x);
      const double q = 1.0 + 0.5 * std::sin(2.0 * kPi * x);
      return -(dq * du(x) + q * d2u(x));
    };
  } else if (id == "step") {
    mc.q = [](double x, double) { return x < 0.5 ? 0.5 : 1.5; };
    mc.u = [](double, double) { return 0.0; };  // reference computed by FEM
    mc.f = [](double, double) { return 10.0; };
    mc.fem_reference = true;
  } else {
    throw std::invalid_argument("builtin_case: unknown 1D coefficient id '" + id + "'");
  }
  return mc;
}

ManufacturedCase case_2d(const std::string& id) {
  // solution u = sin(pi x) sin(pi y); laplacian = -2 pi^2 u
  const ScalarFn u = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
  const auto ux = [](double x, double y) { return kPi * std::cos(kPi * x) * std::sin(kPi * y); };
  const auto uy = [](double x, double y) { return kPi * std::sin(kPi * x) * std::cos(kPi * y); };

  ManufacturedCase mc;
  mc.coefficient_id = id;
  mc.dim = 2;
  mc.u = u;
  if (id == "const") {
    mc.q = [](double, double) { return 1.0; };
    mc.f = [u](double x, double y) { return 2.0 * kPi * kPi * u(x, y); };
  } else if (id == "linear") {
    mc.q = [](double x, double y) { return 1.0 + x + y; };
    mc.f = [=](double x, double y) {
      return -(ux(x, y) + uy(x, y)) + 2.0 * kPi * kPi * (1.0 + x + y) * u(x, y);
    };
  } else if (id == "quadratic") {
    mc.q = [](double x, double y) { return 1.0 + x * x + y * y; };
    mc.f = [=](double x, double y) {
      return -(2.0 * x * ux(x, y) + 2.0 * y * uy(x, y)) +
             2.0 * kPi * kPi * (1.0 + x * x + y * y) * u(x, y);
    };
  } else if (id == "sine") {
    mc.q = [](double x, double y) {
      return 1.0 + 0.5 * std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
    };
    mc.f = [=](double x, double y) {
      const double qx = kPi * std::cos(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
      const double qy = kPi * std::sin(2.0 * kPi * x) * std::cos(2.0 * kPi * y);
      const double q = 1.0 + 0.5 * std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
      return -(qx * ux(x, y) + qy * uy(x, y)) + 2.0 * kPi * kPi * q * u(x, y);
    };
  } else {
    throw std::invalid_argument("builtin_case: unknown 2D coefficient id '" + id + "'");
  }
  return mc;
}

void add_interior_noise(const Mesh& mesh, Eigen::VectorXd& values, double delta,
                        std::uint64_t seed) {
  if (delta == 0.0) return;
  SplitMix64 rng(seed);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (!mesh.is_boundary(v)) values[v] += delta * rng.next_gaussian();
  }
}

}  // namespace

ManufacturedCase builtin_case(const std::string& coefficient_id, int dim) {
  if (dim == 1) return case_1d(coefficient_id);
  if (dim == 2) return case_2d(coefficient_id);
  throw std::invalid_argument("builtin_case: dim must be 1 or 2");
}

int InverseProblem::parameter_count() const {
  if (prior == PriorKind::FemSpace) return mesh->n_vertices();
  return Network(network_layers).parameter_count();
}

std::pair<DofField, DofField> make_synthetic_data(const MeshPtr& mesh,
                                                  const ManufacturedCase& mcase, double delta,
                                                  std::uint64_t noise_seed) {
  if (delta < 0.0 || !std::isfinite(delta)) {
    throw std::invalid_argument("make_synthetic_data: noise level must be finite and >= 0");
  }
  if (mcase.dim != mesh->dim) {
    throw std::invalid_argument("make_synthetic_data: case dimension does not match mesh");
  }

  DofField forcing = interpolate(mcase.f, mesh);
  DofField data;
  if (!mcase.fem_reference) {
    data = interpolate(mcase.u, mesh);
  } else {
    // reference from a mesh with 4x as many cells to avoid committing the
    // inverse crime; structured meshes share the coarse vertices exactly
    if (mesh->dim != 1) {
      throw std::invalid_argument("make_synthetic_data: FEM reference data is 1D only");
    }
    const int n_coarse = mesh->n_cells();
    const MeshPtr fine = build_interval_mesh(4 * n_coarse, 1.0);
    const DofField q_fine = interpolate(mcase.q, fine);
    const DofField f_fine = interpolate(mcase.f, fine);
    const BoundaryValues g_fine{{0, 0.0}, {fine->n_vertices() - 1, 0.0}};
    const DofField u_fine = solve_forward(assemble_system(fine, q_fine, f_fine, g_fine));
    data.mesh = mesh;
    data.values.resize(mesh->n_vertices());
    for (int v = 0; v <= n_coarse; ++v) data.values[v] = u_fine.values[4 * v];
  }
  add_interior_noise(*mesh, data.values, delta, noise_seed);
  return {std::move(forcing), std::move(data)};
}

double misfit(const DofField& u, const DofField& data, std::span<const double> cell_mask) {
  if (u.values.size() != data.values.size()) {
    throw std::invalid_argument("misfit: fields live on different meshes");
  }
  const Eigen::VectorXd e = u.values - data.values;
  return 0.5 * e.dot(assemble_mass(*u.mesh, cell_mask) * e);
}

std::vector<double> boundary_mask(const Mesh& mesh, double d) {
  if (mesh.dim != 1) throw std::invalid_argument("boundary_mask: 1D meshes only");
  if (!(d > 0.0) || d > 0.5) throw std::invalid_argument("boundary_mask: d must be in (0, 0.5]");
  std::vector<double> weights(static_cast<std::size_t>(mesh.n_cells()), 0.0);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto cv = mesh.cell(c);
    const double a = mesh.x(cv[0]);
    const double b = mesh.x(cv[1]);
    const double left = std::max(0.0, std::min(b, d) - a);
    const double right = std::max(0.0, b - std::max(a, 1.0 - d));
    weights[c] = (left + right) / (b - a);
  }
  return weights;
}

DofField realize_coefficient(const InverseProblem& problem, const Eigen::VectorXd& params) {
  DofField q;
  q.mesh = problem.mesh;
  if (problem.prior == PriorKind::FemSpace) {
    if (params.size() != problem.mesh->n_vertices()) {
      throw std::invalid_argument("realize_coefficient: parameter count does not match vertices");
    }
    q.values = params;
  } else {
    Network net(problem.network_layers);
    net.unflatten(params);
    q.values.resize(problem.mesh->n_vertices());
    for (int v = 0; v < problem.mesh->n_vertices(); ++v) {
      q.values[v] = net.forward(problem.mesh->x(v), problem.mesh->y(v));
    }
  }
  return q;
}

EvalReport objective_and_gradient(const InverseProblem& problem, const Eigen::VectorXd& params) {
  const auto t0 = std::chrono::steady_clock::now();
  if (params.size() != problem.parameter_count()) {
    throw std::invalid_argument("objective_and_gradient: wrong parameter count");
  }
  if (!problem.cell_mask.empty()) {
    if (static_cast<int>(problem.cell_mask.size()) != problem.mesh->n_cells()) {
      throw std::invalid_argument("objective_and_gradient: mask length must match cell count");
    }
    for (double w : problem.cell_mask) {
      if (!(w >= 0.0 && w <= 1.0)) {
        throw std::invalid_argument("objective_and_gradient: mask weights must lie in [0, 1]");
      }
    }
  }

  const DofField q = realize_coefficient(problem, params);

  EvalReport report;
  DofField u;
  Eigen::VectorXd grad_q;
  try {
    const SparseSystem system = assemble_system(problem.mesh, q, problem.forcing, problem.boundary);
    const Factorization factorization(system);
    u = solve_forward(system, factorization);
    report.forward_solves = 1;
    report.objective = misfit(u, problem.data, problem.cell_mask);
    grad_q = adjoint_gradient(factorization, u, problem.data, problem.cell_mask).grad_q;
  } catch (const SingularSystem& err) {
    throw EvaluationFailure(err.what(), q.values);
  }

  if (problem.reg.kind != Regularization::Kind::None) {
    const auto mass = assemble_mass(*problem.mesh);
    Eigen::VectorXd dev = q.values;
    if (problem.reg.kind == Regularization::Kind::GeneralizedTikhonov &&
        problem.reg.q_star.size() > 0) {
      dev -= problem.reg.q_star;
    }
    const Eigen::VectorXd mass_dev = mass * dev;
    report.objective += 0.5 * problem.reg.alpha * dev.dot(mass_dev);
    grad_q += problem.reg.alpha * mass_dev;
  }

  if (problem.prior == PriorKind::FemSpace) {
    report.gradient = std::move(grad_q);
  } else {
    // chain rule through the network: grad_p = sum_k grad_q[k] dq(x_k)/dp
    Network net(problem.network_layers);
    net.unflatten(params);
    report.gradient = Eigen::VectorXd::Zero(params.size());
    for (int v = 0; v < problem.mesh->n_vertices(); ++v) {
      report.gradient +=
          grad_q[v] * net.backprop_params(problem.mesh->x(v), problem.mesh->y(v));
    }
  }

  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<int> default_network_layers(int dim) {
  if (dim == 1) return {1, 3, 1};
  if (dim == 2) return {2, 10, 1};
  throw std::invalid_argument("default_network_layers: dim must be 1 or 2");
}

Eigen::VectorXd initial_parameters(const InverseProblem& problem, std::uint64_t weight_seed) {
  if (problem.prior == PriorKind::Network) {
    return init_network(problem.network_layers, weight_seed).flatten();
  }
  const Network net = init_network(default_network_layers(problem.mesh->dim), weight_seed);
  Eigen::VectorXd q0(problem.mesh->n_vertices());
  for (int v = 0; v < problem.mesh->n_vertices(); ++v) {
    q0[v] = net.forward(problem.mesh->x(v), problem.mesh->y(v));
  }
  return q0;
}

double expected_noise_measure(const Mesh& mesh, double delta) {
  const auto mass = assemble_mass(mesh);
  double sum = 0.0;
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    if (!mesh.is_boundary(v)) sum += mass.coeff(v, v);
  }
  return delta * delta * sum;
}

double realized_noise_measure(const DofField& data_noisy, const DofField& data_clean) {
  const Eigen::VectorXd e = data_noisy.values - data_clean.values;
  return e.dot(assemble_mass(*data_noisy.mesh) * e);
}

}  // namespace coeffinv
