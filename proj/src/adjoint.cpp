#include "coeffinv/adjoint.hpp"

namespace coeffinv {

DofField solve_adjoint(const Factorization& factorization, const DofField& u,
                       const DofField& data, std::span<const double> cell_mask) {
  if (u.values.size() != data.values.size()) {
    throw std::invalid_argument("solve_adjoint: u and data live on different meshes");
  }
  const Eigen::VectorXd misfit_source =
      assemble_mass(*u.mesh, cell_mask) * (u.values - data.values);
  DofField lambda;
  lambda.mesh = u.mesh;
  lambda.values = factorization.solve_dirichlet_zero(-misfit_source);
  return lambda;
}

Eigen::VectorXd gradient_wrt_coefficient(const Mesh& mesh, const DofField& u,
                                         const DofField& lambda) {
  const int nv = mesh.n_vertices();
  if (u.values.size() != nv || lambda.values.size() != nv) {
    throw std::invalid_argument("gradient_wrt_coefficient: dimension mismatch");
  }
  const int vpc = mesh.vertices_per_cell();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(nv);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto cv = mesh.cell(c);
    // constant per-cell gradients: (sum_i lambda_i G_i) . (sum_j u_j G_j)
    double lam_d[2] = {0.0, 0.0};
    double u_d[2] = {0.0, 0.0};
    for (int i = 0; i < vpc; ++i) {
      for (int d = 0; d < mesh.dim; ++d) {
        lam_d[d] += lambda.values[cv[i]] * mesh.basis_gradient(c, i, d);
        u_d[d] += u.values[cv[i]] * mesh.basis_gradient(c, i, d);
      }
    }
    double dot = 0.0;
    for (int d = 0; d < mesh.dim; ++d) dot += lam_d[d] * u_d[d];
    // d(qbar)/dq_k = 1/(d+1) for each cell vertex k
    const double contribution = dot * mesh.cell_measure(c) / vpc;
    for (int i = 0; i < vpc; ++i) grad[cv[i]] += contribution;
  }
  return grad;
}

AdjointState adjoint_gradient(const Factorization& factorization, const DofField& u,
                              const DofField& data, std::span<const double> cell_mask) {
  AdjointState state;
  state.lambda = solve_adjoint(factorization, u, data, cell_mask);
  state.grad_q = gradient_wrt_coefficient(*u.mesh, u, state.lambda);
  return state;
}

}  // namespace coeffinv
