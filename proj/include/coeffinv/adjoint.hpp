#pragma once

#include <span>

#include "coeffinv/fem.hpp"

namespace coeffinv {

/// Adjoint variable plus the misfit derivative with respect to the vertex
/// values of the coefficient.
struct AdjointState {
  DofField lambda;
  Eigen::VectorXd grad_q;
};

/// Solves A lambda = -M_mask (u - data) with homogeneous Dirichlet rows,
/// reusing the forward factorization (A is symmetric). cell_mask holds
/// per-cell observation weights; empty means full observation.
DofField solve_adjoint(const Factorization& factorization, const DofField& u,
                       const DofField& data, std::span<const double> cell_mask = {});

/// grad_q[k] = lambda^T (dA/dq_k) u, where dA/dq_k assembles the stiffness
/// with the coefficient replaced by the basis function of vertex k. This is
/// the exact derivative of the discrete misfit through the eliminated
/// Dirichlet system (lambda vanishes on constrained rows; the boundary lift
/// enters through u).
Eigen::VectorXd gradient_wrt_coefficient(const Mesh& mesh, const DofField& u,
                                         const DofField& lambda);

/// Convenience: adjoint solve followed by the coefficient gradient.
AdjointState adjoint_gradient(const Factorization& factorization, const DofField& u,
                              const DofField& data, std::span<const double> cell_mask = {});

}  // namespace coeffinv
