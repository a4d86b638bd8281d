#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>

#include "coeffinv/mesh.hpp"

namespace coeffinv {

/// Analytic scalar field; the second coordinate is ignored on 1D meshes.
using ScalarFn = std::function<double(double, double)>;

/// Values on the P1 (vertex) degrees of freedom of a mesh.
struct DofField {
  MeshPtr mesh;
  Eigen::VectorXd values;
};

/// Thrown when a factorization pivot degenerates, which signals coefficient
/// degeneracy (q vanishing or changing sign on an open set).
class SingularSystem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dirichlet data: vertex index -> prescribed value.
using BoundaryValues = std::map<int, double>;

/// Stiffness system for -div(q grad u) = f after symmetric Dirichlet
/// elimination: constrained rows/columns are zeroed, the diagonal set to 1
/// and the right-hand side compensated, so the matrix stays symmetric.
struct SparseSystem {
  MeshPtr mesh;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;  // CSR
  Eigen::VectorXd rhs;
  std::vector<int> constrained_rows;
};

/// LDLT factorization of an assembled system. The matrix is symmetric, so
/// the same factorization serves the forward and the adjoint solve.
class Factorization {
 public:
  explicit Factorization(const SparseSystem& system);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Zeroes the constrained entries of rhs before solving; used for the
  /// adjoint where the boundary condition is homogeneous.
  Eigen::VectorXd solve_dirichlet_zero(Eigen::VectorXd rhs) const;

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  std::vector<int> constrained_;
};

/// Assembles stiffness (q interpolated P1, quadrature exact for the
/// integrand degree) and the load from the P1 interpolant of f through the
/// consistent mass matrix. q should be positive everywhere; non-positive
/// values get a one-time warning and assembly proceeds, leaving degeneracy
/// detection to the factorization.
SparseSystem assemble_system(const MeshPtr& mesh, const DofField& q, const DofField& f,
                             const BoundaryValues& g);

/// Consistent P1 mass matrix, optionally weighted per cell (empty weights
/// mean weight 1 on every cell). No boundary treatment.
Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_mass(const Mesh& mesh,
                                                           std::span<const double> cell_weights = {});

DofField solve_forward(const SparseSystem& system);
DofField solve_forward(const SparseSystem& system, const Factorization& factorization);

/// L2 norm of (u_h - exact) by per-cell Gauss quadrature of at least the
/// given polynomial degree (supported: 4..9 in 1D, 4..5 in 2D).
double error_norm(const DofField& u, const ScalarFn& exact, int order = 5);

/// Vertex-wise evaluation; throws std::domain_error naming the vertex
/// location if fn evaluates to a non-finite value.
DofField interpolate(const ScalarFn& fn, const MeshPtr& mesh);

/// Dirichlet values of fn on every boundary vertex.
BoundaryValues boundary_values(const Mesh& mesh, const ScalarFn& fn);

/// CSV dump: index,x[,y],value.
void write_field_csv(const DofField& field, const std::filesystem::path& path);

}  // namespace coeffinv
