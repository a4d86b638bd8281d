#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coeffinv/adjoint.hpp"
#include "coeffinv/fem.hpp"
#include "coeffinv/net.hpp"

namespace coeffinv {

/// Exact coefficient/solution pair with the matching analytic forcing
/// f = -div(q grad u). For the discontinuous coefficient no analytic
/// solution is used; data comes from a finer FEM solve instead.
struct ManufacturedCase {
  std::string coefficient_id;
  int dim = 1;
  ScalarFn q;
  ScalarFn u;  // unused when fem_reference is set
  ScalarFn f;
  bool fem_reference = false;
};

/// Known coefficient ids: const, linear, quadratic, sine (1D and 2D) and
/// step (1D only, data from a 4x finer FEM solve).
ManufacturedCase builtin_case(const std::string& coefficient_id, int dim);

enum class PriorKind { FemSpace, Network };

struct Regularization {
  enum class Kind { None, Tikhonov, GeneralizedTikhonov };
  Kind kind = Kind::None;
  double alpha = 0.0;
  Eigen::VectorXd q_star;  // vertex values; empty means 0 (plain Tikhonov)
};

struct InverseProblem {
  MeshPtr mesh;
  DofField forcing;
  BoundaryValues boundary;
  DofField data;                  // measurements (noise already applied)
  std::vector<double> cell_mask;  // empty = observe everywhere
  PriorKind prior = PriorKind::Network;
  std::vector<int> network_layers;  // used when prior == Network
  Regularization reg;
  double noise_level = 0.0;
  std::uint64_t noise_seed = 0;

  int parameter_count() const;
};

struct EvalReport {
  double objective = 0.0;
  Eigen::VectorXd gradient;
  int forward_solves = 0;
  double wall_time = 0.0;
};

/// Raised when the forward operator degenerates during an evaluation; the
/// coefficient that produced the failure is attached for diagnosis.
class EvaluationFailure : public std::runtime_error {
 public:
  EvaluationFailure(const std::string& msg, Eigen::VectorXd coefficient)
      : std::runtime_error(msg), coefficient_snapshot(std::move(coefficient)) {}
  Eigen::VectorXd coefficient_snapshot;
};

/// Samples the analytic forcing and solution on the mesh and perturbs every
/// interior data point by delta * N(0,1) draws from the seeded stream;
/// boundary data stays exact. For fem_reference cases the data comes from a
/// mesh with 4x as many cells, sampled at the coarse vertices.
std::pair<DofField, DofField> make_synthetic_data(const MeshPtr& mesh,
                                                  const ManufacturedCase& mcase, double delta,
                                                  std::uint64_t noise_seed);

/// J = 1/2 * integral over the masked region of (u - data)^2, through the
/// mask-weighted consistent mass matrix.
double misfit(const DofField& u, const DofField& data, std::span<const double> cell_mask = {});

/// Per-cell weights observing only [0,d] and [1-d,1]; cells straddling a
/// cut get the covered fraction. 1D meshes only, 0 < d <= 0.5.
std::vector<double> boundary_mask(const Mesh& mesh, double d);

/// Realizes the coefficient from the active parameters (vertex values for
/// the FEM-space prior, network evaluation at the vertices otherwise),
/// solves forward and adjoint, and assembles objective and gradient
/// including the regularization terms.
EvalReport objective_and_gradient(const InverseProblem& problem, const Eigen::VectorXd& params);

/// Coefficient realized by the given parameters (no solve).
DofField realize_coefficient(const InverseProblem& problem, const Eigen::VectorXd& params);

/// Default architectures: (1,3,1) in 1D and (2,10,1) in 2D.
std::vector<int> default_network_layers(int dim);

/// Starting point for the optimizer. Both priors start from the same
/// initial coefficient: the freshly initialized network. FEM-space gets its
/// vertex samples, the network prior gets the flattened parameters.
Eigen::VectorXd initial_parameters(const InverseProblem& problem, std::uint64_t weight_seed);

/// Expected squared L2 norm of the interior noise: delta^2 times the sum of
/// the interior diagonal of the consistent mass matrix.
double expected_noise_measure(const Mesh& mesh, double delta);

/// Realized squared L2 norm of the noise actually drawn: ||data_noisy -
/// data_clean||^2 in the mass inner product.
double realized_noise_measure(const DofField& data_noisy, const DofField& data_clean);

}  // namespace coeffinv
