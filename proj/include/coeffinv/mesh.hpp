#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace coeffinv {

/// Simplicial mesh of the unit interval (dim 1) or unit square (dim 2).
/// Vertices carry interleaved coordinates, cells are (dim+1)-tuples of
/// vertex indices with positive measure. Meshes are immutable after
/// construction and shared read-only, so they are safe to use from any
/// number of threads.
struct Mesh {
  int dim = 1;
  std::vector<double> coords;          // dim * n_vertices, interleaved
  std::vector<int> cells;              // (dim+1) * n_cells
  std::vector<int> boundary_vertices;  // sorted ascending
  std::vector<char> boundary_flag;     // n_vertices entries
  double h_max = 0.0;
  double h_min = 0.0;

  // cached geometry, filled by finalize(): per-cell measure and constant
  // P1 basis gradients ((dim+1)*dim doubles per cell)
  std::vector<double> cell_measures;
  std::vector<double> basis_gradients;

  int n_vertices() const { return static_cast<int>(coords.size()) / dim; }
  int n_cells() const { return static_cast<int>(cells.size()) / (dim + 1); }
  int vertices_per_cell() const { return dim + 1; }

  double x(int v) const { return coords[static_cast<std::size_t>(v) * dim]; }
  double y(int v) const { return dim == 2 ? coords[static_cast<std::size_t>(v) * 2 + 1] : 0.0; }

  std::span<const int> cell(int c) const {
    return {cells.data() + static_cast<std::size_t>(c) * (dim + 1),
            static_cast<std::size_t>(dim + 1)};
  }
  double cell_measure(int c) const { return cell_measures[static_cast<std::size_t>(c)]; }
  /// Gradient component d of basis function local_vertex on cell c.
  double basis_gradient(int c, int local_vertex, int d) const {
    return basis_gradients[(static_cast<std::size_t>(c) * (dim + 1) + local_vertex) * dim + d];
  }
  bool is_boundary(int v) const { return boundary_flag[static_cast<std::size_t>(v)] != 0; }

  /// Computes cached geometry, h_max/h_min and boundary data. Called by the
  /// factory functions; throws std::invalid_argument on degenerate cells.
  void finalize();
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Mesh of (0,1) with n_cells cells whose sizes form a geometric progression
/// with h_max/h_min equal to grading_ratio (ratio 1 gives a uniform mesh).
/// Small cells cluster at x = 0.
MeshPtr build_interval_mesh(int n_cells, double grading_ratio = 1.0);

/// Structured right-diagonal triangulation of [0,1]^2 with (nx+1)*(ny+1)
/// vertices and 2*nx*ny triangles, all positively oriented.
MeshPtr build_unit_square_mesh(int nx, int ny);

/// Writes vertices.csv (index,x[,y]) and cells.csv (cell,v0,v1[,v2]) to dir.
void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& dir);

}  // namespace coeffinv
