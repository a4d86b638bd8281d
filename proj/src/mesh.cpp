#include "coeffinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace coeffinv {

namespace {

constexpr double kBoundaryTol = 1e-12;

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void Mesh::finalize() {
  const int nc = n_cells();
  const int vpc = vertices_per_cell();
  cell_measures.assign(static_cast<std::size_t>(nc), 0.0);
  basis_gradients.assign(static_cast<std::size_t>(nc) * vpc * dim, 0.0);
  h_max = 0.0;
  h_min = std::numeric_limits<double>::infinity();

  for (int c = 0; c < nc; ++c) {
    const auto cv = cell(c);
    for (int v : cv) {
      if (v < 0 || v >= n_vertices()) fail("mesh cell references invalid vertex index");
    }
    if (dim == 1) {
      const double a = x(cv[0]);
      const double b = x(cv[1]);
      const double h = b - a;
      if (!(h > 0.0)) fail("degenerate 1D cell (non-positive length)");
      cell_measures[c] = h;
      basis_gradients[(static_cast<std::size_t>(c) * 2 + 0)] = -1.0 / h;
      basis_gradients[(static_cast<std::size_t>(c) * 2 + 1)] = 1.0 / h;
      h_max = std::max(h_max, h);
      h_min = std::min(h_min, h);
    } else {
      const double x1 = x(cv[0]), y1 = y(cv[0]);
      const double x2 = x(cv[1]), y2 = y(cv[1]);
      const double x3 = x(cv[2]), y3 = y(cv[2]);
      const double det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
      if (!(det > 0.0)) fail("degenerate or negatively oriented triangle");
      const double area = 0.5 * det;
      cell_measures[c] = area;
      const std::size_t base = static_cast<std::size_t>(c) * 3 * 2;
      basis_gradients[base + 0] = (y2 - y3) / det;
      basis_gradients[base + 1] = (x3 - x2) / det;
      basis_gradients[base + 2] = (y3 - y1) / det;
      basis_gradients[base + 3] = (x1 - x3) / det;
      basis_gradients[base + 4] = (y1 - y2) / det;
      basis_gradients[base + 5] = (x2 - x1) / det;
      // diameter = longest edge
      const double e1 = std::hypot(x2 - x1, y2 - y1);
      const double e2 = std::hypot(x3 - x2, y3 - y2);
      const double e3 = std::hypot(x1 - x3, y1 - y3);
      const double diam = std::max({e1, e2, e3});
      h_max = std::max(h_max, diam);
      h_min = std::min(h_min, diam);
    }
  }

  const int nv = n_vertices();
  boundary_flag.assign(static_cast<std::size_t>(nv), 0);
  boundary_vertices.clear();
  for (int v = 0; v < nv; ++v) {
    bool on = std::abs(x(v)) < kBoundaryTol || std::abs(x(v) - 1.0) < kBoundaryTol;
    if (dim == 2) {
      on = on || std::abs(y(v)) < kBoundaryTol || std::abs(y(v) - 1.0) < kBoundaryTol;
    }
    if (on) {
      boundary_flag[v] = 1;
      boundary_vertices.push_back(v);
    }
  }
}

MeshPtr build_interval_mesh(int n_cells, double grading_ratio) {
  if (n_cells < 2) fail("build_interval_mesh: n_cells must be >= 2");
  if (!std::isfinite(grading_ratio) || grading_ratio < 1.0) {
    fail("build_interval_mesh: grading_ratio must be finite and >= 1");
  }

  auto mesh = std::make_shared<Mesh>();
  mesh->dim = 1;
  mesh->coords.resize(static_cast<std::size_t>(n_cells) + 1);
  if (grading_ratio == 1.0) {
    for (int i = 0; i <= n_cells; ++i) {
      mesh->coords[i] = static_cast<double>(i) / n_cells;
    }
  } else {
    // cell sizes h0 * r^i with r chosen so that h_max/h_min = grading_ratio
    // and the sizes sum to 1
    const double r = std::pow(grading_ratio, 1.0 / (n_cells - 1));
    const double h0 = (r - 1.0) / (std::pow(r, n_cells) - 1.0);
    double pos = 0.0;
    double h = h0;
    mesh->coords[0] = 0.0;
    for (int i = 1; i <= n_cells; ++i) {
      pos += h;
      mesh->coords[i] = pos;
      h *= r;
    }
    if (std::abs(mesh->coords[n_cells] - 1.0) > 1e-12) {
      fail("build_interval_mesh: grading progression failed to cover (0,1)");
    }
    mesh->coords[n_cells] = 1.0;
  }
  mesh->cells.resize(static_cast<std::size_t>(n_cells) * 2);
  for (int c = 0; c < n_cells; ++c) {
    mesh->cells[2 * c] = c;
    mesh->cells[2 * c + 1] = c + 1;
  }
  mesh->finalize();
  return mesh;
}

MeshPtr build_unit_square_mesh(int nx, int ny) {
  if (nx < 1 || ny < 1) fail("build_unit_square_mesh: nx and ny must be >= 1");

  auto mesh = std::make_shared<Mesh>();
  mesh->dim = 2;
  const int nvx = nx + 1;
  const int nvy = ny + 1;
  mesh->coords.resize(static_cast<std::size_t>(nvx) * nvy * 2);
  for (int j = 0; j < nvy; ++j) {
    for (int i = 0; i < nvx; ++i) {
      const std::size_t v = static_cast<std::size_t>(j) * nvx + i;
      mesh->coords[2 * v] = static_cast<double>(i) / nx;
      mesh->coords[2 * v + 1] = static_cast<double>(j) / ny;
    }
  }
  mesh->cells.reserve(static_cast<std::size_t>(nx) * ny * 6);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int n0 = j * nvx + i;
      const int n1 = n0 + 1;
      const int n2 = n0 + nvx;
      const int n3 = n2 + 1;
      mesh->cells.insert(mesh->cells.end(), {n0, n1, n3});
      mesh->cells.insert(mesh->cells.end(), {n0, n3, n2});
    }
  }
  mesh->finalize();
  return mesh;
}

void write_mesh_csv(const Mesh& mesh, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "vertices.csv");
    out << (mesh.dim == 1 ? "index,x\n" : "index,x,y\n");
    char buf[64];
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      out << v;
      std::snprintf(buf, sizeof(buf), ",%.17g", mesh.x(v));
      out << buf;
      if (mesh.dim == 2) {
        std::snprintf(buf, sizeof(buf), ",%.17g", mesh.y(v));
        out << buf;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "cells.csv");
    out << (mesh.dim == 1 ? "cell,v0,v1\n" : "cell,v0,v1,v2\n");
    for (int c = 0; c < mesh.n_cells(); ++c) {
      out << c;
      for (int v : mesh.cell(c)) out << ',' << v;
      out << '\n';
    }
  }
}

}  // namespace coeffinv
