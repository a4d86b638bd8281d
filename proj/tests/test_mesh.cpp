#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "coeffinv/mesh.hpp"

using namespace coeffinv;

namespace {

// independent oracle: find h0 by bisection so that the geometric cell sizes
// h0 * r^i (r fixed by the requested ratio) sum to exactly 1
double grading_h0_oracle(int n_cells, double ratio) {
  const double r = std::pow(ratio, 1.0 / (n_cells - 1));
  auto total = [&](double h0) {
    double sum = 0.0, h = h0;
    for (int i = 0; i < n_cells; ++i) {
      sum += h;
      h *= r;
    }
    return sum;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("mesh") {

TEST_CASE("uniform bisection gives 0, 0.5, 1") {
  const auto mesh = build_interval_mesh(2, 1.0);
  CHECK(mesh->n_vertices() == 3);
  CHECK(mesh->x(0) == doctest::Approx(0.0));
  CHECK(mesh->x(1) == doctest::Approx(0.5));
  CHECK(mesh->x(2) == doctest::Approx(1.0));
  CHECK(mesh->boundary_vertices == std::vector<int>{0, 2});
}

TEST_CASE("uniform 101-cell mesh has h_max == h_min == 1/101") {
  const auto mesh = build_interval_mesh(101, 1.0);
  CHECK(mesh->h_max == doctest::Approx(1.0 / 101).epsilon(1e-12));
  CHECK(mesh->h_min == doctest::Approx(1.0 / 101).epsilon(1e-12));
}

TEST_CASE("graded mesh matches the geometric-progression oracle") {
  const int n = 8;
  const double ratio = 128.0;
  const auto mesh = build_interval_mesh(n, ratio);
  CHECK(mesh->h_max / mesh->h_min == doctest::Approx(ratio).epsilon(1e-10));

  const double h0 = grading_h0_oracle(n, ratio);
  const double r = std::pow(ratio, 1.0 / (n - 1));
  double pos = 0.0, h = h0;
  for (int i = 1; i <= n; ++i) {
    pos += h;
    h *= r;
    CHECK(mesh->x(i) == doctest::Approx(pos).epsilon(1e-10));
  }
}

TEST_CASE("graded ratios are honored across a sweep") {
  for (const double ratio : {1.0, 2.0, 16.0, 128.0}) {
    for (const int n : {8, 33, 101}) {
      const auto mesh = build_interval_mesh(n, ratio);
      CHECK(mesh->h_max / mesh->h_min == doctest::Approx(ratio).epsilon(1e-8));
      double total = 0.0;
      for (int c = 0; c < mesh->n_cells(); ++c) total += mesh->cell_measure(c);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("interval mesh rejects bad arguments") {
  CHECK_THROWS_AS(build_interval_mesh(1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_interval_mesh(10, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_interval_mesh(10, std::nan("")), std::invalid_argument);
}

TEST_CASE("interior 1D vertices belong to exactly two cells") {
  const auto mesh = build_interval_mesh(33, 4.0);
  std::map<int, int> incidence;
  for (int c = 0; c < mesh->n_cells(); ++c) {
    for (int v : mesh->cell(c)) incidence[v]++;
  }
  for (int v = 0; v < mesh->n_vertices(); ++v) {
    CHECK(incidence[v] == (mesh->is_boundary(v) ? 1 : 2));
  }
}

TEST_CASE("single square splits into two triangles of total area 1") {
  const auto mesh = build_unit_square_mesh(1, 1);
  CHECK(mesh->n_cells() == 2);
  CHECK(mesh->cell_measure(0) + mesh->cell_measure(1) == doctest::Approx(1.0));
}

TEST_CASE("101x101 grid has the expected vertex and cell counts") {
  const auto mesh = build_unit_square_mesh(101, 101);
  CHECK(mesh->n_vertices() == 102 * 102);
  CHECK(mesh->n_cells() == 2 * 101 * 101);
}

TEST_CASE("triangle areas are positive and sum to the unit square") {
  const auto mesh = build_unit_square_mesh(3, 2);
  double total = 0.0;
  for (int c = 0; c < mesh->n_cells(); ++c) {
    CHECK(mesh->cell_measure(c) > 0.0);
    total += mesh->cell_measure(c);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("square mesh boundary detection") {
  const auto mesh = build_unit_square_mesh(4, 3);
  int expected = 0;
  for (int v = 0; v < mesh->n_vertices(); ++v) {
    const bool on = mesh->x(v) == 0.0 || mesh->x(v) == 1.0 || mesh->y(v) == 0.0 || mesh->y(v) == 1.0;
    CHECK(mesh->is_boundary(v) == on);
    if (on) ++expected;
  }
  CHECK(static_cast<int>(mesh->boundary_vertices.size()) == expected);
  CHECK_THROWS_AS(build_unit_square_mesh(0, 3), std::invalid_argument);
}

TEST_CASE("csv dump round-trips the vertex count") {
  const auto mesh = build_interval_mesh(5, 2.0);
  const auto dir = std::filesystem::temp_directory_path() / "coeffinv_mesh_csv";
  write_mesh_csv(*mesh, dir);
  std::ifstream vertices(dir / "vertices.csv");
  std::string line;
  int rows = -1;  // header
  while (std::getline(vertices, line)) ++rows;
  CHECK(rows == mesh->n_vertices());
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
