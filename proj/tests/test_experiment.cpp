#include <doctest.h>

#include <fstream>
#include <sstream>

#include "coeffinv/experiment.hpp"

using namespace coeffinv;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

nlohmann::json tiny_config_json() {
  return nlohmann::json{{"id", "tiny"},
                        {"dimension", 1},
                        {"mesh", {{"n_cells", 31}}},
                        {"coefficient", "const"},
                        {"delta", 0.0},
                        {"seeds", {{"noise", 3}, {"weights", 2}}},
                        {"prior", {{"type", "network"}, {"layers", {1, 3, 1}}}},
                        {"gtol", 1e-6},
                        {"max_iter", 200}};
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config validation errors carry field paths") {
  auto expect_error = [](nlohmann::json j, const std::string& needle) {
    try {
      parse_config(j);
      FAIL("expected ConfigError for ", needle);
    } catch (const ConfigError& err) {
      CHECK(std::string(err.what()).find(needle) != std::string::npos);
    }
  };
  nlohmann::json base = tiny_config_json();

  nlohmann::json j = base;
  j.erase("id");
  expect_error(j, "id");

  j = base;
  j["dimension"] = 3;
  expect_error(j, "dimension");

  j = base;
  j["mesh"]["n_cells"] = 1;
  expect_error(j, "mesh.n_cells");

  j = base;
  j["coefficient"] = "cubic";
  expect_error(j, "coefficient");

  j = base;
  j["delta"] = -0.5;
  expect_error(j, "delta");

  j = base;
  j["prior"] = {{"type", "gaussian"}};
  expect_error(j, "prior.type");

  j = base;
  j["prior"] = {{"type", "network"}, {"layers", {2, 3, 1}}};
  expect_error(j, "prior.layers");

  j = base;
  j["mask_distance"] = 0.7;
  expect_error(j, "mask_distance");

  j = base;
  j["regularization"] = {{"type", "tikhonov"}};
  expect_error(j, "regularization.alpha");

  j = base;
  j["solution"] = "sine_product";
  expect_error(j, "solution");
}

TEST_CASE("config json round-trip preserves every field") {
  nlohmann::json j = tiny_config_json();
  j["mask_distance"] = 0.25;
  j["regularization"] = {{"type", "generalized_tikhonov"}, {"alpha", 0.4}};
  const ExperimentConfig a = parse_config(j);
  const ExperimentConfig b = parse_config(config_to_json(a));
  CHECK(a.id == b.id);
  CHECK(a.mesh.n_cells == b.mesh.n_cells);
  CHECK(a.coefficient == b.coefficient);
  CHECK(a.solution == b.solution);
  CHECK(a.delta == b.delta);
  CHECK(a.noise_seed == b.noise_seed);
  CHECK(a.weight_seed == b.weight_seed);
  CHECK(a.prior.layers == b.prior.layers);
  CHECK(a.mask_distance == b.mask_distance);
  CHECK(a.regularization.type == b.regularization.type);
  CHECK(a.regularization.alpha == b.regularization.alpha);
  CHECK(a.gtol == b.gtol);
  CHECK(a.max_iter == b.max_iter);
}

TEST_CASE("cells_for_grading holds the largest cell at the target") {
  const double target = 1.0 / 101.0;
  for (const double ratio : {1.0, 2.0, 8.0, 128.0}) {
    const int n = cells_for_grading(ratio, target);
    const auto mesh = build_interval_mesh(n, ratio);
    CHECK(mesh->h_max <= target * (1.0 + 1e-12));
    CHECK(mesh->h_max / mesh->h_min == doctest::Approx(ratio).epsilon(1e-8));
    // minimality: one cell fewer would overshoot
    if (ratio > 1.0 && n > 2) {
      const auto coarser = build_interval_mesh(n - 1, ratio);
      CHECK(coarser->h_max > target);
    }
  }
}

TEST_CASE("run_experiment writes the documented outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "coeffinv_exp_out";
  std::filesystem::remove_all(dir);
  const ExperimentConfig config = parse_config(tiny_config_json());
  const ExperimentOutcome outcome = run_experiment(config, dir, /*dump_mesh=*/true);
  CHECK(outcome.completed);
  CHECK(outcome.opt.converged);
  CHECK(outcome.q_err < 5e-2);

  for (const auto* name : {"results.csv", "solution.csv", "coefficient.csv", "trace.csv",
                           "config.json", "network.json", "vertices.csv", "cells.csv"}) {
    CHECK(std::filesystem::exists(dir / name));
  }
  const std::string results = slurp(dir / "results.csv");
  CHECK(results.find("id,prior,delta,noise_seed,weight_seed,iterations,converged,") == 0);
  CHECK(results.find("tiny,network,0,3,2,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("repeated runs are byte-identical") {
  const auto dir1 = std::filesystem::temp_directory_path() / "coeffinv_det1";
  const auto dir2 = std::filesystem::temp_directory_path() / "coeffinv_det2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  const ExperimentConfig config = parse_config(tiny_config_json());
  run_experiment(config, dir1);
  run_experiment(config, dir2);
  for (const auto* name : {"results.csv", "solution.csv", "coefficient.csv", "trace.csv",
                           "network.json"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("suite definitions match the documented matrices") {
  CHECK(suite_configs("table1").size() == 16);
  CHECK(suite_configs("table2").size() == 8);
  CHECK(suite_configs("graded_mesh").size() == 8);
  CHECK(suite_configs("discontinuous").size() == 4);
  CHECK(suite_configs("incomplete").size() == 12);
  CHECK_THROWS_AS(suite_configs("unknown"), ConfigError);

  // every row carries explicit seeds
  for (const auto& config : suite_configs("table1")) {
    CHECK(config.noise_seed == 3);
    CHECK(config.weight_seed == 2);
  }
  // graded rows hold h_max at the uniform-101 level
  for (const auto& config : suite_configs("graded_mesh")) {
    const auto mesh = build_interval_mesh(config.mesh.n_cells, config.mesh.grading_ratio);
    CHECK(mesh->h_max <= 1.0 / 101.0 + 1e-12);
  }
}

TEST_CASE("illposed suite writes its table deterministically") {
  const auto dir1 = std::filesystem::temp_directory_path() / "coeffinv_ip1";
  const auto dir2 = std::filesystem::temp_directory_path() / "coeffinv_ip2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  std::ostringstream sink;
  CHECK(run_suite("illposed", dir1, 1, &sink) == 0);
  CHECK(run_suite("illposed", dir2, 1, &sink) == 0);
  const std::string table = slurp(dir1 / "illposed.csv");
  CHECK(table.find("n,u_err_inf,q_err_inf") == 0);
  CHECK(table == slurp(dir2 / "illposed.csv"));
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("gradient check harness stays under the acceptance threshold") {
  for (const auto& gc : run_gradient_checks(3)) {
    CAPTURE(gc.name);
    CHECK(gc.max_rel_err <= 1e-4);
  }
}

}  // TEST_SUITE
