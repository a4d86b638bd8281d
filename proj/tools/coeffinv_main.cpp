#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "coeffinv/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"coeffinv: PDE coefficient estimation with a neural-network prior"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  bool dump_mesh = false;
  auto* run = app.add_subcommand("run", "Run a single experiment from a JSON config");
  run->add_option("--config", config_path, "Path to the experiment config")->required();
  run->add_option("--out", out_override, "Output directory (overrides config output_dir)");
  run->add_flag("--dump-mesh", dump_mesh, "Also write vertices.csv and cells.csv");

  std::string suite_id;
  std::string suite_out = "out";
  int workers = 0;
  auto* suite = app.add_subcommand("suite", "Run a full experiment suite");
  suite->add_option("id", suite_id, "Suite id")
      ->required()
      ->check(CLI::IsMember(coeffinv::suite_ids()));
  suite->add_option("--out", suite_out, "Output directory");
  suite->add_option("--workers", workers, "Parallel rows (default: hardware, capped at 8)");

  auto* check = app.add_subcommand("check-gradients",
                                   "Verify adjoint gradients against central finite differences");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const coeffinv::ExperimentConfig config = coeffinv::load_config(config_path);
      std::filesystem::path out =
          !out_override.empty() ? out_override
                                : (!config.output_dir.empty() ? config.output_dir : "out");
      const auto outcome = coeffinv::run_experiment(config, out, dump_mesh);
      std::printf("%s: %s after %d iterations (%.2fs)\n", config.id.c_str(),
                  outcome.message.c_str(), outcome.opt.iterations, outcome.opt.wall_time);
      std::printf("  ||u-u_exact||_L2 = %.6e   ||q-q_exact||_L2 = %.6e\n", outcome.u_err,
                  outcome.q_err);
      std::printf("  results in %s\n", out.string().c_str());
      return outcome.completed ? 0 : 1;
    }
    if (suite->parsed()) {
      return coeffinv::run_suite(suite_id, suite_out, workers, &std::cerr);
    }
    if (check->parsed()) {
      const auto cases = coeffinv::run_gradient_checks();
      bool ok = true;
      for (const auto& c : cases) {
        std::printf("%-20s max relative FD error %.3e over %d vectors\n", c.name.c_str(),
                    c.max_rel_err, c.vectors);
        ok = ok && c.max_rel_err <= 1e-4;
      }
      std::printf("gradient check: %s\n", ok ? "PASS" : "FAIL");
      return ok ? 0 : 1;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
