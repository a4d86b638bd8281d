#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "coeffinv/experiment.hpp"

namespace py = pybind11;
using namespace coeffinv;

namespace {

// pybind11 holders want non-const element types
std::shared_ptr<Mesh> unconst(MeshPtr mesh) { return std::const_pointer_cast<Mesh>(mesh); }

struct PyProblem {
  ExperimentConfig config;
  BuiltProblem built;
};

PyProblem make_problem_from_json(const std::string& text) {
  PyProblem p;
  p.config = parse_config(nlohmann::json::parse(text));
  p.built = build_problem(p.config);
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Estimation of spatially varying PDE coefficients with a neural-network prior";

  py::register_exception<SingularSystem>(m, "SingularSystem", PyExc_RuntimeError);
  py::register_exception<BracketFailure>(m, "BracketFailure", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Mesh, std::shared_ptr<Mesh>>(m, "Mesh")
      .def_readonly("dim", &Mesh::dim)
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("n_cells", &Mesh::n_cells)
      .def_readonly("h_max", &Mesh::h_max)
      .def_readonly("h_min", &Mesh::h_min)
      .def_readonly("boundary_vertices", &Mesh::boundary_vertices)
      .def_property_readonly("vertices",
                             [](const Mesh& mesh) {
                               Eigen::MatrixXd v(mesh.n_vertices(), mesh.dim);
                               for (int i = 0; i < mesh.n_vertices(); ++i) {
                                 v(i, 0) = mesh.x(i);
                                 if (mesh.dim == 2) v(i, 1) = mesh.y(i);
                               }
                               return v;
                             })
      .def_property_readonly("cells", [](const Mesh& mesh) {
        Eigen::MatrixXi c(mesh.n_cells(), mesh.vertices_per_cell());
        for (int i = 0; i < mesh.n_cells(); ++i) {
          const auto cv = mesh.cell(i);
          for (int k = 0; k < mesh.vertices_per_cell(); ++k) c(i, k) = cv[k];
        }
        return c;
      });

  m.def(
      "build_interval_mesh",
      [](int n_cells, double ratio) { return unconst(build_interval_mesh(n_cells, ratio)); },
      py::arg("n_cells"), py::arg("grading_ratio") = 1.0);
  m.def(
      "build_unit_square_mesh",
      [](int nx, int ny) { return unconst(build_unit_square_mesh(nx, ny)); }, py::arg("nx"),
      py::arg("ny"));

  py::class_<DofField>(m, "DofField")
      .def_property_readonly("values", [](const DofField& f) { return f.values; })
      .def_property_readonly("mesh", [](const DofField& f) { return unconst(f.mesh); });

  m.def(
      "interpolate",
      [](const ScalarFn& fn, std::shared_ptr<Mesh> mesh) { return interpolate(fn, mesh); },
      py::arg("fn"), py::arg("mesh"), "Vertex-wise sampling of fn(x, y); y is 0 on 1D meshes");
  m.def(
      "error_norm",
      [](const DofField& u, const ScalarFn& exact, int order) {
        return error_norm(u, exact, order);
      },
      py::arg("u"), py::arg("exact"), py::arg("order") = 5);
  m.def(
      "solve_poisson",
      [](std::shared_ptr<Mesh> mesh, const Eigen::VectorXd& q, const Eigen::VectorXd& f,
         const std::map<int, double>& boundary) {
        MeshPtr mp = mesh;
        const DofField qf{mp, q};
        const DofField ff{mp, f};
        return solve_forward(assemble_system(mp, qf, ff, boundary)).values;
      },
      py::arg("mesh"), py::arg("q"), py::arg("f"), py::arg("boundary"),
      "Assemble and solve -div(q grad u) = f with Dirichlet values {vertex: value}");
  m.def(
      "misfit",
      [](const DofField& u, const DofField& data, const std::vector<double>& mask) {
        return misfit(u, data, mask);
      },
      py::arg("u"), py::arg("data"), py::arg("cell_mask") = std::vector<double>{});
  m.def(
      "boundary_mask",
      [](std::shared_ptr<Mesh> mesh, double d) { return boundary_mask(*mesh, d); },
      py::arg("mesh"), py::arg("d"));

  py::class_<Network>(m, "Network")
      .def(py::init<std::vector<int>>(), py::arg("layer_sizes"))
      .def_property_readonly("layer_sizes", &Network::layer_sizes)
      .def_property_readonly("parameter_count", &Network::parameter_count)
      .def("forward", &Network::forward, py::arg("x"), py::arg("y") = 0.0)
      .def("backprop_params", &Network::backprop_params, py::arg("x"), py::arg("y") = 0.0)
      .def("flatten", &Network::flatten)
      .def("unflatten", &Network::unflatten, py::arg("params"))
      .def("save_json", &Network::save_json, py::arg("path"))
      .def_static("load_json", &Network::load_json, py::arg("path"));
  m.def("init_network", &init_network, py::arg("layer_sizes"), py::arg("seed"),
        "Weights uniform on [0,1) from a seeded splitmix64 stream, biases zero");

  py::class_<TracePoint>(m, "TracePoint")
      .def_readonly("objective", &TracePoint::objective)
      .def_readonly("gradient_norm", &TracePoint::gradient_norm)
      .def_readonly("step_length", &TracePoint::step_length);

  py::class_<OptimizationResult>(m, "OptimizationResult")
      .def_readonly("params", &OptimizationResult::params)
      .def_readonly("iterations", &OptimizationResult::iterations)
      .def_readonly("f_final", &OptimizationResult::f_final)
      .def_readonly("gnorm_final", &OptimizationResult::gnorm_final)
      .def_readonly("converged", &OptimizationResult::converged)
      .def_readonly("stop_reason", &OptimizationResult::stop_reason)
      .def_readonly("trace", &OptimizationResult::trace)
      .def_readonly("wall_time", &OptimizationResult::wall_time);

  m.def("bfgs_minimize", &bfgs_minimize, py::arg("objective"), py::arg("x0"), py::arg("gtol"),
        py::arg("max_iter") = 5000,
        "BFGS with strong-Wolfe line search; objective returns (value, gradient)");

  py::class_<PyProblem>(m, "Problem")
      .def_property_readonly("n_params",
                             [](const PyProblem& p) { return p.built.problem.parameter_count(); })
      .def_property_readonly("mesh",
                             [](const PyProblem& p) { return unconst(p.built.problem.mesh); })
      .def_property_readonly("data", [](const PyProblem& p) { return p.built.problem.data; })
      .def(
          "initial_parameters",
          [](const PyProblem& p, std::uint64_t seed) {
            return initial_parameters(p.built.problem, seed);
          },
          py::arg("weight_seed"))
      .def(
          "objective_and_gradient",
          [](const PyProblem& p, const Eigen::VectorXd& params) {
            const EvalReport r = objective_and_gradient(p.built.problem, params);
            return py::make_tuple(r.objective, r.gradient);
          },
          py::arg("params"))
      .def(
          "coefficient",
          [](const PyProblem& p, const Eigen::VectorXd& params) {
            return realize_coefficient(p.built.problem, params).values;
          },
          py::arg("params"))
      .def(
          "solve",
          [](const PyProblem& p, const Eigen::VectorXd& params) {
            const DofField q = realize_coefficient(p.built.problem, params);
            return solve_forward(assemble_system(p.built.problem.mesh, q, p.built.problem.forcing,
                                                 p.built.problem.boundary))
                .values;
          },
          py::arg("params"))
      .def("minimize", [](const PyProblem& p) {
        const Objective objective = [&p](const Eigen::VectorXd& params) {
          const EvalReport r = objective_and_gradient(p.built.problem, params);
          return std::make_pair(r.objective, r.gradient);
        };
        return bfgs_minimize(objective, initial_parameters(p.built.problem, p.config.weight_seed),
                             p.config.gtol, p.config.max_iter);
      });

  m.def("_make_problem_json", &make_problem_from_json, py::arg("config_json"));
  m.def(
      "_run_experiment_json",
      [](const std::string& text, const std::filesystem::path& out_dir) {
        const ExperimentConfig config = parse_config(nlohmann::json::parse(text));
        const ExperimentOutcome o = run_experiment(config, out_dir);
        py::dict d;
        d["id"] = o.config.id;
        d["iterations"] = o.opt.iterations;
        d["converged"] = o.opt.converged;
        d["u_err"] = o.u_err;
        d["q_err"] = o.q_err;
        d["q_err_inf"] = o.q_err_inf;
        d["completed"] = o.completed;
        d["message"] = o.message;
        return d;
      },
      py::arg("config_json"), py::arg("out_dir"));
  m.def(
      "run_suite",
      [](const std::string& suite, const std::filesystem::path& out_dir, int workers) {
        return run_suite(suite, out_dir, workers);
      },
      py::arg("suite"), py::arg("out_dir"), py::arg("workers") = 0);
  m.def("suite_ids", &suite_ids);
  m.def(
      "illposedness_table",
      [](const std::vector<int>& ns) {
        py::list rows;
        for (const auto& r : illposedness_table(ns)) {
          rows.append(py::make_tuple(r.n, r.u_err_inf, r.q_err_inf));
        }
        return rows;
      },
      py::arg("n_list"));
  m.def(
      "run_gradient_checks",
      [](int vectors) {
        py::dict d;
        for (const auto& c : run_gradient_checks(vectors)) d[c.name.c_str()] = c.max_rel_err;
        return d;
      },
      py::arg("vectors_per_case") = 5);

  m.attr("__version__") = "0.1.0";
}
