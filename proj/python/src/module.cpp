#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cqlqg/geometry.hpp"
#include "cqlqg/homotopy.hpp"
#include "cqlqg/io.hpp"

namespace py = pybind11;
using namespace cqlqg;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coherent quantum LQG synthesis by horizon homotopy.";
  m.attr("INFINITE_HORIZON") = kInfiniteHorizon;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<Dimensions>(m, "Dimensions")
      .def(py::init([](int n, int m1, int m2, int p1, int p2, int r) {
             return Dimensions{n, m1, m2, p1, p2, r};
           }),
           py::arg("n") = 2, py::arg("m1") = 4, py::arg("m2") = 4,
           py::arg("p1") = 2, py::arg("p2") = 2, py::arg("r") = 2)
      .def_readwrite("n", &Dimensions::n)
      .def_readwrite("m1", &Dimensions::m1)
      .def_readwrite("m2", &Dimensions::m2)
      .def_readwrite("p1", &Dimensions::p1)
      .def_readwrite("p2", &Dimensions::p2)
      .def_readwrite("r", &Dimensions::r);

  py::class_<ParameterTriple>(m, "ControllerTriple")
      .def(py::init([](Matrix R2, Matrix b, Matrix e) {
             return ParameterTriple{std::move(R2), std::move(b), std::move(e)};
           }),
           py::arg("R2"), py::arg("b"), py::arg("e"))
      .def_readwrite("R2", &ParameterTriple::R2)
      .def_readwrite("b", &ParameterTriple::b)
      .def_readwrite("e", &ParameterTriple::e)
      .def("norm", &ParameterTriple::norm)
      .def("dot", &ParameterTriple::dot)
      .def("to_vector", &ParameterTriple::to_vector);

  py::class_<SynthesisProblem>(m, "SynthesisProblem")
      .def_property_readonly("A",
                             [](const SynthesisProblem& p) { return p.plant.A; })
      .def_property_readonly("B",
                             [](const SynthesisProblem& p) { return p.plant.B; })
      .def_property_readonly("C",
                             [](const SynthesisProblem& p) { return p.plant.C; })
      .def_readonly("d", &SynthesisProblem::d)
      .def_readonly("F", &SynthesisProblem::F)
      .def_readonly("G", &SynthesisProblem::G)
      .def_readonly("Sigma", &SynthesisProblem::Sigma)
      .def("to_json", [](const SynthesisProblem& p) { return problem_to_json(p); })
      .def_static("from_json", [](const std::string& text) {
        return problem_from_json(text).problem;
      });

  m.def(
      "random_problem",
      [](std::uint64_t seed, const Dimensions& dims, bool correlated_sigma) {
        RandomProblemOptions opt;
        opt.correlated_sigma = correlated_sigma;
        const RandomInstance inst = random_problem(dims, seed, opt);
        return py::make_tuple(inst.problem, inst.controller);
      },
      py::arg("seed"), py::arg("dims") = Dimensions{},
      py::arg("correlated_sigma") = true,
      "Seeded random problem and a random controller triple.");

  m.def(
      "closed_loop",
      [](const SynthesisProblem& p, const ControllerTriple& pi) {
        const ClosedLoopProblem cp = closed_loop(p, pi);
        py::dict out;
        out["A"] = cp.cal_A;
        out["B"] = cp.cal_B;
        out["C"] = cp.cal_C;
        out["pr_residual"] = pr_residual(cp);
        return out;
      },
      py::arg("problem"), py::arg("pi"));

  m.def(
      "cost",
      [](const SynthesisProblem& p, const ControllerTriple& pi, double T) {
        return cost(p, pi, T).value;
      },
      py::arg("problem"), py::arg("pi"), py::arg("T") = kInfiniteHorizon);
  m.def("grad_discounted", &grad_discounted, py::arg("problem"), py::arg("pi"),
        py::arg("T"));
  m.def("grad_infinite", &grad_infinite, py::arg("problem"), py::arg("pi"));
  m.def("grad_T_derivative", &grad_T_derivative, py::arg("problem"),
        py::arg("pi"), py::arg("T"));

  m.def(
      "solve_ale",
      [](const Matrix& A, const Matrix& W) { return solve_ale(A, W); },
      py::arg("A"), py::arg("W"), "Solves A X + X Aᵀ + W = 0.");
  m.def("max_admissible_T", &max_admissible_T, py::arg("A"));
  m.def("spectral_abscissa", &spectral_abscissa, py::arg("A"));

  py::class_<StrongMinReport>(m, "StrongMinReport")
      .def_readonly("stationary", &StrongMinReport::stationary)
      .def_readonly("psd", &StrongMinReport::psd)
      .def_readonly("normal_pd", &StrongMinReport::normal_pd)
      .def_readonly("kernel_match", &StrongMinReport::kernel_match)
      .def_readonly("grad_norm", &StrongMinReport::grad_norm)
      .def_readonly("cost", &StrongMinReport::cost)
      .def_readonly("min_eig_normal", &StrongMinReport::min_eig_normal)
      .def_readonly("max_principal_angle",
                    &StrongMinReport::max_principal_angle);
  m.def(
      "check_strong_local_min",
      [](const SynthesisProblem& p, const ControllerTriple& pi, double T) {
        return check_strong_local_min(p, pi, T);
      },
      py::arg("problem"), py::arg("pi"), py::arg("T") = kInfiniteHorizon);

  py::class_<HomotopyState>(m, "HomotopyState")
      .def_readonly("T", &HomotopyState::T)
      .def_readonly("pi", &HomotopyState::pi)
      .def_readonly("cost", &HomotopyState::cost)
      .def_readonly("grad_norm", &HomotopyState::grad_norm)
      .def_readonly("abscissa", &HomotopyState::abscissa);

  py::class_<FinalResult>(m, "FinalResult")
      .def_readonly("controller", &FinalResult::controller)
      .def_property_readonly(
          "verdict", [](const FinalResult& f) { return to_string(f.verdict); })
      .def_readonly("abscissa", &FinalResult::abscissa)
      .def_readonly("V_inf", &FinalResult::V_inf)
      .def_readonly("grad_inf_norm", &FinalResult::grad_inf_norm)
      .def_readonly("diagnostic", &FinalResult::diagnostic);

  m.def(
      "synthesize",
      [](const SynthesisProblem& p, double T_max) {
        HomotopyConfig config;
        config.T_max = T_max;
        HomotopyTrace trace;
        {
          py::gil_scoped_release release;
          trace = continuation_run(p, config);
        }
        FinalResult final = finalize(p, trace);
        return py::make_tuple(trace.states, final);
      },
      py::arg("problem"), py::arg("T_max") = 1e4,
      "Runs the horizon continuation; returns (nodes, final result).");
}
