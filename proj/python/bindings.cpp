#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ctlqr/errors.hpp"
#include "ctlqr/harness.hpp"
#include "ctlqr/margin.hpp"
#include "ctlqr/matspec.hpp"
#include "ctlqr/riccati.hpp"

namespace py = pybind11;
using namespace ctlqr;

namespace {

harness::ExperimentConfig config_from_kwargs(const py::kwargs& kwargs) {
    harness::ExperimentConfig c;
    for (const auto& item : kwargs) {
        const auto key = py::cast<std::string>(item.first);
        const py::handle v = item.second;
        if (key == "A" || key == "B" || key == "C") {
            const Matrix M = py::cast<Matrix>(v);
            (key == "A" ? c.A : key == "B" ? c.B : c.C) = M;
        } else {
            harness::set_field(c, key, py::str(v).cast<std::string>());
        }
    }
    c.validate();
    return c;
}

py::dict report_dict(const harness::ReplicateResult& r) {
    py::dict d;
    d["replicate"] = r.replicate;
    d["seed"] = r.seed;
    d["failed"] = r.failed;
    d["error"] = r.error;
    d["T"] = r.report.grid;
    d["R_T"] = r.report.regret;
    d["R_T_over_sqrtT"] = r.report.regret_norm;
    d["R_tilde_T"] = r.report.policy_diff_term;
    d["tau"] = r.report.episode_times;
    d["psi_sq"] = r.report.est_err_sq;
    std::vector<double> sigma;
    std::vector<bool> projected;
    for (const auto& e : r.record.episodes) {
        sigma.push_back(e.sigma);
        projected.push_back(e.projected);
    }
    d["sigma"] = sigma;
    d["projected"] = projected;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ctlqr, m) {
    m.doc() = "Online LQ control of continuous-time stochastic linear systems.";

    py::register_exception<Error>(m, "Error");
    py::register_exception<ValueError>(m, "ValueError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<InstabilityError>(m, "InstabilityError");
    py::register_exception<ConvergenceError>(m, "ConvergenceError");
    py::register_exception<EmptyMarginError>(m, "EmptyMarginError");
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<riccati::RiccatiSolution>(m, "RiccatiSolution")
        .def_readonly("P", &riccati::RiccatiSolution::P)
        .def_readonly("K", &riccati::RiccatiSolution::K)
        .def_readonly("D", &riccati::RiccatiSolution::D);

    m.def(
        "care_solve",
        [](const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
            return riccati::care_solve(ParameterPair{A, B}, CostSpec::make(Q, R));
        },
        py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"));
    m.def(
        "riccati_residual",
        [](const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& M) {
            return riccati::riccati_residual(ParameterPair{A, B}, CostSpec::make(Q, R), M);
        },
        py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("M"));
    m.def("lyapunov_solve", &matspec::lyapunov_solve, py::arg("D"), py::arg("S"));
    m.def("noise_gramian", &matspec::noise_gramian, py::arg("D"), py::arg("C"),
          py::arg("h") = std::numeric_limits<double>::infinity());
    m.def("spectral_abscissa", &matspec::spectral_abscissa, py::arg("M"));
    m.def("matrix_exp", &matspec::matrix_exp, py::arg("M"), py::arg("t"));

    m.def("x29a_preset", [] {
        const auto [model, cost] = harness::x29a_preset();
        py::dict d;
        d["A"] = model.A;
        d["B"] = model.B;
        d["C"] = model.C;
        d["Q"] = cost.Q;
        d["R"] = cost.R;
        return d;
    });

    m.def(
        "epsilon0",
        [](const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& Q, const Matrix& R) {
            return margin::epsilon0(DynamicsModel::make(A, B, C), CostSpec::make(Q, R));
        },
        py::arg("A"), py::arg("B"), py::arg("C"), py::arg("Q"), py::arg("R"));
    m.def(
        "stability_margin",
        [](const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, double delta) {
            const auto c = margin::stability_margin(ParameterPair{A, B}, CostSpec::make(Q, R), delta);
            py::dict d;
            d["rho"] = c.rho;
            d["zeta"] = c.zeta;
            d["m"] = c.m_hat;
            d["cond"] = c.similarity_cond;
            d["k_norm"] = c.k_norm;
            d["delta"] = c.delta;
            d["radius"] = c.radius;
            return d;
        },
        py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("delta"));

    m.def(
        "format_config", [](const py::kwargs& kw) { return harness::format_config(config_from_kwargs(kw)); },
        "Config text for the given fields; unknown keys raise ValueError.");
    m.def(
        "run_experiment",
        [](const py::kwargs& kw) {
            const auto c = config_from_kwargs(kw);
            harness::OutputFiles f;
            {
                py::gil_scoped_release release;
                f = harness::run_experiment(c);
            }
            py::dict d;
            d["episodes"] = f.episodes;
            d["regret"] = f.regret;
            d["failures"] = f.failures;
            d["metadata"] = f.metadata;
            return d;
        },
        "Runs the configured experiment and returns the written file paths.");
    m.def(
        "run_replicate",
        [](int replicate, const py::kwargs& kw) {
            const auto c = config_from_kwargs(kw);
            harness::ReplicateResult r;
            {
                py::gil_scoped_release release;
                r = harness::run_replicate(harness::prepare(c), replicate);
            }
            return report_dict(r);
        },
        py::arg("replicate"), "One replicate's regret curve and episode summary as arrays.");
    m.attr("__version__") = harness::version();
}
