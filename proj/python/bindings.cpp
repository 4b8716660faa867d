#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kraichnan/experiments.hpp"
#include "kraichnan/flux.hpp"
#include "kraichnan/mc_spde.hpp"
#include "kraichnan/mellin.hpp"
#include "kraichnan/quad.hpp"
#include "kraichnan/spectral.hpp"
#include "kraichnan/specfun.hpp"

namespace py = pybind11;
using namespace kraichnan;

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

PYBIND11_MODULE(_kraichnan, m) {
  m.doc() = "Kraichnan passive scalar: constants, flux, spectral and Monte Carlo solvers";
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);

  auto base = py::register_exception<Error>(m, "KraichnanError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PoleError>(m, "PoleError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<StripViolation>(m, "StripViolation", base.ptr());
  py::register_exception<CaseOutOfRange>(m, "CaseOutOfRange", base.ptr());

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](int d, double alpha, double s, double mass, double nu) {
             ModelParams p{d, alpha, s, mass, nu};
             p.validate();
             return p;
           }),
           py::arg("d") = 2, py::arg("alpha") = 0.5, py::arg("s") = 0.5, py::arg("m") = 0.0, py::arg("nu") = 0.0)
      .def_readonly("d", &ModelParams::d)
      .def_readonly("alpha", &ModelParams::alpha)
      .def_readonly("s", &ModelParams::s)
      .def_readonly("m", &ModelParams::m)
      .def_readonly("nu", &ModelParams::nu)
      .def("__repr__", [](const ModelParams& p) {
        std::ostringstream os;
        os << "ModelParams(d=" << p.d << ", alpha=" << p.alpha << ", s=" << p.s << ", m=" << p.m << ", nu=" << p.nu << ")";
        return os.str();
      });

  m.def("gamma", &specfun::gamma, py::arg("z"));
  m.def("log_gamma", &specfun::log_gamma, py::arg("z"));
  m.def("mellin_h", &specfun::mellin_h, py::arg("params"), py::arg("z"));
  m.def("mellin_f", &specfun::mellin_f, py::arg("params"), py::arg("z"));

  m.def("k_constant_gamma", &mellin::k_constant_gamma, py::arg("params"));
  m.def("k_constant_integral", &mellin::k_constant_integral, py::arg("params"));
  m.def("k_constant_riesz", &mellin::k_constant_riesz, py::arg("params"));
  m.def("d_constant", &mellin::d_constant, py::arg("d"), py::arg("alpha"));
  m.def("parseval_contour", &mellin::parseval_contour, py::arg("lam"), py::arg("params"), py::arg("line_re"));
  m.def("J_direct", [](double lam, const ModelParams& p) { return quad::J_direct(lam, p).value; }, py::arg("lam"),
        py::arg("params"));

  m.def("flux_F", [](double xi, const ModelParams& p) { return flux::flux_F(xi, p); }, py::arg("xi"), py::arg("params"));
  m.def("flux_F_expansion", &flux::flux_F_expansion, py::arg("xi"), py::arg("params"), py::arg("rel_tol") = 1e-9);
  m.def("bound_constant", &flux::bound_constant, py::arg("params"), py::arg("points") = 40);

  py::class_<spectral::Trajectory>(m, "Trajectory")
      .def_readonly("trackers", &spectral::Trajectory::trackers)
      .def_readonly("times", &spectral::Trajectory::times)
      .def_readonly("mass", &spectral::Trajectory::mass)
      .def_readonly("norms", &spectral::Trajectory::norms)
      .def_readonly("norm_rates", &spectral::Trajectory::norm_rates)
      .def_readonly("max_balance_gap", &spectral::Trajectory::max_balance_gap)
      .def_readonly("truncated_at", &spectral::Trajectory::truncated_at);

  m.def(
      "evolve_gaussian",
      [](const ModelParams& p, double rho_min, double rho_max, int nodes, double t_final, double dt,
         const std::vector<double>& trackers, bool selfsimilar, bool exact) {
        const auto g = spectral::RadialGrid::log_spaced(p.d, rho_min, rho_max, nodes);
        spectral::KernelOptions ko;
        ko.mode = selfsimilar ? spectral::KernelMode::SelfSimilar : spectral::KernelMode::Bracket;
        const auto k = spectral::build_kernel(g, p, ko);
        spectral::SpectrumState st{g, {}, 0.0, p};
        for (double r : g.nodes) st.values.push_back(std::exp(-r * r));
        spectral::EvolveOptions eo;
        eo.integrator = exact ? spectral::Integrator::Expm : spectral::Integrator::RK4;
        eo.balance_s = {p.s};
        return spectral::evolve(st, k, t_final, dt, trackers, eo);
      },
      "evolve a unit Gaussian spectrum on a log grid", py::arg("params"), py::arg("rho_min") = 1e-2,
      py::arg("rho_max") = 1e3, py::arg("nodes") = 128, py::arg("t_final") = 1.0, py::arg("dt") = 0.1,
      py::arg("trackers") = std::vector<double>{}, py::arg("selfsimilar") = false, py::arg("exact") = true);

  m.def(
      "lattice_rate_check",
      [](double alpha, int n_max, long n_samples, double t_final, std::uint64_t seed) {
        mc::LatticeConfig c;
        c.alpha = alpha;
        c.n_max = n_max;
        c.n_samples = n_samples;
        c.seed = seed;
        const mc::Lattice lat(c);
        const auto r = mc::run_ensemble(c, mc::gaussian_blob(lat, 3.0), t_final, {0.0, 0.5 * t_final, t_final});
        std::vector<double> out;
        for (const auto& rc : r.rate_checks) out.push_back(rc.pass_fraction);
        return out;
      },
      "share of lattice modes whose empirical rate matches the master equation, per window", py::arg("alpha") = 0.5,
      py::arg("n_max") = 8, py::arg("n_samples") = 200, py::arg("t_final") = 0.02, py::arg("seed") = 0);

  m.def(
      "validate_config",
      [](const std::string& text) { return cli::resolve(cli::json::parse(text)).dump(); },
      "resolve a JSON config string; raises ConfigError when invalid", py::arg("text"));
}
