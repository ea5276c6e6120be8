#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slowbond/hydro.hpp"
#include "slowbond/lpp.hpp"
#include "slowbond/tasep.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace sb;

namespace {

hydro::MacroProfile make_profile(double left_density,
                                 const std::vector<std::pair<double, double>>& segments) {
  if (segments.empty()) return hydro::MacroProfile::constant(left_density);
  return hydro::MacroProfile::from_segments(left_density, segments);
}

}  // namespace

PYBIND11_MODULE(_slowbond, m) {
  m.doc() = "slow-bond exclusion workbench: last-passage estimation, the "
            "macroscopic variational solver, and the particle simulator";

  // last-passage / kappa
  m.def("estimate_kappa",
        [](double r, int n, int replicas, std::uint64_t seed, int threads) {
          auto est = lpp::estimate_kappa(r, n, replicas, seed, threads);
          return py::dict("r"_a = est.r, "n"_a = est.n, "replicas"_a = est.replicas,
                          "mean"_a = est.mean, "std_error"_a = est.std_error,
                          "per_replica"_a = est.per_replica);
        },
        py::arg("r"), py::arg("n"), py::arg("replicas"), py::arg("seed"),
        py::arg("threads") = 0, "Monte Carlo estimate of kappa(r) = lim T(n,n)/n");
  m.def("kappa_bounds", [](double r) {
    auto b = lpp::kappa_bounds(r);
    return py::dict("r"_a = b.r, "lower"_a = b.lower, "upper"_a = b.upper);
  });
  m.def("lambda0_from_kappa", &lpp::lambda0_from_kappa, py::arg("kappa"),
        py::arg("tol") = 0.5);
  m.def("shape_probe", &lpp::shape_probe, py::arg("x"), py::arg("y"), py::arg("n"),
        py::arg("seed"), py::arg("replica") = 0,
        "T(floor(nx), floor(ny))/n on the homogeneous grid");
  m.def("wedge_quadrant_equivalence", &lpp::wedge_quadrant_equivalence, py::arg("n"),
        py::arg("r"), py::arg("seed"), py::arg("replica") = 0);

  // macroscopic solver
  m.def("f0", &hydro::f0);
  m.def("g0", &hydro::g0);
  m.def("gamma0", &hydro::gamma0);
  m.def("cost_integral",
        [](double x, double t, double q, double lambda0) {
          return hydro::cost_integral(x, t, q, hydro::MacroRate::from_lambda0(lambda0));
        },
        py::arg("x"), py::arg("t"), py::arg("q"), py::arg("lambda0"));
  m.def("interface_level",
        [](double q, double x, double t, double lambda0) {
          return hydro::interface_level(q, x, t, hydro::MacroRate::from_lambda0(lambda0));
        },
        py::arg("q"), py::arg("x"), py::arg("t"), py::arg("lambda0"));
  m.def("macro_passage",
        [](double q, double x, double y, double lambda0) {
          return hydro::macro_passage(q, x, y, hydro::MacroRate::from_lambda0(lambda0));
        },
        py::arg("q"), py::arg("x"), py::arg("y"), py::arg("lambda0"));
  m.def("flat_profile_value",
        [](double rho, double lambda0, double x, double t) {
          return hydro::flat_profile_value(rho, hydro::MacroRate::from_lambda0(lambda0), x, t);
        },
        py::arg("rho"), py::arg("lambda0"), py::arg("x"), py::arg("t"));
  m.def("critical_density",
        [](double lambda0) { return hydro::MacroRate::from_lambda0(lambda0).rho_star; });
  m.def("value_function",
        [](double left_density, const std::vector<std::pair<double, double>>& segments,
           double t, double lambda0, const std::vector<double>& x_grid) {
          auto sol = hydro::value_function(make_profile(left_density, segments), t,
                                           hydro::MacroRate::from_lambda0(lambda0), x_grid);
          return py::dict("x"_a = sol.x, "v"_a = sol.v, "rho"_a = sol.rho,
                          "argmax_q"_a = sol.argmax_q,
                          "density_warning"_a = sol.density_warning);
        },
        py::arg("left_density"), py::arg("segments"), py::arg("t"), py::arg("lambda0"),
        py::arg("x_grid"));
  m.def("invariance_check",
        [](double left_density, const std::vector<std::pair<double, double>>& segments,
           double lambda0, const std::vector<double>& times) {
          auto rep = hydro::invariance_check(make_profile(left_density, segments),
                                             hydro::MacroRate::from_lambda0(lambda0), times);
          return py::dict("invariant"_a = rep.invariant,
                          "max_deviation"_a = rep.max_deviation,
                          "first_fail_t"_a = rep.first_fail_t,
                          "jumps_admissible"_a = rep.jumps_admissible);
        },
        py::arg("left_density"), py::arg("segments"), py::arg("lambda0"), py::arg("times"));

  // simulation
  m.def("simulate",
        [](double r, double rho, int n, double t, std::uint64_t seed,
           const std::vector<std::pair<double, double>>& windows,
           const std::vector<double>& current_points) {
          double amax = 0.5;
          for (auto& [a, b] : windows) amax = std::max({amax, std::abs(a), std::abs(b)});
          for (double a : current_points) amax = std::max(amax, std::abs(a));
          long half = static_cast<long>(std::ceil(n * (amax + 2.0 * t))) + 100;
          auto occ0 = tasep::init_bernoulli(rho, {-half, half}, seed);
          tasep::LineEngine engine(tasep::heights_from_occ(occ0),
                                   tasep::BondClocks::slow_bond(seed, r));
          engine.run_until(n * t);
          auto occ = engine.occupancies();
          std::vector<double> masses, currents;
          for (auto& [a, b] : windows) masses.push_back(tasep::measure_density(occ, a, b, n));
          for (double a : current_points)
            currents.push_back(
                static_cast<double>(engine.current_at(static_cast<long>(std::floor(n * a)))) / n);
          return py::dict("window_mass"_a = masses, "current"_a = currents);
        },
        py::arg("r"), py::arg("rho"), py::arg("n"), py::arg("t"), py::arg("seed"),
        py::arg("windows"), py::arg("current_points") = std::vector<double>{},
        "evolve a Bernoulli start and report window masses and currents");
  m.def("pair_correlation",
        [](double rho, double r, long window_sites, double burn_in, double horizon,
           std::uint64_t seed, const std::vector<long>& bonds, double rho_star) {
          auto pc = tasep::stationary_pair_correlation(rho, r, window_sites, burn_in, horizon,
                                                       seed, bonds, rho_star);
          return py::dict("bonds"_a = pc.bonds, "estimate"_a = pc.estimate,
                          "precondition_ok"_a = pc.precondition_ok);
        },
        py::arg("rho"), py::arg("r"), py::arg("window_sites"), py::arg("burn_in"),
        py::arg("horizon"), py::arg("seed"), py::arg("bonds"), py::arg("rho_star"));
}
