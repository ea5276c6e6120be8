#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "slowbond/hydro.hpp"

using namespace sb;
using hydro::MacroProfile;
using hydro::MacroRate;

TEST_CASE("MacroRate: critical density matches the current condition") {
  for (double l0 : {1.0, 0.9, 0.64, 0.5, 0.2}) {
    auto rate = MacroRate::from_lambda0(l0);
    CHECK(std::abs(hydro::f0(rate.rho_star) - l0 / 4.0) < 1e-12);
    CHECK(rate.B >= 0.0);
    CHECK(rate.B < 1.0);
    CHECK(rate.rho_star > 0.0);
    CHECK(rate.rho_star <= 0.5);
  }
  CHECK_THROWS_AS(MacroRate::from_lambda0(0.0), std::invalid_argument);
  CHECK_THROWS_AS(MacroRate::from_lambda0(1.2), std::invalid_argument);
  CHECK(MacroRate::from_kappa(3.9).lambda0 == doctest::Approx(1.0));
}

TEST_CASE("f0 and g0: values and conjugacy") {
  CHECK(hydro::f0(0.0) == 0.0);
  CHECK(hydro::f0(0.5) == doctest::Approx(0.25));
  CHECK(hydro::f0(0.1) == doctest::Approx(0.09));
  CHECK_THROWS_AS(hydro::f0(1.5), std::domain_error);

  CHECK(hydro::g0(1.0) == 0.0);
  CHECK(hydro::g0(0.0) == doctest::Approx(0.25));
  CHECK(hydro::g0(-2.0) == doctest::Approx(2.0));

  // g0(x) = max_rho { f0(rho) - x rho } on a fine grid
  for (double x = -2.0; x <= 2.0; x += 0.05) {
    double best = -1e18;
    const int n = 100000;
    for (int k = 0; k <= n; ++k) {
      double rho = static_cast<double>(k) / n;
      best = std::max(best, hydro::f0(rho) - x * rho);
    }
    CHECK(std::abs(hydro::g0(x) - best) < 1e-6);
  }
}

TEST_CASE("gamma0: values, level identity, homogeneity") {
  CHECK(hydro::gamma0(1.0, 1.0) == doctest::Approx((std::sqrt(2.0) + 1.0) * (std::sqrt(2.0) + 1.0)));
  CHECK(hydro::gamma0(0.0, 2.5) == doctest::Approx(10.0));
  CHECK_THROWS_AS(hydro::gamma0(0.5, -0.2), std::domain_error);
  CHECK_THROWS_AS(hydro::gamma0(-1.0, 0.5), std::domain_error);

  for (int k = 0; k <= 200; ++k) {
    double x = -1.0 + 2.0 * k / 200.0;
    CHECK(std::abs(hydro::gamma0(x, hydro::g0(x)) - 1.0) < 1e-12);
  }

  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int k = 0; k < 100; ++k) {
    double y = u(gen), x = u(gen) - y;  // stays inside the cone
    double c = u(gen);
    double lhs = hydro::gamma0(c * x, c * y);
    double rhs = c * hydro::gamma0(x, y);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("cost_integral: anchor values") {
  auto rate = MacroRate::from_lambda0(0.64);  // B = 0.6
  double t = 2.0;

  // far field, q = x: straight wait costs t/4
  CHECK(hydro::cost_integral(3.0, t, 3.0, rate) == doctest::Approx(t / 4.0));
  // q = x - t: free slope-1 run
  CHECK(hydro::cost_integral(0.5, t, 0.5 - t, rate) == doctest::Approx(0.0));
  // x = q = 0: wait at the defect
  CHECK(hydro::cost_integral(0.0, t, 0.0, rate) == doctest::Approx(0.25 * t * rate.lambda0));

  auto hom = MacroRate::from_lambda0(1.0);
  CHECK(hydro::cost_integral(0.0, t, 0.0, hom) == doctest::Approx(t / 4.0));
  CHECK_THROWS_AS(hydro::cost_integral(0.0, 0.0, 0.0, rate), std::domain_error);
}

TEST_CASE("cost_integral: continuity across case boundaries") {
  auto rate = MacroRate::from_lambda0(0.64);
  const double eps = 1e-9;
  for (double t : {0.7, 1.0, 2.5}) {
    double Bt = rate.B * t;
    for (double x : {0.1 * Bt, 0.45 * Bt, 0.9 * Bt}) {
      double edge = std::pow(std::sqrt(Bt) - std::sqrt(x), 2);
      for (double qb : {x - Bt, edge}) {
        double lo = hydro::cost_integral(x, t, qb - eps, rate);
        double hi = hydro::cost_integral(x, t, qb + eps, rate);
        CHECK(std::abs(lo - hi) < 1e-6);
      }
      // mirrored branch
      double xm = -x;
      double edgem = -std::pow(std::sqrt(Bt) - std::sqrt(x), 2);
      for (double qb : {edgem, xm + Bt}) {
        double lo = hydro::cost_integral(xm, t, qb - eps, rate);
        double hi = hydro::cost_integral(xm, t, qb + eps, rate);
        CHECK(std::abs(lo - hi) < 1e-6);
      }
    }
    // |x| = Bt boundary in x
    for (double q : {-0.3, 0.0, 0.4}) {
      double lo = hydro::cost_integral(Bt - eps, t, q, rate);
      double hi = hydro::cost_integral(Bt + eps, t, q, rate);
      CHECK(std::abs(lo - hi) < 1e-6);
    }
  }
}

TEST_CASE("cost_integral: never above the homogeneous cost, equal at lambda0 = 1") {
  auto rate = MacroRate::from_lambda0(0.51);
  auto hom = MacroRate::from_lambda0(1.0);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ux(-3.0, 3.0), ut(0.05, 3.0);
  for (int k = 0; k < 500; ++k) {
    double x = ux(gen), q = ux(gen), t = ut(gen);
    double defected = hydro::cost_integral(x, t, q, rate);
    double free_run = t * hydro::g0((x - q) / t);
    CHECK(defected <= free_run + 1e-12);
    CHECK(hydro::cost_integral(x, t, q, hom) == doctest::Approx(free_run));
  }
}

TEST_CASE("optimal_path: value agrees with cost_integral, waypoints ordered") {
  auto rate = MacroRate::from_lambda0(0.64);
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> ux(-2.0, 2.0), ut(0.1, 3.0);
  for (int k = 0; k < 400; ++k) {
    double x = ux(gen), q = ux(gen), t = ut(gen);
    auto p = hydro::optimal_path(x, t, q, rate);
    CHECK(std::abs(p.value - hydro::cost_integral(x, t, q, rate)) < 1e-12);
    if (p.kind == hydro::PathDescription::Kind::three_segment) {
      CHECK(p.s1 >= -1e-12);
      CHECK(p.s1 <= p.s2 + 1e-12);
      CHECK(p.s2 <= t + 1e-12);
    }
  }
  auto degenerate = hydro::optimal_path(0.0, 1.5, 0.0, rate);
  CHECK(degenerate.kind == hydro::PathDescription::Kind::three_segment);
  CHECK(degenerate.s1 == 0.0);
  CHECK(degenerate.s2 == doctest::Approx(1.5));
  CHECK(degenerate.value == doctest::Approx(1.5 * rate.lambda0 / 4.0));

  // a pausing-range input: switch times sit at |q|/B and t - |x|/B
  double x = 0.1, q = 0.05, t = 1.0;
  CHECK(hydro::classify_cost_case(x, t, q, rate) == hydro::CostCase::d);
  auto pause = hydro::optimal_path(x, t, q, rate);
  CHECK(pause.kind == hydro::PathDescription::Kind::three_segment);
  CHECK(pause.s1 == doctest::Approx(q / rate.B));
  CHECK(pause.s2 == doctest::Approx(t - x / rate.B));
}

TEST_CASE("macro_passage: straight limit, column through the origin, lower bound") {
  auto hom = MacroRate::from_lambda0(1.0);
  auto rate = MacroRate::from_lambda0(0.64);

  CHECK(hydro::macro_passage(0.3, 1.0, 0.7, hom) == hydro::gamma0(1.0, 0.7));

  for (double y : {0.5, 1.0, 2.0})
    CHECK(hydro::macro_passage(0.0, 0.0, y, rate) ==
          doctest::Approx(rate.kappa() * y).epsilon(1e-6));

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.05, 2.0), uq(-2.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    double y = u(gen);
    double x = u(gen) - y;
    double q = uq(gen);
    CHECK(hydro::macro_passage(q, x, y, rate) >= hydro::gamma0(x, y) - 1e-12);
  }
}

TEST_CASE("interface_level: homogeneous level curve and unreachable column") {
  auto hom = MacroRate::from_lambda0(1.0);
  auto rate = MacroRate::from_lambda0(0.64);
  for (double t : {0.5, 1.0, 2.0}) {
    for (double x : {-0.9 * t, -0.3 * t, 0.0, 0.4 * t, 0.95 * t}) {
      CHECK(std::abs(hydro::interface_level(0.4, x, t, hom) - t * hydro::g0(x / t)) < 2e-6);
      // a column far away never helps
      CHECK(std::abs(hydro::interface_level(80.0, x, t, rate) - t * hydro::g0(x / t)) < 2e-6);
    }
  }
}

TEST_CASE("interface_level matches cost_integral through the wedge identity") {
  auto rate = MacroRate::from_lambda0(0.64);
  for (double t : {0.8, 1.6}) {
    for (double x : {-1.2, -0.3, 0.0, 0.2, 0.9}) {
      for (double q : {-1.0, -0.2, 0.0, 0.3, 1.1}) {
        double lhs = hydro::cost_integral(x, t, q, rate);
        double rhs = hydro::interface_level(-q, x - q, t, rate);
        CHECK(std::abs(lhs - rhs) < 1e-3);
      }
    }
  }
}

TEST_CASE("MacroProfile: anchoring, lookup, resampling") {
  auto p = MacroProfile::from_segments(0.8, {{-1.0, 0.3}, {1.5, 0.6}});
  CHECK(p.v0(0.0) == doctest::Approx(0.0));
  CHECK(p.density_at(-2.0) == doctest::Approx(0.8));
  CHECK(p.density_at(-0.5) == doctest::Approx(0.3));
  CHECK(p.density_at(2.0) == doctest::Approx(0.6));
  CHECK(p.v0(1.0) - p.v0(0.5) == doctest::Approx(0.3 * 0.5));
  CHECK(p.v0(-1.0) == doctest::Approx(-0.3));             // integral back to 0
  CHECK(p.v0(-2.0) == doctest::Approx(-0.3 - 0.8));       // left tail slope

  std::vector<double> xs, vs;
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    xs.push_back(x);
    vs.push_back(p.v0(x) + 5.0);  // arbitrary shift is re-anchored away
  }
  auto q = MacroProfile::from_values(xs, vs, 0.8, 0.6);
  for (double x = -2.9; x <= 2.9; x += 0.1) CHECK(std::abs(q.v0(x) - p.v0(x)) < 1e-12);

  CHECK_THROWS_AS(MacroProfile({1.0, 0.5}, {0.1, 0.2, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(MacroProfile({}, {1.4}), std::invalid_argument);
}

TEST_CASE("value_function: flat profiles reproduce the closed forms") {
  auto hom = MacroRate::from_lambda0(1.0);
  auto flat = MacroProfile::constant(0.5);
  for (double x : {-1.0, 0.0, 0.7})
    CHECK(hydro::value_at(flat, 2.0, hom, x) == doctest::Approx(0.5 * x - 0.5).epsilon(1e-10));

  auto rate = MacroRate::from_lambda0(0.64);  // rho* = 0.2
  double t = 1.7;
  // inside the right plateau window
  double x = 0.5 * t * (1.0 - rate.rho_star - 0.5);
  CHECK(hydro::value_at(flat, t, rate, x) ==
        doctest::Approx(rate.rho_star * x - 0.25 * t * rate.lambda0).epsilon(1e-10));
  // matching point of the two branches at x = -0.3 t
  CHECK(hydro::value_at(flat, t, rate, -0.3 * t) == doctest::Approx(-0.4 * t).epsilon(1e-10));
  CHECK(hydro::flat_profile_value(0.5, rate, -0.3 * t, t) == doctest::Approx(-0.4 * t));
}

TEST_CASE("value_function agrees with the flat oracle on random inputs") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> urho(0.0, 1.0), ul(0.15, 1.0), ux(-3.0, 3.0),
      ut(0.1, 3.0);
  for (int k = 0; k < 200; ++k) {
    double rho = urho(gen);
    auto rate = MacroRate::from_lambda0(ul(gen));
    double x = ux(gen), t = ut(gen);
    double direct = hydro::value_at(MacroProfile::constant(rho), t, rate, x);
    double oracle = hydro::flat_profile_value(rho, rate, x, t);
    CHECK(std::abs(direct - oracle) < 1e-6);
  }
}

TEST_CASE("value function dominates the homogeneous one and decreases in lambda0") {
  auto p = MacroProfile::from_segments(0.7, {{-0.5, 0.4}, {0.8, 0.55}});
  auto hom = MacroRate::from_lambda0(1.0);
  auto mid = MacroRate::from_lambda0(0.8);
  auto low = MacroRate::from_lambda0(0.5);
  for (double t : {0.5, 2.0}) {
    for (double x = -2.0; x <= 2.0; x += 0.23) {
      double vh = hydro::value_at(p, t, hom, x);
      double vm = hydro::value_at(p, t, mid, x);
      double vl = hydro::value_at(p, t, low, x);
      CHECK(vm >= vh - 1e-10);
      CHECK(vl >= vm - 1e-10);
    }
  }
}

TEST_CASE("current through the origin is capped by lambda0/4") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    auto p = MacroProfile::from_segments(u(gen), {{-0.7, u(gen)}, {0.4, u(gen)}});
    auto rate = MacroRate::from_lambda0(0.3 + 0.7 * u(gen));
    for (double t : {0.4, 1.3}) {
      double flow = p.v0(0.0) - hydro::value_at(p, t, rate, 0.0);
      CHECK(flow <= 0.25 * t * rate.lambda0 + 1e-9);
    }
  }
}

TEST_CASE("mesh density: flat recovery, two-point mesh, plateau steps") {
  auto hom = MacroRate::from_lambda0(1.0);
  std::vector<double> grid;
  for (double x = -2.0; x <= 2.0 + 1e-12; x += 0.05) grid.push_back(x);
  auto sol = hydro::value_function(MacroProfile::constant(0.3), 1.0, hom, grid);
  for (double d : sol.rho) CHECK(d == doctest::Approx(0.3).epsilon(1e-9));
  CHECK_FALSE(sol.density_warning);

  auto two = hydro::density({0.0, 1.0}, {0.0, 0.4}, nullptr);
  CHECK(two.size() == 2);
  CHECK(two[0] == doctest::Approx(0.4));
  CHECK_THROWS_AS(hydro::density({0.0}, {0.0}, nullptr), std::invalid_argument);

  // plateau staircase around the origin for a disturbed flat profile
  auto rate = MacroRate::from_lambda0(0.64);  // rho* = 0.2
  double t = 1.0, rho = 0.5;
  double h = 0.01;
  grid.clear();
  for (double x = -1.0; x <= 1.0 + 1e-12; x += h) grid.push_back(x);
  auto dist = hydro::value_function(MacroProfile::constant(rho), t, rate, grid);
  double left_edge = -t * (rho - rate.rho_star);
  double right_edge = t * (1.0 - rate.rho_star - rho);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double x = grid[i];
    double near_step = std::min({std::abs(x - left_edge), std::abs(x), std::abs(x - right_edge)});
    if (near_step < 1.6 * h) continue;  // allow one cell of smearing
    double expect = rho;
    if (x > left_edge && x < 0.0) expect = 1.0 - rate.rho_star;
    if (x > 0.0 && x < right_edge) expect = rate.rho_star;
    CHECK(std::abs(dist.rho[i] - expect) < 1e-6);
  }
  // density stays within [0,1] between mesh neighbors
  for (std::size_t i = 1; i < dist.v.size(); ++i) {
    double slope = (dist.v[i] - dist.v[i - 1]) / (grid[i] - grid[i - 1]);
    CHECK(slope >= -1e-9);
    CHECK(slope <= 1.0 + 1e-9);
  }
}

TEST_CASE("semigroup: evolving in two stages matches one stage") {
  auto rate = MacroRate::from_lambda0(0.64);
  auto p = MacroProfile::from_segments(0.65, {{0.3, 0.35}});
  double s = 0.4, t = 1.0;

  std::vector<double> xs, vs;
  for (double x = -6.0; x <= 6.0 + 1e-12; x += 0.002) {
    xs.push_back(x);
    vs.push_back(hydro::value_at(p, s, rate, x));
  }
  double shift = 0.0;  // from_values re-anchors v(0,s) to 0
  {
    std::size_t k = std::lower_bound(xs.begin(), xs.end(), 0.0) - xs.begin();
    if (k == 0)
      shift = vs[0];
    else
      shift = vs[k - 1] + (vs[k] - vs[k - 1]) * (0.0 - xs[k - 1]) / (xs[k] - xs[k - 1]);
  }
  auto mid = MacroProfile::from_values(xs, vs, p.densities().front(), p.densities().back());
  for (double x : {-1.1, -0.4, 0.0, 0.5, 1.2}) {
    double two_stage = hydro::value_at(mid, t - s, rate, x) + shift;
    double one_stage = hydro::value_at(p, t, rate, x);
    CHECK(std::abs(two_stage - one_stage) < 1e-5);
  }
}

TEST_CASE("invariance_check: admissible and inadmissible shocks") {
  auto rate = MacroRate::from_lambda0(0.64);
  double rs = rate.rho_star;
  std::vector<double> times{0.1, 1.0, 5.0};

  auto flat = MacroProfile::constant(rs);
  auto rep_flat = hydro::invariance_check(flat, rate, times);
  CHECK(rep_flat.invariant);
  CHECK(rep_flat.jumps.empty());

  auto origin_down = MacroProfile::from_segments(1.0 - rs, {{0.0, rs}});
  auto rep_origin = hydro::invariance_check(origin_down, rate, times);
  CHECK(rep_origin.invariant);
  CHECK(rep_origin.jumps_admissible);

  auto up_anywhere = MacroProfile::from_segments(rs, {{0.7, 1.0 - rs}});
  auto rep_up = hydro::invariance_check(up_anywhere, rate, times);
  CHECK(rep_up.invariant);
  CHECK(rep_up.jumps_admissible);

  auto off_center_down = MacroProfile::from_segments(1.0 - rs, {{0.5, rs}});
  auto rep_bad = hydro::invariance_check(off_center_down, rate, times);
  CHECK_FALSE(rep_bad.invariant);
  CHECK_FALSE(rep_bad.jumps_admissible);
  CHECK(rep_bad.first_fail_t > 0.0);

  auto outside = MacroProfile::constant(0.05);
  CHECK_THROWS_AS(hydro::invariance_check(outside, rate, times), std::invalid_argument);
}
