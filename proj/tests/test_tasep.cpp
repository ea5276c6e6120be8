#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "slowbond/lpp.hpp"
#include "slowbond/tasep.hpp"

using namespace sb;
using tasep::BondClocks;
using tasep::Window;

namespace {

tasep::Occupancies occ_from_bits(Window win, const std::vector<int>& bits) {
  tasep::Occupancies occ;
  occ.win = win;
  occ.bits.assign(bits.begin(), bits.end());
  return occ;
}

}  // namespace

TEST_CASE("init_bernoulli: extremes, reproducibility, concentration") {
  Window win{-50, 50};
  auto empty = tasep::init_bernoulli(0.0, win, 1);
  auto full = tasep::init_bernoulli(1.0, win, 1);
  CHECK(empty.particle_count() == 0);
  CHECK(full.particle_count() == win.size());

  auto a = tasep::init_bernoulli(0.5, {-2000, 2000}, 9);
  auto b = tasep::init_bernoulli(0.5, {-2000, 2000}, 9);
  CHECK(a.bits == b.bits);
  double density = static_cast<double>(a.particle_count()) / a.win.size();
  CHECK(std::abs(density - 0.5) < 0.03);

  CHECK_THROWS_AS(tasep::init_bernoulli(1.5, win, 1), std::invalid_argument);
}

TEST_CASE("init_from_profile: step profile forms Bernoulli blocks") {
  auto profile = hydro::MacroProfile::from_segments(0.8, {{0.0, 0.2}});
  Window win{-4000, 4000};
  auto occ = tasep::init_from_profile(profile, 1000.0, win, 3);
  double left = tasep::measure_density(occ, -3.0, -1.0, 1000.0) / 2.0;
  double right = tasep::measure_density(occ, 1.0, 3.0, 1000.0) / 2.0;
  CHECK(std::abs(left - 0.8) < 0.03);
  CHECK(std::abs(right - 0.2) < 0.03);

  auto zero = tasep::init_from_profile(hydro::MacroProfile::constant(0.0), 100.0, win, 3);
  CHECK(zero.particle_count() == 0);

  // constant profile matches init_bernoulli exactly (same per-site keying)
  auto flat = tasep::init_from_profile(hydro::MacroProfile::constant(0.3), 50.0, win, 17);
  CHECK(flat.bits == tasep::init_bernoulli(0.3, win, 17).bits);
}

TEST_CASE("measure_density: exact forms and range validation") {
  Window win{-10, 10};
  auto empty = tasep::init_bernoulli(0.0, win, 1);
  CHECK(tasep::measure_density(empty, -0.5, 0.5, 10.0) == 0.0);
  auto full = tasep::init_bernoulli(1.0, win, 1);
  // (1/n) * #{i in (floor(na), floor(nb)]}
  CHECK(tasep::measure_density(full, -0.5, 0.5, 10.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(tasep::measure_density(full, -2.0, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("heights <-> occupancies round trip") {
  auto occ = occ_from_bits({-3, 3}, {1, 0, 1, 1, 0, 0, 1});
  auto h = tasep::heights_from_occ(occ);
  CHECK(h.at(0) == 0);  // anchored
  auto back = tasep::occ_from_heights(h);
  CHECK(back.win.lo == occ.win.lo);
  CHECK(back.bits == occ.bits);

  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> bits(31);
    for (auto& b : bits) b = static_cast<int>(gen() & 1u);
    auto o = occ_from_bits({-15, 15}, bits);
    CHECK(tasep::occ_from_heights(tasep::heights_from_occ(o)).bits == o.bits);
  }

  tasep::HeightConfig bad;
  bad.win = {0, 2};
  bad.z = {0, 2, 3};
  CHECK_THROWS_AS(tasep::occ_from_heights(bad), std::invalid_argument);

  // all-empty and all-full height shapes
  auto flat = tasep::heights_from_occ(occ_from_bits({-2, 2}, {0, 0, 0, 0, 0}));
  for (long i = flat.win.lo; i <= flat.win.hi; ++i) CHECK(flat.at(i) == 0);
  auto stairs = tasep::heights_from_occ(occ_from_bits({-2, 2}, {1, 1, 1, 1, 1}));
  for (long i = flat.win.lo + 1; i <= flat.win.hi; ++i)
    CHECK(stairs.at(i) - stairs.at(i - 1) == 1);
}

TEST_CASE("evolve: empty window is inert, trajectories reproducible") {
  Window win{-20, 20};
  auto clocks = BondClocks::slow_bond(11, 0.5);
  auto empty = tasep::init_bernoulli(0.0, win, 2);
  auto res = tasep::evolve(empty, clocks, 25.0);
  CHECK(res.occ.particle_count() == 0);
  for (auto j : res.current) CHECK(j == 0);

  auto occ = tasep::init_bernoulli(0.4, win, 2);
  auto r1 = tasep::evolve(occ, clocks, 10.0);
  auto r2 = tasep::evolve(occ, clocks, 10.0);
  CHECK(r1.occ.bits == r2.occ.bits);
  CHECK(r1.current == r2.current);
}

TEST_CASE("evolve: conservation, exclusion, current identity") {
  Window win{-40, 40};
  auto clocks = BondClocks::slow_bond(29, 0.3);
  auto occ = tasep::init_bernoulli(0.5, win, 7);
  long n0 = occ.particle_count();

  tasep::LineEngine engine(tasep::heights_from_occ(occ), clocks);
  for (double t : {1.0, 3.0, 7.5, 12.0}) {
    engine.run_until(t);
    auto now = engine.occupancies();
    CHECK(now.particle_count() == n0);  // closed window conserves particles
    for (auto b : now.bits) CHECK((b == 0 || b == 1));
    // J_i(t) = z_i(0) - z_i(t), exactly, every active bond
    for (long b = engine.bond_window().lo; b <= engine.bond_window().hi; ++b)
      CHECK(engine.current_at(b) == engine.initial_heights().at(b) - engine.heights().at(b));
  }
}

TEST_CASE("evolve: single particle crosses the slow bond at rate r") {
  const double r = 0.5;
  const int trials = 4000;
  double sum = 0.0;
  for (int s = 0; s < trials; ++s) {
    auto occ = occ_from_bits({-3, 3}, {0, 0, 0, 1, 0, 0, 0});  // one particle at 0
    tasep::LineEngine engine(tasep::heights_from_occ(occ),
                             BondClocks::slow_bond(1000 + s, r));
    engine.enable_jump_log();
    engine.run_until(60.0);
    REQUIRE(!engine.jump_log().empty());
    CHECK(engine.jump_log().front().second == 0);  // first jump is across bond 0
    sum += engine.jump_log().front().first;
  }
  double mean = sum / trials;
  double se = (1.0 / r) / std::sqrt(static_cast<double>(trials));
  CHECK(std::abs(mean - 1.0 / r) < 3.0 * se);
}

TEST_CASE("monotone coupling: height order is preserved under shared clocks") {
  Window win{-25, 25};
  auto clocks = BondClocks::slow_bond(77, 0.4);
  auto za = tasep::heights_from_occ(tasep::init_bernoulli(0.3, win, 5));
  auto zb = tasep::heights_from_occ(tasep::init_bernoulli(0.6, win, 6));
  // pointwise min of two height configs is a height config dominated by both
  auto zmin = za;
  for (long i = za.win.lo; i <= za.win.hi; ++i) zmin.at(i) = std::min(za.at(i), zb.at(i));

  tasep::LineEngine upper(za, clocks);
  tasep::LineEngine lower(zmin, clocks);
  for (double t : {0.5, 2.0, 5.0, 9.0}) {
    upper.run_until(t);
    lower.run_until(t);
    for (long i = za.win.lo; i <= za.win.hi; ++i)
      CHECK(upper.heights().at(i) >= lower.heights().at(i));
  }
}

TEST_CASE("simulate_xi: initial shape, growth constraints, margin refusal") {
  auto clocks = BondClocks::slow_bond(13, 0.5);
  double horizon = 3.0;
  long margin = tasep::light_cone_margin(horizon);
  Window obs{-6, 6};
  Window win{obs.lo - margin, obs.hi + margin};

  auto traj = tasep::simulate_xi(0, clocks, horizon, win, obs);
  for (long i = obs.lo; i <= obs.hi; ++i) {
    CHECK(traj.value_at(i, 0.0) == tasep::XiTrajectory::initial(i));
    CHECK(traj.value_at(i, horizon) >= tasep::XiTrajectory::initial(i));
  }
  // constraints hold at every event time (checked at jump instants)
  for (long i = obs.lo + 1; i < obs.hi; ++i) {
    const auto& times = traj.jump_times[static_cast<std::size_t>(i - win.lo)];
    for (double t : times) {
      CHECK(traj.value_at(i, t) <= traj.value_at(i - 1, t));
      CHECK(traj.value_at(i, t) <= traj.value_at(i + 1, t) + 1);
    }
  }
  CHECK_THROWS_AS(tasep::simulate_xi(0, clocks, horizon, {-10, 10}, obs), std::runtime_error);
}

TEST_CASE("xi level-crossing times match wedge passage statistics") {
  // Distributional identity: the time xi^0_i reaches level j has the law of
  // the wedge passage time to (i,j) with the defect column at 0.
  const long ti = 1, tj = 3;
  const double r = 0.5;
  const int reps = 500;
  double horizon = 60.0;
  long margin = tasep::light_cone_margin(horizon);
  Window obs{ti, ti};
  Window win{obs.lo - margin, obs.hi + margin};

  std::vector<double> from_xi, from_lpp;
  for (int s = 0; s < reps; ++s) {
    auto traj = tasep::simulate_xi(0, BondClocks::slow_bond(5000 + s, r), horizon, win, obs);
    double t = traj.level_time(ti, tj);
    REQUIRE(std::isfinite(t));
    from_xi.push_back(t);
  }
  for (int s = 0; s < reps; ++s) {
    auto grid = lpp::sample_wedge(lpp::wedge_extent_for_target(ti, tj), 0, r, 9000 + s);
    from_lpp.push_back(lpp::passage_time_wedge(grid).at(ti, tj));
  }
  auto stats = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    var /= (v.size() - 1);
    return std::pair<double, double>{m, var};
  };
  auto [m1, v1] = stats(from_xi);
  auto [m2, v2] = stats(from_lpp);
  double se = std::sqrt(v1 / reps + v2 / reps);
  CHECK(std::abs(m1 - m2) < 3.0 * se);
  // second moments within 3 sigma as well
  std::vector<double> sq1, sq2;
  for (double x : from_xi) sq1.push_back(x * x);
  for (double x : from_lpp) sq2.push_back(x * x);
  auto [q1, w1] = stats(sq1);
  auto [q2, w2] = stats(sq2);
  CHECK(std::abs(q1 - q2) < 3.0 * std::sqrt(w1 / reps + w2 / reps));
}

TEST_CASE("coupling_check: exact identity on small configurations") {
  std::mt19937_64 gen(2024);
  for (int rep = 0; rep < 10; ++rep) {
    Window win{-120, 120};
    tasep::Occupancies occ;
    occ.win = win;
    occ.bits.assign(static_cast<std::size_t>(win.size()), 0);
    int particles = 1 + static_cast<int>(gen() % 10);
    for (int p = 0; p < particles; ++p)
      occ.bits[static_cast<std::size_t>(60 + gen() % 120)] = 1;  // sites in [-60, 60)

    auto report = tasep::coupling_check(tasep::heights_from_occ(occ),
                                        BondClocks::slow_bond(300 + rep, 0.5), 3.0,
                                        {0.0, 0.7, 1.9, 3.0});
    CHECK(report.pass);
    CHECK(report.max_abs_diff == 0);
  }
}

TEST_CASE("coupling_check: refuses a window without light-cone headroom") {
  auto occ = occ_from_bits({-8, 8}, std::vector<int>(17, 0));
  auto h = tasep::heights_from_occ(occ);
  CHECK_THROWS_AS(tasep::coupling_check(h, BondClocks::slow_bond(1, 0.5), 5.0, {1.0}),
                  std::runtime_error);
}

TEST_CASE("stationary_pair_correlation: empty system and homogeneous smoke") {
  auto zero = tasep::stationary_pair_correlation(0.0, 0.5, 200, 10.0, 100.0, 3, {-3, 0, 3}, 0.3);
  for (double e : zero.estimate) CHECK(e == 0.0);

  // r = 1, rho = 0.3: all bonds near rho(1-rho) = 0.21
  auto hom = tasep::stationary_pair_correlation(0.3, 1.0, 600, 500.0, 4000.0, 8, {-5, 0, 5}, 0.5);
  CHECK(hom.precondition_ok);
  for (double e : hom.estimate) CHECK(std::abs(e - 0.21) < 0.02);

  auto flagged = tasep::stationary_pair_correlation(0.5, 0.5, 100, 1.0, 10.0, 3, {0}, 0.3);
  CHECK_FALSE(flagged.precondition_ok);
}

TEST_CASE("BondClocks: arbitrary finite rate maps (several slow bonds)") {
  tasep::BondClocks clocks;
  clocks.seed = 19;
  clocks.overrides[0] = 0.5;
  clocks.overrides[10] = 0.25;
  CHECK(clocks.rate(0) == 0.5);
  CHECK(clocks.rate(10) == 0.25);
  CHECK(clocks.rate(3) == 1.0);

  Window win{-20, 20};
  auto occ = tasep::init_bernoulli(0.5, win, 19);
  auto res = tasep::evolve(occ, clocks, 5.0);
  CHECK(res.occ.particle_count() == occ.particle_count());
}

TEST_CASE("snapshot: round trip and validation") {
  auto occ = tasep::init_bernoulli(0.37, {-33, 60}, 21);
  std::stringstream buf;
  tasep::write_snapshot(buf, occ, 12.5, 21);
  auto snap = tasep::read_snapshot(buf);
  CHECK(snap.occ.win.lo == occ.win.lo);
  CHECK(snap.occ.win.hi == occ.win.hi);
  CHECK(snap.occ.bits == occ.bits);
  CHECK(snap.time == 12.5);
  CHECK(snap.seed == 21);

  std::stringstream junk("definitely not a snapshot");
  CHECK_THROWS_AS(tasep::read_snapshot(junk), std::runtime_error);
}
