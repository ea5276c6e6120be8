#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <queue>
#include <utility>
#include <vector>

#include "slowbond/hydro.hpp"
#include "slowbond/rng.hpp"

// Event-driven simulation of the slow-bond exclusion process: occupancies and
// their height representation, per-bond Poisson clocks addressable by
// absolute bond index, the wedge-initial auxiliary processes, the exact
// variational-coupling identity, and long-run pair-correlation estimation.
namespace sb::tasep {

struct Window {
  long lo = 0;
  long hi = 0;  // inclusive
  long size() const { return hi - lo + 1; }
  bool contains(long i) const { return i >= lo && i <= hi; }
};

// ---------------------------------------------------------------------------
// States.
// ---------------------------------------------------------------------------

// 0/1 occupation numbers on [lo,hi]; the window is closed: no jumps cross
// either edge.
struct Occupancies {
  Window win;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(long i) const { return bits[static_cast<std::size_t>(i - win.lo)]; }
  long particle_count() const;
};

// Labeled-particle heights z_i with increments z_{i+1} - z_i in {0,1};
// eta_i = z_i - z_{i-1} recovers the occupancies, and the cumulative current
// across bond i is z_i(0) - z_i(t).
struct HeightConfig {
  Window win;
  std::vector<long long> z;

  long long at(long i) const { return z[static_cast<std::size_t>(i - win.lo)]; }
  long long& at(long i) { return z[static_cast<std::size_t>(i - win.lo)]; }
};

Occupancies init_bernoulli(double rho, Window win, std::uint64_t seed);

// Independent occupation with site-i mean rho0(i/n).  A constant profile
// reproduces init_bernoulli bit for bit (same per-site keying).
Occupancies init_from_profile(const hydro::MacroProfile& profile, double n, Window win,
                              std::uint64_t seed);

// (1/n) * sum of eta_i over i in (floor(na), floor(nb)]; range must sit
// inside the window.
double measure_density(const Occupancies& occ, double a, double b, double n);

// z on [occ.lo - 1, occ.hi], anchored so z_0 = 0 when site 0 is in range.
HeightConfig heights_from_occ(const Occupancies& occ);

// Inverse up to the anchor; increments outside {0,1} are invalid input.
Occupancies occ_from_heights(const HeightConfig& h);

// ---------------------------------------------------------------------------
// Clocks.
// ---------------------------------------------------------------------------

// Per-bond Poisson epoch streams, rate 1 except where overridden (the slow
// bond(s)).  Epoch m of bond b is a pure function of (seed, b, m), so
// processes sharing a BondClocks value share noise exactly, and the shifted
// indexing the auxiliary processes need comes free.
struct BondClocks {
  std::uint64_t seed = 0;
  std::map<long, double> overrides;

  static BondClocks slow_bond(std::uint64_t seed, double r);

  double rate(long bond) const {
    auto it = overrides.find(bond);
    return it == overrides.end() ? 1.0 : it->second;
  }
  double gap(long bond, std::uint64_t k) const {
    return rng::exponential(seed, rng::Stream::clock, 0, rng::zigzag(bond), k) / rate(bond);
  }
};

// Merged event iteration over a bond range; stream positions persist across
// calls so runs can be continued (burn-in, sampling).
class ClockDriver {
 public:
  ClockDriver(BondClocks clocks, long bond_lo, long bond_hi);

  double now() const { return now_; }

  // attempt(bond, time) for every epoch in (now, t_end]; ties break by bond.
  template <typename F>
  void drive(double t_end, F&& attempt) {
    while (!pq_.empty() && pq_.top().first <= t_end) {
      auto [tau, b] = pq_.top();
      pq_.pop();
      attempt(b, tau);
      std::uint64_t& c = ctr_[static_cast<std::size_t>(b - lo_)];
      pq_.emplace(tau + clocks_.gap(b, ++c), b);
    }
    now_ = t_end;
  }

 private:
  BondClocks clocks_;
  long lo_ = 0;
  double now_ = 0.0;
  std::vector<std::uint64_t> ctr_;
  std::priority_queue<std::pair<double, long>, std::vector<std::pair<double, long>>,
                      std::greater<>>
      pq_;
};

// ---------------------------------------------------------------------------
// Exclusion dynamics (closed line window).
// ---------------------------------------------------------------------------

class LineEngine {
 public:
  LineEngine(HeightConfig z0, const BondClocks& clocks);

  void run_until(double t);
  double now() const { return driver_.now(); }

  const HeightConfig& heights() const { return z_; }
  const HeightConfig& initial_heights() const { return z0_; }
  Occupancies occupancies() const;

  // Active bonds: [win.lo + 1, win.hi - 1] in height coordinates.
  Window bond_window() const { return {z_.win.lo + 1, z_.win.hi - 1}; }
  long long current_at(long bond) const;

  void enable_jump_log() { log_enabled_ = true; }
  const std::vector<std::pair<double, long>>& jump_log() const { return log_; }

 private:
  HeightConfig z_;
  HeightConfig z0_;
  std::vector<long long> jumps_;
  ClockDriver driver_;
  bool log_enabled_ = false;
  std::vector<std::pair<double, long>> log_;
};

struct EvolveResult {
  Occupancies occ;
  HeightConfig heights;
  Window bond_window;
  std::vector<long long> current;  // J per active bond
  double time = 0.0;
};

EvolveResult evolve(const Occupancies& occ, const BondClocks& clocks, double horizon);
EvolveResult evolve(const HeightConfig& z0, const BondClocks& clocks, double horizon);

// Periodic variant used for long-run stationary averages (a closed window
// drains from the edges long before such horizons).
class RingEngine {
 public:
  RingEngine(Occupancies occ, const BondClocks& clocks);

  void run_until(double t);
  double now() const { return driver_.now(); }
  const Occupancies& occupancies() const { return occ_; }
  long long jumps_at(long bond) const;

 private:
  Occupancies occ_;
  std::vector<long long> jumps_;
  ClockDriver driver_;
};

// ---------------------------------------------------------------------------
// Auxiliary wedge-initial processes.
// ---------------------------------------------------------------------------

// Sites that boundary effects could reach in time h, with a wide safety
// factor (influence spreads along realized epoch chains at unit speed).
long light_cone_margin(double horizon);

struct XiTrajectory {
  long k = 0;
  Window site_win;
  Window obs_win;
  double horizon = 0.0;
  std::vector<std::vector<double>> jump_times;  // per site in site_win

  static long long initial(long i) { return i >= 0 ? 0 : -i; }
  long long value_at(long i, double t) const;
  // inf{ t : xi_i(t) >= level }; 0 at or below the initial value,
  // +infinity if not reached within the horizon.
  double level_time(long i, long long level) const;
};

// Growth process started from the wedge: xi_i(0) = max(0,-i), site i jumps by
// one at epochs of bond i+k provided xi_i < xi_{i-1} and xi_i <= xi_{i+1}.
// Neighbors outside the window are frozen at their initial values, so the
// window must cover the observation range plus the light-cone margin.
XiTrajectory simulate_xi(long k, const BondClocks& clocks, double horizon, Window site_win,
                         Window obs_win);

// ---------------------------------------------------------------------------
// Variational coupling.
// ---------------------------------------------------------------------------

struct CouplingReport {
  bool pass = false;
  long sites_checked = 0;
  long comparisons = 0;
  long long max_abs_diff = 0;
  double first_fail_time = -1.0;
  long first_fail_site = 0;
  long k_lo = 0, k_hi = 0;  // candidate range used
  Window obs;
};

// Simulates z and, with the same clocks, the auxiliary processes w^k (via
// xi^k), and asserts z_i(t) = max_k { z_k(0) - xi^k_{i-k}(t) } exactly at
// every sample time and observed site.
//
// Candidate range [obs_lo - M, obs_hi + N + M], M the light-cone margin, N
// the particle count.  Left of the leftmost particle every candidate starts
// at the global height floor and only decreases, while z_i(t) never falls
// below the floor (at most z_i(0) - min z particles ever cross bond i); the
// candidates kept at obs_lo - M stay frozen at the floor over the horizon
// and realize it when a site drains.  On the right, w^k at the compared
// site starts at z_R - (k - i), which k > obs_hi + N + M pushes below
// anything z_i(t) can reach within the realized epoch counts.
CouplingReport coupling_check(const HeightConfig& z0, const BondClocks& clocks, double horizon,
                              const std::vector<double>& sample_times);

// ---------------------------------------------------------------------------
// Long-run pair correlations.
// ---------------------------------------------------------------------------

struct PairCorrelation {
  double rho = 0.0;
  double r = 1.0;
  long window_sites = 0;
  double burn_in = 0.0;
  double horizon = 0.0;
  bool precondition_ok = true;  // rho outside the disturbed band (rho*, 1-rho*)
  std::vector<long> bonds;
  std::vector<double> estimate;  // time-averaged P{eta_i = 1, eta_{i+1} = 0}
};

// Estimates P{eta_i=1, eta_{i+1}=0} under the long-run time average from a
// Bernoulli(rho) start via J_i / (rate_i * horizon) after burn-in, on a ring
// of window_sites sites with the slow bond at 0.  rho inside (rho*,1-rho*)
// flags the precondition (result still computed).
PairCorrelation stationary_pair_correlation(double rho, double r, long window_sites,
                                            double burn_in, double horizon, std::uint64_t seed,
                                            const std::vector<long>& bonds, double rho_star);

// ---------------------------------------------------------------------------
// Binary snapshots: magic "SBSNAP01", then little-endian int64 lo, int64 hi,
// double time, uint64 seed, then bit-packed occupancies (LSB-first from lo).
// ---------------------------------------------------------------------------

struct Snapshot {
  Occupancies occ;
  double time = 0.0;
  std::uint64_t seed = 0;
};

void write_snapshot(std::ostream& out, const Occupancies& occ, double time, std::uint64_t seed);
Snapshot read_snapshot(std::istream& in);

}  // namespace sb::tasep
