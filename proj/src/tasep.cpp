#include "slowbond/tasep.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sb::tasep {

namespace {

double site_uniform(std::uint64_t seed, long site) {
  return rng::uniform(seed, rng::Stream::occupancy, 0, rng::zigzag(site), 0);
}

}  // namespace

long Occupancies::particle_count() const {
  long n = 0;
  for (auto b : bits) n += b;
  return n;
}

Occupancies init_bernoulli(double rho, Window win, std::uint64_t seed) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("density must lie in [0,1]");
  if (win.hi < win.lo) throw std::invalid_argument("empty window");
  Occupancies occ;
  occ.win = win;
  occ.bits.resize(static_cast<std::size_t>(win.size()));
  for (long i = win.lo; i <= win.hi; ++i)
    occ.bits[static_cast<std::size_t>(i - win.lo)] = site_uniform(seed, i) < rho ? 1 : 0;
  return occ;
}

Occupancies init_from_profile(const hydro::MacroProfile& profile, double n, Window win,
                              std::uint64_t seed) {
  if (!(n > 0.0)) throw std::invalid_argument("scale must be positive");
  if (win.hi < win.lo) throw std::invalid_argument("empty window");
  Occupancies occ;
  occ.win = win;
  occ.bits.resize(static_cast<std::size_t>(win.size()));
  for (long i = win.lo; i <= win.hi; ++i) {
    double p = profile.density_at(static_cast<double>(i) / n);
    occ.bits[static_cast<std::size_t>(i - win.lo)] = site_uniform(seed, i) < p ? 1 : 0;
  }
  return occ;
}

double measure_density(const Occupancies& occ, double a, double b, double n) {
  long lo = static_cast<long>(std::floor(n * a));
  long hi = static_cast<long>(std::floor(n * b));
  if (lo + 1 < occ.win.lo || hi > occ.win.hi)
    throw std::invalid_argument("measurement range outside the window");
  double sum = 0.0;
  for (long i = lo + 1; i <= hi; ++i) sum += occ.at(i);
  return sum / n;
}

HeightConfig heights_from_occ(const Occupancies& occ) {
  HeightConfig h;
  h.win = {occ.win.lo - 1, occ.win.hi};
  h.z.resize(static_cast<std::size_t>(h.win.size()));
  long long acc = 0;
  h.z[0] = 0;
  for (long i = occ.win.lo; i <= occ.win.hi; ++i) {
    acc += occ.at(i);
    h.z[static_cast<std::size_t>(i - h.win.lo)] = acc;
  }
  if (h.win.contains(0)) {
    long long shift = h.at(0);
    for (auto& v : h.z) v -= shift;
  }
  return h;
}

Occupancies occ_from_heights(const HeightConfig& h) {
  if (h.win.size() < 2) throw std::invalid_argument("height window too small");
  Occupancies occ;
  occ.win = {h.win.lo + 1, h.win.hi};
  occ.bits.resize(static_cast<std::size_t>(occ.win.size()));
  for (long i = occ.win.lo; i <= occ.win.hi; ++i) {
    long long d = h.at(i) - h.at(i - 1);
    if (d != 0 && d != 1) throw std::invalid_argument("height increments must lie in {0,1}");
    occ.bits[static_cast<std::size_t>(i - occ.win.lo)] = static_cast<std::uint8_t>(d);
  }
  return occ;
}

BondClocks BondClocks::slow_bond(std::uint64_t seed, double r) {
  if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("slow rate must lie in (0,1]");
  BondClocks c;
  c.seed = seed;
  c.overrides[0] = r;
  return c;
}

ClockDriver::ClockDriver(BondClocks clocks, long bond_lo, long bond_hi)
    : clocks_(std::move(clocks)), lo_(bond_lo) {
  if (bond_hi < bond_lo) throw std::invalid_argument("empty bond range");
  ctr_.assign(static_cast<std::size_t>(bond_hi - bond_lo + 1), 0);
  for (long b = bond_lo; b <= bond_hi; ++b) pq_.emplace(clocks_.gap(b, 0), b);
}

// ---------------------------------------------------------------------------
// Line engine.
// ---------------------------------------------------------------------------

LineEngine::LineEngine(HeightConfig z0, const BondClocks& clocks)
    : z_(std::move(z0)),
      z0_(z_),
      jumps_(static_cast<std::size_t>(std::max<long>(0, z_.win.size() - 2)), 0),
      driver_(clocks, z_.win.lo + 1, z_.win.hi - 1) {
  if (z_.win.size() < 3) throw std::invalid_argument("height window too small to evolve");
  for (long i = z_.win.lo + 1; i <= z_.win.hi; ++i) {
    long long d = z_.at(i) - z_.at(i - 1);
    if (d != 0 && d != 1) throw std::invalid_argument("height increments must lie in {0,1}");
  }
}

void LineEngine::run_until(double t) {
  if (t < driver_.now()) throw std::invalid_argument("cannot run backwards");
  driver_.drive(t, [this](long b, double tau) {
    // particle on b, hole on b+1  <=>  the decrement keeps increments in {0,1}
    if (z_.at(b) - z_.at(b - 1) == 1 && z_.at(b + 1) - z_.at(b) == 0) {
      --z_.at(b);
      ++jumps_[static_cast<std::size_t>(b - (z_.win.lo + 1))];
      if (log_enabled_) log_.emplace_back(tau, b);
    }
  });
}

Occupancies LineEngine::occupancies() const { return occ_from_heights(z_); }

long long LineEngine::current_at(long bond) const {
  if (bond < z_.win.lo + 1 || bond > z_.win.hi - 1)
    throw std::invalid_argument("bond outside the active range");
  return jumps_[static_cast<std::size_t>(bond - (z_.win.lo + 1))];
}

EvolveResult evolve(const HeightConfig& z0, const BondClocks& clocks, double horizon) {
  if (horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  LineEngine engine(z0, clocks);
  engine.run_until(horizon);
  EvolveResult res;
  res.heights = engine.heights();
  res.occ = engine.occupancies();
  res.bond_window = engine.bond_window();
  res.current.reserve(static_cast<std::size_t>(res.bond_window.size()));
  for (long b = res.bond_window.lo; b <= res.bond_window.hi; ++b)
    res.current.push_back(engine.current_at(b));
  res.time = horizon;
  return res;
}

EvolveResult evolve(const Occupancies& occ, const BondClocks& clocks, double horizon) {
  return evolve(heights_from_occ(occ), clocks, horizon);
}

// ---------------------------------------------------------------------------
// Ring engine.
// ---------------------------------------------------------------------------

RingEngine::RingEngine(Occupancies occ, const BondClocks& clocks)
    : occ_(std::move(occ)),
      jumps_(static_cast<std::size_t>(occ_.win.size()), 0),
      driver_(clocks, occ_.win.lo, occ_.win.hi) {
  if (occ_.win.size() < 2) throw std::invalid_argument("ring needs at least two sites");
}

void RingEngine::run_until(double t) {
  if (t < driver_.now()) throw std::invalid_argument("cannot run backwards");
  const long lo = occ_.win.lo, hi = occ_.win.hi;
  driver_.drive(t, [&, lo, hi](long b, double) {
    long nb = b == hi ? lo : b + 1;
    auto& from = occ_.bits[static_cast<std::size_t>(b - lo)];
    auto& to = occ_.bits[static_cast<std::size_t>(nb - lo)];
    if (from == 1 && to == 0) {
      from = 0;
      to = 1;
      ++jumps_[static_cast<std::size_t>(b - lo)];
    }
  });
}

long long RingEngine::jumps_at(long bond) const {
  if (!occ_.win.contains(bond)) throw std::invalid_argument("bond outside the ring");
  return jumps_[static_cast<std::size_t>(bond - occ_.win.lo)];
}

// ---------------------------------------------------------------------------
// Auxiliary processes.
// ---------------------------------------------------------------------------

long light_cone_margin(double horizon) {
  return static_cast<long>(std::ceil(3.0 * horizon)) + 40;
}

long long XiTrajectory::value_at(long i, double t) const {
  const auto& times = jump_times[static_cast<std::size_t>(i - site_win.lo)];
  auto it = std::upper_bound(times.begin(), times.end(), t);
  return initial(i) + (it - times.begin());
}

double XiTrajectory::level_time(long i, long long level) const {
  if (level <= initial(i)) return 0.0;
  const auto& times = jump_times[static_cast<std::size_t>(i - site_win.lo)];
  std::size_t idx = static_cast<std::size_t>(level - initial(i));
  if (idx > times.size()) return std::numeric_limits<double>::infinity();
  return times[idx - 1];
}

XiTrajectory simulate_xi(long k, const BondClocks& clocks, double horizon, Window site_win,
                         Window obs_win) {
  long margin = light_cone_margin(horizon);
  if (site_win.lo > obs_win.lo - margin || site_win.hi < obs_win.hi + margin)
    throw std::runtime_error("window too small for the light-cone margin");

  XiTrajectory traj;
  traj.k = k;
  traj.site_win = site_win;
  traj.obs_win = obs_win;
  traj.horizon = horizon;
  traj.jump_times.resize(static_cast<std::size_t>(site_win.size()));

  std::vector<long long> xi(static_cast<std::size_t>(site_win.size()));
  for (long i = site_win.lo; i <= site_win.hi; ++i)
    xi[static_cast<std::size_t>(i - site_win.lo)] = XiTrajectory::initial(i);
  // Neighbors beyond the window stay frozen at their initial values; the
  // margin keeps that deviation from reaching the observed sites.
  const long long left_wall = XiTrajectory::initial(site_win.lo - 1);
  const long long right_wall = XiTrajectory::initial(site_win.hi + 1);

  ClockDriver driver(clocks, site_win.lo + k, site_win.hi + k);
  driver.drive(horizon, [&](long b, double tau) {
    long i = b - k;
    std::size_t idx = static_cast<std::size_t>(i - site_win.lo);
    long long left = i == site_win.lo ? left_wall : xi[idx - 1];
    long long right = i == site_win.hi ? right_wall : xi[idx + 1];
    if (xi[idx] < left && xi[idx] <= right) {
      ++xi[idx];
      traj.jump_times[idx].push_back(tau);
    }
  });
  return traj;
}

// ---------------------------------------------------------------------------
// Variational coupling.
// ---------------------------------------------------------------------------

CouplingReport coupling_check(const HeightConfig& z0, const BondClocks& clocks, double horizon,
                              const std::vector<double>& sample_times) {
  // Particle support.
  long s_lo = 0, s_hi = 0, particles = 0;
  for (long i = z0.win.lo + 1; i <= z0.win.hi; ++i) {
    if (z0.at(i) - z0.at(i - 1) == 1) {
      if (particles == 0) s_lo = i;
      s_hi = i;
      ++particles;
    }
  }
  if (particles == 0) {
    s_lo = 0;
    s_hi = 0;
  }

  const long reach = static_cast<long>(std::ceil(horizon)) + 5;
  const long margin = light_cone_margin(horizon);
  Window obs{s_lo - reach, s_hi + reach};
  if (z0.win.lo > obs.lo - margin || z0.win.hi < obs.hi + margin)
    throw std::runtime_error("height window too small for the light-cone margin");

  std::vector<double> times(sample_times);
  std::sort(times.begin(), times.end());

  // z snapshots at the sample times.
  LineEngine engine(z0, clocks);
  std::vector<std::vector<long long>> z_snap;
  for (double t : times) {
    engine.run_until(t);
    std::vector<long long> snap(static_cast<std::size_t>(obs.size()));
    for (long i = obs.lo; i <= obs.hi; ++i)
      snap[static_cast<std::size_t>(i - obs.lo)] = engine.heights().at(i);
    z_snap.push_back(std::move(snap));
  }

  // z_k(0) extended flatly beyond the window (constant outside the support).
  auto z_init = [&](long kk) {
    long c = std::clamp(kk, z0.win.lo, z0.win.hi);
    return z0.at(c);
  };

  CouplingReport report;
  report.obs = obs;
  // Left of the support every candidate starts at the height floor; keep the
  // ones far enough left that their growth cannot reach the observed sites,
  // since they stay frozen there and realize the floor when a site drains.
  report.k_lo = obs.lo - margin;
  report.k_hi = obs.hi + particles + margin;
  report.pass = true;
  report.sites_checked = obs.size();

  // Running max over candidates: best[t][i] = max_k { z_k(0) - xi^k_{i-k}(t) }.
  std::vector<std::vector<long long>> best(
      times.size(), std::vector<long long>(static_cast<std::size_t>(obs.size()),
                                           std::numeric_limits<long long>::min()));
  for (long k = report.k_lo; k <= report.k_hi; ++k) {
    Window xi_obs{obs.lo - k, obs.hi - k};
    Window xi_win{xi_obs.lo - margin, xi_obs.hi + margin};
    XiTrajectory traj = simulate_xi(k, clocks, horizon, xi_win, xi_obs);
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      for (long i = obs.lo; i <= obs.hi; ++i) {
        long long cand = z_init(k) - traj.value_at(i - k, times[ti]);
        auto& slot = best[ti][static_cast<std::size_t>(i - obs.lo)];
        slot = std::max(slot, cand);
      }
    }
  }

  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (long i = obs.lo; i <= obs.hi; ++i) {
      ++report.comparisons;
      long long zi = z_snap[ti][static_cast<std::size_t>(i - obs.lo)];
      long long sup = best[ti][static_cast<std::size_t>(i - obs.lo)];
      long long diff = std::llabs(zi - sup);
      if (diff > report.max_abs_diff) report.max_abs_diff = diff;
      if (diff != 0 && report.pass) {
        report.pass = false;
        report.first_fail_time = times[ti];
        report.first_fail_site = i;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Pair correlations on a ring.
// ---------------------------------------------------------------------------

PairCorrelation stationary_pair_correlation(double rho, double r, long window_sites,
                                            double burn_in, double horizon, std::uint64_t seed,
                                            const std::vector<long>& bonds, double rho_star) {
  if (window_sites < 4) throw std::invalid_argument("ring too small");
  if (!(horizon > 0.0) || burn_in < 0.0) throw std::invalid_argument("bad time range");
  Window win{-window_sites / 2, window_sites - window_sites / 2 - 1};
  for (long b : bonds)
    if (!win.contains(b)) throw std::invalid_argument("requested bond outside the ring");

  PairCorrelation pc;
  pc.rho = rho;
  pc.r = r;
  pc.window_sites = window_sites;
  pc.burn_in = burn_in;
  pc.horizon = horizon;
  pc.bonds = bonds;
  pc.precondition_ok = !(rho > rho_star && rho < 1.0 - rho_star);

  BondClocks clocks = BondClocks::slow_bond(seed, r);
  RingEngine engine(init_bernoulli(rho, win, seed), clocks);
  engine.run_until(burn_in);
  std::vector<long long> j0(bonds.size());
  for (std::size_t i = 0; i < bonds.size(); ++i) j0[i] = engine.jumps_at(bonds[i]);
  engine.run_until(burn_in + horizon);
  pc.estimate.resize(bonds.size());
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    double flow = static_cast<double>(engine.jumps_at(bonds[i]) - j0[i]);
    pc.estimate[i] = flow / (clocks.rate(bonds[i]) * horizon);
  }
  return pc;
}

// ---------------------------------------------------------------------------
// Snapshots.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'B', 'S', 'N', 'A', 'P', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated snapshot");
  return v;
}

}  // namespace

void write_snapshot(std::ostream& out, const Occupancies& occ, double time, std::uint64_t seed) {
  out.write(kMagic, sizeof(kMagic));
  put<std::int64_t>(out, occ.win.lo);
  put<std::int64_t>(out, occ.win.hi);
  put<double>(out, time);
  put<std::uint64_t>(out, seed);
  std::vector<std::uint8_t> packed((occ.bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < occ.bits.size(); ++i)
    if (occ.bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
  if (!out) throw std::runtime_error("snapshot write failed");
}

Snapshot read_snapshot(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a snapshot file");
  Snapshot s;
  s.occ.win.lo = static_cast<long>(get<std::int64_t>(in));
  s.occ.win.hi = static_cast<long>(get<std::int64_t>(in));
  if (s.occ.win.hi < s.occ.win.lo) throw std::runtime_error("corrupt snapshot window");
  s.time = get<double>(in);
  s.seed = get<std::uint64_t>(in);
  std::size_t nsites = static_cast<std::size_t>(s.occ.win.size());
  std::vector<std::uint8_t> packed((nsites + 7) / 8);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (!in) throw std::runtime_error("truncated snapshot");
  s.occ.bits.resize(nsites);
  for (std::size_t i = 0; i < nsites; ++i)
    s.occ.bits[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return s;
}

}  // namespace sb::tasep
