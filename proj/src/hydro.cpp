#include "slowbond/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sb::hydro {

namespace {

constexpr double kDomainSlack = 1e-12;

// Golden-section maximization on [a,b]; returns the argmax.  Callers pick
// brackets on which the objective is unimodal (or seed from a coarse grid).
template <typename F>
double golden_argmax(F&& f, double a, double b, int iters = 48) {
  constexpr double phi = 0.6180339887498949;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && b - a > 0.0; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

double sqr(double v) { return v * v; }

// gamma0 with feasibility-boundary rounding forgiven (arguments produced by
// optimizers can undershoot zero by an ulp).
double gamma0_safe(double x, double y) {
  double xy = std::max(0.0, x + y);
  double yy = std::max(0.0, y);
  return sqr(std::sqrt(xy) + std::sqrt(yy));
}

}  // namespace

MacroRate MacroRate::from_lambda0(double lambda0) {
  if (!(lambda0 > 0.0) || lambda0 > 1.0)
    throw std::invalid_argument("lambda0 must lie in (0,1]");
  MacroRate r;
  r.lambda0 = lambda0;
  r.B = std::sqrt(1.0 - lambda0);
  r.rho_star = 0.5 - 0.5 * r.B;
  return r;
}

MacroRate MacroRate::from_kappa(double kappa, double tol) {
  if (kappa < 4.0 - tol) throw std::domain_error("kappa below the 4 floor");
  if (kappa < 4.0) kappa = 4.0;
  return from_lambda0(4.0 / kappa);
}

double f0(double rho) {
  if (rho < -kDomainSlack || rho > 1.0 + kDomainSlack)
    throw std::domain_error("density must lie in [0,1]");
  rho = std::clamp(rho, 0.0, 1.0);
  return rho * (1.0 - rho);
}

double g0(double x) {
  if (x <= -1.0) return -x;
  if (x >= 1.0) return 0.0;
  return 0.25 * sqr(1.0 - x);
}

double gamma0(double x, double y) {
  if (y < -kDomainSlack || x + y < -kDomainSlack)
    throw std::domain_error("(x,y) outside the wedge cone");
  return gamma0_safe(x, y);
}

CostCase classify_cost_case(double x, double t, double q, const MacroRate& rate) {
  if (!(t > 0.0)) throw std::domain_error("time must be positive");
  if (rate.homogeneous()) return CostCase::a;  // d/e regions are empty at B = 0
  const double Bt = rate.B * t;
  if (std::abs(x) >= Bt) return CostCase::a;
  if (x >= 0.0) {
    double edge = sqr(std::sqrt(Bt) - std::sqrt(x));
    return (q <= x - Bt || q >= edge) ? CostCase::b : CostCase::d;
  }
  double edge = -sqr(std::sqrt(Bt) - std::sqrt(-x));
  return (q <= edge || q >= x + Bt) ? CostCase::c : CostCase::e;
}

double cost_integral(double x, double t, double q, const MacroRate& rate) {
  switch (classify_cost_case(x, t, q, rate)) {
    case CostCase::a:
    case CostCase::b:
    case CostCase::c:
      return t * g0((x - q) / t);
    case CostCase::d:
    case CostCase::e:
      return 0.5 * rate.B * (std::abs(x) + std::abs(q)) - 0.5 * (x - q) +
             0.25 * t * rate.lambda0;
  }
  return 0.0;  // unreachable
}

PathDescription optimal_path(double x, double t, double q, const MacroRate& rate) {
  PathDescription p;
  p.q = q;
  p.x = x;
  p.t = t;
  CostCase c = classify_cost_case(x, t, q, rate);
  if (c == CostCase::a || c == CostCase::b || c == CostCase::c) {
    p.kind = PathDescription::Kind::straight;
    p.value = t * g0((x - q) / t);
    return p;
  }
  p.kind = PathDescription::Kind::three_segment;
  p.s1 = std::abs(q) / rate.B;
  p.s2 = t - std::abs(x) / rate.B;
  // Segment costs: approach the origin at speed B, wait at the defect, leave
  // at speed B.  The moving segments spend zero time at the origin, so they
  // are charged at rate 1.
  double cost = 0.25 * rate.lambda0 * (p.s2 - p.s1);
  if (p.s1 > 0.0) cost += p.s1 * g0(-q / p.s1);
  if (p.s2 < t) cost += (t - p.s2) * g0(x / (t - p.s2));
  p.value = cost;
  return p;
}

double macro_passage(double q, double x, double y, const MacroRate& rate) {
  if (y < -kDomainSlack || x + y < -kDomainSlack)
    throw std::domain_error("(x,y) outside the wedge cone");
  y = std::max(y, 0.0);
  const double straight = gamma0_safe(x, y);
  if (rate.homogeneous()) return straight;  // a vertical run is worth exactly gamma0

  // Three-segment candidates: reach the column at height b1, ride it to b2,
  // then run to (x,y).  Feasibility: b1 >= max(0,-q) keeps (q,b1) in the
  // cone, b2 <= min(y, y+x-q) keeps the final increment in the cone.
  const double b1_lo = std::max(0.0, -q);
  const double b2_hi = std::min(y, y + x - q);
  if (b1_lo > b2_hi) return straight;
  const double kappa = rate.kappa();

  auto ride_gain = [&](double b1) { return gamma0_safe(q, b1) - kappa * b1; };
  const double b1_free = golden_argmax(ride_gain, b1_lo, b2_hi);

  auto total = [&](double b2) {
    double b1 = std::min(b2, b1_free);
    b1 = std::max(b1, b1_lo);
    return ride_gain(b1) + kappa * b2 + gamma0_safe(x - q, y - b2);
  };

  // Coarse sweep guards against non-unimodal sections before refining.
  double best_b2 = b1_lo;
  double best = total(best_b2);
  const int coarse = 24;
  for (int k = 1; k <= coarse; ++k) {
    double b2 = b1_lo + (b2_hi - b1_lo) * k / coarse;
    double v = total(b2);
    if (v > best) {
      best = v;
      best_b2 = b2;
    }
  }
  double h = (b2_hi - b1_lo) / coarse;
  double refined = total(golden_argmax(total, std::max(b1_lo, best_b2 - h),
                                       std::min(b2_hi, best_b2 + h)));
  best = std::max(best, refined);
  return std::max(straight, best);
}

double interface_level(double q, double x, double t, const MacroRate& rate) {
  if (!(t > 0.0)) throw std::domain_error("time must be positive");
  double lo = std::max(0.0, -x);
  if (macro_passage(q, x, lo, rate) >= t) return lo;
  double hi = std::max(lo, t);  // Gamma >= gamma0(x,y) >= y, so y = t reaches t
  int guard = 0;
  while (macro_passage(q, x, hi, rate) < t && guard++ < 64) hi = 2.0 * hi + 1.0;
  while (hi - lo > 1e-7) {
    double mid = 0.5 * (lo + hi);
    (macro_passage(q, x, mid, rate) >= t ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Profiles.
// ---------------------------------------------------------------------------

MacroProfile::MacroProfile(std::vector<double> xs, std::vector<double> dens)
    : xs_(std::move(xs)), dens_(std::move(dens)) {
  if (dens_.size() != xs_.size() + 1)
    throw std::invalid_argument("need one density per region (breakpoints + 1)");
  for (std::size_t i = 1; i < xs_.size(); ++i)
    if (!(xs_[i] > xs_[i - 1])) throw std::invalid_argument("breakpoints must increase");
  for (double d : dens_)
    if (d < -kDomainSlack || d > 1.0 + kDomainSlack)
      throw std::invalid_argument("densities must lie in [0,1]");
  for (double& d : dens_) d = std::clamp(d, 0.0, 1.0);

  // v0 at breakpoints, anchored so that v0(0) = 0.
  v_at_.assign(xs_.size(), 0.0);
  for (std::size_t i = 1; i < xs_.size(); ++i)
    v_at_[i] = v_at_[i - 1] + dens_[i] * (xs_[i] - xs_[i - 1]);
  if (!xs_.empty()) {
    double shift = 0.0;
    if (0.0 <= xs_.front())
      shift = v_at_.front() - dens_.front() * (xs_.front() - 0.0);
    else if (0.0 >= xs_.back())
      shift = v_at_.back() + dens_.back() * (0.0 - xs_.back());
    else {
      std::size_t k = 0;
      while (k + 1 < xs_.size() && xs_[k + 1] < 0.0) ++k;
      // 0 lies in [xs_[k], xs_[k+1})
      shift = v_at_[k] + dens_[k + 1] * (0.0 - xs_[k]);
    }
    for (double& v : v_at_) v -= shift;
  }
}

MacroProfile MacroProfile::constant(double rho) { return MacroProfile({}, {rho}); }

MacroProfile MacroProfile::from_segments(double left_density,
                                         const std::vector<std::pair<double, double>>& segments) {
  std::vector<double> xs, dens;
  dens.push_back(left_density);
  for (const auto& [x, d] : segments) {
    xs.push_back(x);
    dens.push_back(d);
  }
  return MacroProfile(std::move(xs), std::move(dens));
}

MacroProfile MacroProfile::from_values(const std::vector<double>& xs,
                                       const std::vector<double>& vs, double left_density,
                                       double right_density) {
  if (xs.size() != vs.size() || xs.size() < 2)
    throw std::invalid_argument("need matching xs/vs with at least two samples");
  std::vector<double> bps(xs);
  std::vector<double> dens;
  dens.reserve(xs.size() + 1);
  dens.push_back(left_density);
  for (std::size_t i = 1; i < xs.size(); ++i)
    dens.push_back(std::clamp((vs[i] - vs[i - 1]) / (xs[i] - xs[i - 1]), 0.0, 1.0));
  dens.push_back(right_density);
  return MacroProfile(std::move(bps), std::move(dens));
}

double MacroProfile::density_at(double x) const {
  std::size_t k = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
  return dens_[k];
}

double MacroProfile::v0(double x) const {
  if (xs_.empty()) return dens_[0] * x;
  if (x < xs_.front()) return v_at_.front() - dens_.front() * (xs_.front() - x);
  if (x >= xs_.back()) return v_at_.back() + dens_.back() * (x - xs_.back());
  std::size_t k = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
  // x in [xs_[k-1], xs_[k])
  return v_at_[k - 1] + dens_[k] * (x - xs_[k - 1]);
}

double MacroProfile::min_density() const { return *std::min_element(dens_.begin(), dens_.end()); }
double MacroProfile::max_density() const { return *std::max_element(dens_.begin(), dens_.end()); }

// ---------------------------------------------------------------------------
// Value function.
// ---------------------------------------------------------------------------

double value_at(const MacroProfile& profile, double t, const MacroRate& rate, double x,
                double* argmax_q) {
  if (!(t > 0.0)) throw std::domain_error("time must be positive");
  const double B = rate.B;
  const double wlo = std::min(x - t, -B * t) - 1.0;
  const double whi = std::max(x + t, B * t) + 1.0;

  std::vector<double> cand;
  cand.reserve(profile.breakpoints().size() + profile.densities().size() + 12);
  auto add = [&](double q) {
    if (std::isfinite(q) && q >= wlo && q <= whi) cand.push_back(q);
  };
  add(wlo);
  add(whi);
  add(0.0);
  add(x);
  add(x - t);
  add(x + t);
  if (!rate.homogeneous()) {
    const double Bt = B * t;
    add(x - Bt);
    add(x + Bt);
    if (x >= 0.0 && x < Bt) add(sqr(std::sqrt(Bt) - std::sqrt(x)));
    if (x <= 0.0 && -x < Bt) add(-sqr(std::sqrt(Bt) - std::sqrt(-x)));
  }
  for (double bp : profile.breakpoints()) add(bp);
  // Interior stationary point of rho*q - t*g0((x-q)/t) for each linear piece.
  for (double d : profile.densities()) add(x - t * (1.0 - 2.0 * d));
  std::sort(cand.begin(), cand.end());

  auto objective = [&](double q) { return profile.v0(q) - cost_integral(x, t, q, rate); };

  std::size_t best_i = 0;
  double best = objective(cand[0]);
  for (std::size_t i = 1; i < cand.size(); ++i) {
    double v = objective(cand[i]);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double best_q = cand[best_i];

  // The candidates carry the exact per-piece maxima; a short refinement pass
  // around the winner guards the bookkeeping at tolerance 1e-8.
  double lo = best_i > 0 ? cand[best_i - 1] : cand[best_i];
  double hi = best_i + 1 < cand.size() ? cand[best_i + 1] : cand[best_i];
  if (hi > lo) {
    double q_ref = golden_argmax(objective, lo, hi, 56);
    double v_ref = objective(q_ref);
    if (v_ref > best) {
      best = v_ref;
      best_q = q_ref;
    }
  }
  if (argmax_q) *argmax_q = best_q;
  return best;
}

HydroSolution value_function(const MacroProfile& profile, double t, const MacroRate& rate,
                             const std::vector<double>& x_grid) {
  if (x_grid.empty()) throw std::invalid_argument("empty evaluation grid");
  if (!std::is_sorted(x_grid.begin(), x_grid.end()))
    throw std::invalid_argument("x grid must be sorted");
  HydroSolution sol;
  sol.x = x_grid;
  sol.t = t;
  sol.lambda0 = rate.lambda0;
  sol.v.resize(x_grid.size());
  sol.argmax_q.resize(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i)
    sol.v[i] = value_at(profile, t, rate, x_grid[i], &sol.argmax_q[i]);
  if (x_grid.size() >= 2) sol.rho = density(sol.x, sol.v, &sol.density_warning);
  return sol;
}

std::vector<double> density(const std::vector<double>& x, const std::vector<double>& v,
                            bool* warning) {
  if (x.size() != v.size() || x.size() < 2)
    throw std::invalid_argument("density needs a mesh of at least two points");
  std::vector<double> rho(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t a = i == 0 ? 0 : i - 1;
    std::size_t b = i + 1 == x.size() ? i : i + 1;
    rho[i] = (v[b] - v[a]) / (x[b] - x[a]);
  }
  bool warn = false;
  for (double& d : rho) {
    if (d < -1e-6 || d > 1.0 + 1e-6)
      warn = true;
    else
      d = std::clamp(d, 0.0, 1.0);
  }
  if (warning) *warning = warn;
  return rho;
}

double flat_profile_value(double rho, const MacroRate& rate, double x, double t) {
  if (rho < -kDomainSlack || rho > 1.0 + kDomainSlack)
    throw std::domain_error("density must lie in [0,1]");
  rho = std::clamp(rho, 0.0, 1.0);
  if (!(t > 0.0)) throw std::domain_error("time must be positive");
  const double rs = rate.rho_star;
  if (rho <= rs || rho >= 1.0 - rs) return rho * x - t * f0(rho);
  if (x >= -t * (rho - rs) && x <= 0.0) return (1.0 - rs) * x - 0.25 * t * rate.lambda0;
  if (x > 0.0 && x <= t * (1.0 - rs - rho)) return rs * x - 0.25 * t * rate.lambda0;
  return rho * x - t * f0(rho);
}

InvarianceReport invariance_check(const MacroProfile& profile, const MacroRate& rate,
                                  const std::vector<double>& t_list, double mesh_step,
                                  double tolerance) {
  const double rs = rate.rho_star;
  for (double d : profile.densities())
    if (d < rs - 1e-9 || d > 1.0 - rs + 1e-9)
      throw std::invalid_argument("profile not within the [rho*, 1-rho*] band");

  InvarianceReport report;
  report.tolerance = tolerance;

  const auto& dens = profile.densities();
  const auto& xs = profile.breakpoints();
  for (std::size_t k = 0; k + 1 < dens.size(); ++k) {
    if (std::abs(dens[k + 1] - dens[k]) < 1e-12) continue;
    ProfileJump j;
    j.x = xs[k];
    j.from = dens[k];
    j.to = dens[k + 1];
    j.upward = dens[k + 1] > dens[k];
    j.admissible = j.upward || std::abs(j.x) < 1e-12;
    report.jumps.push_back(j);
    if (!j.admissible) report.jumps_admissible = false;
  }

  double t_max = t_list.empty() ? 1.0 : *std::max_element(t_list.begin(), t_list.end());
  double lo = xs.empty() ? 0.0 : xs.front();
  double hi = xs.empty() ? 0.0 : xs.back();
  lo = std::min(lo, 0.0) - (t_max + 1.0);
  hi = std::max(hi, 0.0) + (t_max + 1.0);

  report.invariant = true;
  for (double t : t_list) {
    for (double x = lo; x <= hi + 0.5 * mesh_step; x += mesh_step) {
      double expect = profile.v0(x) - 0.25 * t * rate.lambda0;
      double dev = std::abs(value_at(profile, t, rate, x) - expect);
      if (dev > report.max_deviation) {
        report.max_deviation = dev;
        if (dev > tolerance) report.fail_x = x;
      }
      if (dev > tolerance && report.invariant) {
        report.invariant = false;
        report.first_fail_t = t;
      }
    }
  }
  return report;
}

}  // namespace sb::hydro
