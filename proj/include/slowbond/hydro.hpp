#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

// Macroscopic solver for the slow-bond exclusion process: the flux f0 and its
// conjugate g0, the homogeneous shape gamma0, closed-form control costs with
// a rate defect at the origin, the level-curve route through the wedge shape
// Gamma^q, and the Hopf-Lax value function over piecewise-linear initial
// profiles.
namespace sb::hydro {

// ---------------------------------------------------------------------------
// Rate data at the defect.
// ---------------------------------------------------------------------------

struct MacroRate {
  double lambda0 = 1.0;   // macroscopic rate at the origin, in (0,1]
  double B = 0.0;         // sqrt(1 - lambda0)
  double rho_star = 0.5;  // 1/2 - (1/2) sqrt(1 - lambda0)

  static MacroRate from_lambda0(double lambda0);
  static MacroRate from_kappa(double kappa, double tol = 0.5);
  double kappa() const { return 4.0 / lambda0; }
  bool homogeneous() const { return B == 0.0; }
};

// ---------------------------------------------------------------------------
// Elementary shapes.
// ---------------------------------------------------------------------------

// Flux rho(1-rho); domain error outside [0,1].
double f0(double rho);

// Convex conjugate of f0: -x below -1, (1-x)^2/4 on [-1,1], 0 above 1.
double g0(double x);

// Homogeneous wedge shape (sqrt(x+y)+sqrt(y))^2 on V = {y >= 0, x >= -y}.
double gamma0(double x, double y);

// ---------------------------------------------------------------------------
// Control cost with a defect at the origin.
// ---------------------------------------------------------------------------

// Region of the (x,q) plane at a given t; regions d and e are the ones where
// pausing at the origin beats the straight run.
enum class CostCase { a, b, c, d, e };

CostCase classify_cost_case(double x, double t, double q, const MacroRate& rate);

// Minimal running cost over paths w(0)=q, w(t)=x:
//   cases a-c: t*g0((x-q)/t); cases d-e: (B/2)(|x|+|q|) - (x-q)/2 + t*lambda0/4.
double cost_integral(double x, double t, double q, const MacroRate& rate);

struct PathDescription {
  enum class Kind { straight, three_segment };
  Kind kind = Kind::straight;
  double q = 0.0;          // w(0)
  double x = 0.0;          // w(t)
  double t = 0.0;
  double s1 = 0.0;         // segment switch times (three_segment only)
  double s2 = 0.0;
  double value = 0.0;      // cost integral along the path
};

// Minimizing path for cost_integral; its segment costs sum to the value.
PathDescription optimal_path(double x, double t, double q, const MacroRate& rate);

// ---------------------------------------------------------------------------
// Wedge shape with a slow column at x = q.
// ---------------------------------------------------------------------------

// Gamma^q(x,y): max of the straight value gamma0(x,y) and the best
// three-segment route that pauses on the column {x1 = q}, where a vertical
// run of height d on the column is worth kappa*d.  The (b1,b2) search uses a
// coarse feasibility grid plus nested golden-section refinement.
double macro_passage(double q, double x, double y, const MacroRate& rate);

// Level curve g^q(x,t) = inf{ y : (x,y) in V, Gamma^q(x,y) >= t }, by
// monotone bisection in y (absolute tolerance 1e-6).
double interface_level(double q, double x, double t, const MacroRate& rate);

// ---------------------------------------------------------------------------
// Initial profiles: piecewise-constant densities / piecewise-linear v0.
// ---------------------------------------------------------------------------

class MacroProfile {
 public:
  // rho = dens[0] left of xs[0], dens[k] on [xs[k-1], xs[k]), dens[m] beyond.
  // Densities must lie in [0,1]; v0 is anchored so v0(0) = 0.
  MacroProfile(std::vector<double> xs, std::vector<double> dens);

  static MacroProfile constant(double rho);
  // Segments give the density to the right of each breakpoint.
  static MacroProfile from_segments(double left_density,
                                    const std::vector<std::pair<double, double>>& segments);
  // Piecewise-linear v0 through sampled values; slopes clamped into [0,1].
  static MacroProfile from_values(const std::vector<double>& xs, const std::vector<double>& vs,
                                  double left_density, double right_density);

  double density_at(double x) const;
  double v0(double x) const;
  const std::vector<double>& breakpoints() const { return xs_; }
  const std::vector<double>& densities() const { return dens_; }
  double min_density() const;
  double max_density() const;

 private:
  std::vector<double> xs_;
  std::vector<double> dens_;
  std::vector<double> v_at_;  // v0 at each breakpoint
};

// ---------------------------------------------------------------------------
// Value function and density.
// ---------------------------------------------------------------------------

struct HydroSolution {
  std::vector<double> x;
  double t = 0.0;
  double lambda0 = 1.0;
  std::vector<double> v;
  std::vector<double> rho;       // finite differences of v
  std::vector<double> argmax_q;  // maximizer of the Hopf-Lax supremum per x
  bool density_warning = false;  // some rho left [0,1] by more than 1e-6
};

// v(x,t) = sup_q { v0(q) - cost_integral(x,t,q) }.  The supremum is exact on
// the candidate set (profile breakpoints, cost-case boundaries in q, interior
// stationary points per linear piece, the origin), with a guarded local
// refinement pass at tolerance 1e-8.
//
// The search window [min(x-t,-Bt)-1, max(x+t,Bt)+1] suffices: q <= x-t lands
// in the straight branch with (x-q)/t >= 1, where the cost is 0 and the
// objective v0(q) is nondecreasing in q; q >= x+t lands in the straight
// branch with (x-q)/t <= -1, where the cost is q-x and the objective slope
// is density - 1 <= 0.  Both sides are monotone toward the window, and the
// pausing regions sit inside it (their q-extent is within Bt <= t of x).
double value_at(const MacroProfile& profile, double t, const MacroRate& rate, double x,
                double* argmax_q = nullptr);

HydroSolution value_function(const MacroProfile& profile, double t, const MacroRate& rate,
                             const std::vector<double>& x_grid);

// Centered finite differences (one-sided at the ends); values outside [0,1]
// by more than 1e-6 set the warning flag, others are clamped.
std::vector<double> density(const std::vector<double>& x, const std::vector<double>& v,
                            bool* warning = nullptr);

// Closed-form v(x,t) for a constant initial density.
double flat_profile_value(double rho, const MacroRate& rate, double x, double t);

// ---------------------------------------------------------------------------
// Invariance of profiles valued in [rho*, 1-rho*].
// ---------------------------------------------------------------------------

struct ProfileJump {
  double x = 0.0;
  double from = 0.0;
  double to = 0.0;
  bool upward = false;      // rho* -> 1-rho* (admissible anywhere)
  bool admissible = false;  // downward jumps only at the origin
};

struct InvarianceReport {
  bool invariant = false;       // numeric check v(x,t) = v0(x) - t*lambda0/4
  double max_deviation = 0.0;
  double first_fail_t = -1.0;
  double fail_x = 0.0;
  double tolerance = 1e-6;
  std::vector<ProfileJump> jumps;
  bool jumps_admissible = true;  // classification agrees with the numeric check
};

// Checks v(x,t) = v0(x) - t*lambda0/4 on a mesh for each t, and classifies
// the profile's jumps.  Precondition: densities within [rho*, 1-rho*].
InvarianceReport invariance_check(const MacroProfile& profile, const MacroRate& rate,
                                  const std::vector<double>& t_list, double mesh_step = 0.01,
                                  double tolerance = 1e-6);

}  // namespace sb::hydro
