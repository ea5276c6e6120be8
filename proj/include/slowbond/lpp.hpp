#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "slowbond/rng.hpp"

// Last-passage percolation on the quadrant (diagonal defect of strength 1/r)
// and on the wedge lattice L = {(i,j): j >= 1, i >= -j+1} (columnar defect),
// plus Monte Carlo estimation of the corner-speed constant kappa(r) and its
// rigorous bounds.
namespace sb::lpp {

// ---------------------------------------------------------------------------
// Grids.  Coordinates at the API follow the mathematical convention:
// quadrant sites are 1-based from (1,1), wedge sites live in L with paths
// started at (0,1).  Storage is 0-based internally.
// ---------------------------------------------------------------------------

struct QuadrantGrid {
  int n = 0;
  double r = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  std::vector<double> samples;  // row-major, entry (i,j) at (i-1)*n + (j-1)

  double sample(int i, int j) const { return samples[static_cast<std::size_t>(i - 1) * n + (j - 1)]; }
  double weight(int i, int j) const { return i == j ? 1.0 / r : 1.0; }
  double effective(int i, int j) const { return weight(i, j) * sample(i, j); }
};

// i.i.d. mean-1 exponentials, reproducible from (seed, replica).
QuadrantGrid sample_quadrant(int n, double r, std::uint64_t seed, std::uint32_t replica = 0);

// Fixed-sample grid for tests and oracles; samples row-major, all > 0.
QuadrantGrid quadrant_with_samples(int n, double r, std::vector<double> samples);

struct WedgeExtent {
  long i_min = 0;  // clamped per row to the lattice edge i >= -j+1
  long i_max = 0;
  long j_max = 0;
};

// Extent that covers every site a path from (0,1) to (ti,tj) can visit
// (i+j never decreases along admissible steps, so i <= ti+tj-1).
WedgeExtent wedge_extent_for_target(long ti, long tj);

struct WedgeGrid {
  WedgeExtent extent;
  long m = 0;  // defect column
  double r = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t replica = 0;
  bool lazy = false;                            // seeded grids generate on demand
  std::vector<std::vector<double>> rows;        // rows[j-1][i - row_lo(j)]

  long row_lo(long j) const { return std::max(extent.i_min, -j + 1); }
  bool in_lattice(long i, long j) const { return j >= 1 && i >= -j + 1; }
  bool contains(long i, long j) const {
    return j >= 1 && j <= extent.j_max && i >= row_lo(j) && i <= extent.i_max;
  }
  double sample(long i, long j) const;
  double weight(long i) const { return i == m ? 1.0 / r : 1.0; }
  double effective(long i, long j) const { return weight(i) * sample(i, j); }
};

WedgeGrid sample_wedge(const WedgeExtent& extent, long m, double r, std::uint64_t seed,
                       std::uint32_t replica = 0);

// rows[j-1] spans i = row_lo(j) .. i_max; all entries > 0.
WedgeGrid wedge_with_samples(const WedgeExtent& extent, long m, double r,
                             std::vector<std::vector<double>> rows);

// ---------------------------------------------------------------------------
// Passage tables.  Values only; no maximizing path is extracted, so ties in
// the max recursions need no tie-breaking rule.
// ---------------------------------------------------------------------------

enum class Geometry { quadrant, wedge };

struct PassageTable {
  Geometry geometry = Geometry::quadrant;
  int n = 0;                                // quadrant side
  WedgeExtent extent;                       // wedge extent
  std::vector<double> quad_values;          // row-major, as QuadrantGrid
  std::vector<std::vector<double>> wedge_values;

  // Boundary sites report 0.  Wedge values are exact last-passage times for
  // sites with i + j <= i_max + 1 (wedge_extent_for_target guarantees this
  // for the requested target).
  double at(long i, long j) const;
};

// T(i,j) = max(T(i-1,j), T(i,j-1)) + w*Y, out-of-range neighbors 0.
PassageTable passage_time_quadrant(const QuadrantGrid& grid);

// T(i,j) = max(T(i-1,j), T(i,j-1), T(i+1,j-1)) + w*tau, boundary 0; computed
// row by row, left to right (the same-row dependency points left).
PassageTable passage_time_wedge(const WedgeGrid& grid);

// Exhaustive-path oracles.  Refuse when the admissible-path count from the
// origin to the target exceeds path_cap.
double brute_force_passage(const QuadrantGrid& grid, int ti, int tj,
                           std::uint64_t path_cap = 1000000);
double brute_force_passage(const WedgeGrid& grid, long ti, long tj,
                           std::uint64_t path_cap = 1000000);

// Streaming T(n,n)/1 with two-row memory; samples generated on the fly with
// the same keying as sample_quadrant, so replica k here reproduces
// passage_time_quadrant(sample_quadrant(n, r, seed, k)) at (n,n) exactly.
double corner_passage_time(int n, double r, std::uint64_t seed, std::uint32_t replica = 0);

// n^{-1} T(floor(nx), floor(ny)) on the homogeneous grid (r = 1).
double shape_probe(double x, double y, int n, std::uint64_t seed, std::uint32_t replica = 0);

// ---------------------------------------------------------------------------
// kappa(r) estimation and bounds.
// ---------------------------------------------------------------------------

struct KappaEstimate {
  double r = 0.0;
  int n = 0;
  int replicas = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> per_replica;  // T(n,n)/n, replica k keyed by (seed, k)
};

// Monte Carlo estimate of kappa(r) = lim T(n,n)/n.  Deterministic given
// (seed, replicas, n, r); replicas run in parallel (threads = 0 picks the
// hardware count).
KappaEstimate estimate_kappa(double r, int n, int replicas, std::uint64_t seed,
                             int threads = 0);

struct KappaBounds {
  double r = 0.0;
  double lower = 0.0;  // >= 4 always
  double upper = 0.0;  // 3 + 1/r
};

// Greedy two-step path construction: 3/2 + (r^2 + 2(1+r)) / (2r(1+r)).
double kappa_lower_path_bound(double r);

// Stationary-current bound 1/(r(1-r)), valid for r <= 1/2.
double kappa_lower_current_bound(double r);

KappaBounds kappa_bounds(double r);

// lambda(0) = 4/kappa.  Estimates of kappa(1) sit slightly below 4 at finite
// n, so inputs in [4 - tol, 4) clamp to exactly 4 (default tol 0.5 covers the
// desk-scale downward bias); inputs below 4 - tol are a domain error.
double lambda0_from_kappa(double kappa, double tol = 0.5);

// One shared sample set; returns (wedge passage time to (0,n) with the
// (0,1)-step removed and the defect column at 0, quadrant T(n,n) on the
// weights transported through (i,j) -> (i+j,j)).  The two maximizations are
// images of each other cell by cell, so the values are equal bit for bit.
std::pair<double, double> wedge_quadrant_equivalence(int n, double r, std::uint64_t seed,
                                                     std::uint32_t replica = 0);

}  // namespace sb::lpp
