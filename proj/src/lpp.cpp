#include "slowbond/lpp.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <thread>

namespace sb::lpp {

namespace {

void check_rate(double r) {
  if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("slow rate must lie in (0,1]");
}

double quad_sample(std::uint64_t seed, std::uint32_t replica, long i, long j) {
  return rng::exponential(seed, rng::Stream::quadrant, replica, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(j));
}

double wedge_sample(std::uint64_t seed, std::uint32_t replica, long i, long j) {
  return rng::exponential(seed, rng::Stream::wedge, replica, rng::zigzag(i),
                          static_cast<std::uint64_t>(j));
}

int pick_threads(int threads, int jobs) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int t = threads > 0 ? threads : hw;
  return std::max(1, std::min(t, jobs));
}

}  // namespace

QuadrantGrid sample_quadrant(int n, double r, std::uint64_t seed, std::uint32_t replica) {
  if (n < 1) throw std::invalid_argument("quadrant size must be >= 1");
  check_rate(r);
  QuadrantGrid g;
  g.n = n;
  g.r = r;
  g.seed = seed;
  g.replica = replica;
  g.samples.resize(static_cast<std::size_t>(n) * n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      g.samples[static_cast<std::size_t>(i - 1) * n + (j - 1)] = quad_sample(seed, replica, i, j);
  return g;
}

QuadrantGrid quadrant_with_samples(int n, double r, std::vector<double> samples) {
  if (n < 1) throw std::invalid_argument("quadrant size must be >= 1");
  check_rate(r);
  if (samples.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("sample table must be n*n");
  for (double v : samples)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("samples must be strictly positive and finite");
  QuadrantGrid g;
  g.n = n;
  g.r = r;
  g.samples = std::move(samples);
  return g;
}

WedgeExtent wedge_extent_for_target(long ti, long tj) {
  if (tj < 1 || ti < -tj + 1) throw std::invalid_argument("target outside the wedge lattice");
  return WedgeExtent{-tj + 1, ti + tj - 1, tj};
}

double WedgeGrid::sample(long i, long j) const {
  if (lazy) return wedge_sample(seed, replica, i, j);
  return rows[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - row_lo(j))];
}

WedgeGrid sample_wedge(const WedgeExtent& extent, long m, double r, std::uint64_t seed,
                       std::uint32_t replica) {
  check_rate(r);
  if (extent.j_max < 1 || extent.i_max < extent.i_min)
    throw std::invalid_argument("empty wedge extent");
  WedgeGrid g;
  g.extent = extent;
  g.m = m;
  g.r = r;
  g.seed = seed;
  g.replica = replica;
  g.lazy = true;
  return g;
}

WedgeGrid wedge_with_samples(const WedgeExtent& extent, long m, double r,
                             std::vector<std::vector<double>> rows) {
  check_rate(r);
  if (extent.j_max < 1 || extent.i_max < extent.i_min)
    throw std::invalid_argument("empty wedge extent");
  if (rows.size() != static_cast<std::size_t>(extent.j_max))
    throw std::invalid_argument("one sample row per lattice row required");
  WedgeGrid g;
  g.extent = extent;
  g.m = m;
  g.r = r;
  for (long j = 1; j <= extent.j_max; ++j) {
    long lo = std::max(extent.i_min, -j + 1);
    const auto& row = rows[static_cast<std::size_t>(j - 1)];
    if (row.size() != static_cast<std::size_t>(extent.i_max - lo + 1))
      throw std::invalid_argument("sample row length mismatch");
    for (double v : row)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("samples must be strictly positive and finite");
  }
  g.rows = std::move(rows);
  return g;
}

double PassageTable::at(long i, long j) const {
  if (geometry == Geometry::quadrant) {
    if (i < 1 || j < 1) return 0.0;
    if (i > n || j > n) throw std::out_of_range("site outside the quadrant table");
    return quad_values[static_cast<std::size_t>(i - 1) * n + (j - 1)];
  }
  if (j < 1 || i < -j + 1) return 0.0;  // boundary of the wedge lattice
  long lo = std::max(extent.i_min, -j + 1);
  if (j > extent.j_max || i < lo || i > extent.i_max)
    throw std::out_of_range("site outside the wedge table");
  return wedge_values[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - lo)];
}

PassageTable passage_time_quadrant(const QuadrantGrid& grid) {
  const int n = grid.n;
  PassageTable t;
  t.geometry = Geometry::quadrant;
  t.n = n;
  t.quad_values.resize(static_cast<std::size_t>(n) * n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      double up = i > 1 ? t.quad_values[static_cast<std::size_t>(i - 2) * n + (j - 1)] : 0.0;
      double left = j > 1 ? t.quad_values[static_cast<std::size_t>(i - 1) * n + (j - 2)] : 0.0;
      t.quad_values[static_cast<std::size_t>(i - 1) * n + (j - 1)] =
          std::max(up, left) + grid.effective(i, j);
    }
  }
  return t;
}

PassageTable passage_time_wedge(const WedgeGrid& grid) {
  PassageTable t;
  t.geometry = Geometry::wedge;
  t.extent = grid.extent;
  t.wedge_values.resize(static_cast<std::size_t>(grid.extent.j_max));
  // Lattice-boundary sites and sites beyond the sampled extent contribute 0;
  // the latter only feed values outside the exact region i + j <= i_max + 1.
  auto value = [&](long i, long j) -> double {
    if (j < 1 || i < -j + 1) return 0.0;
    long lo = std::max(grid.extent.i_min, -j + 1);
    if (j > grid.extent.j_max || i < lo || i > grid.extent.i_max) return 0.0;
    return t.wedge_values[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - lo)];
  };
  for (long j = 1; j <= grid.extent.j_max; ++j) {
    long lo = grid.row_lo(j);
    auto& row = t.wedge_values[static_cast<std::size_t>(j - 1)];
    row.resize(static_cast<std::size_t>(grid.extent.i_max - lo + 1));
    for (long i = lo; i <= grid.extent.i_max; ++i) {
      double best = std::max(std::max(value(i - 1, j), value(i, j - 1)), value(i + 1, j - 1));
      row[static_cast<std::size_t>(i - lo)] = best + grid.effective(i, j);
    }
  }
  return t;
}

double brute_force_passage(const QuadrantGrid& grid, int ti, int tj, std::uint64_t path_cap) {
  if (ti < 1 || tj < 1 || ti > grid.n || tj > grid.n)
    throw std::invalid_argument("target outside grid");
  // C(ti+tj-2, ti-1) admissible paths.
  double count = 1.0;
  for (int k = 1; k <= ti - 1; ++k) count *= static_cast<double>(tj - 1 + k) / k;
  if (count > static_cast<double>(path_cap))
    throw std::runtime_error("path count above cap; oracle scale only");

  double best = -1.0;
  // Iterative DFS over (right, up) choices.
  struct Frame { int i, j; double acc; int next; };
  std::vector<Frame> stack;
  stack.push_back({1, 1, grid.effective(1, 1), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.i == ti && f.j == tj) {
      best = std::max(best, f.acc);
      stack.pop_back();
      continue;
    }
    if (f.next == 0) {
      f.next = 1;
      if (f.i < ti) {
        stack.push_back({f.i + 1, f.j, f.acc + grid.effective(f.i + 1, f.j), 0});
        continue;
      }
    }
    if (f.next == 1) {
      f.next = 2;
      if (f.j < tj) {
        stack.push_back({f.i, f.j + 1, f.acc + grid.effective(f.i, f.j + 1), 0});
        continue;
      }
    }
    stack.pop_back();
  }
  return best;
}

double brute_force_passage(const WedgeGrid& grid, long ti, long tj, std::uint64_t path_cap) {
  if (tj == 0 && ti >= 0) return 0.0;
  if (tj > 0 && ti == -tj) return 0.0;  // left boundary (i,-i)
  if (!grid.in_lattice(ti, tj)) throw std::invalid_argument("target outside the wedge lattice");
  if (!grid.contains(ti, tj)) throw std::invalid_argument("target outside grid extent");

  // Count admissible paths from (0,1); i+j never decreases, so the reachable
  // region is finite.
  const long smax = ti + tj;
  double count = 0.0;
  {
    // paths(i,j) over rows.
    std::vector<std::vector<double>> cnt(static_cast<std::size_t>(tj) + 1);
    auto idx = [&](long j) -> std::vector<double>& { return cnt[static_cast<std::size_t>(j)]; };
    auto get = [&](long i, long j) -> double {
      if (j < 1 || i < -j + 1 || i + j > smax || j > tj) return 0.0;
      long lo = -j + 1;
      return idx(j)[static_cast<std::size_t>(i - lo)];
    };
    for (long j = 1; j <= tj; ++j) {
      long lo = -j + 1, hi = smax - j;
      idx(j).assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
      for (long i = lo; i <= hi; ++i) {
        double c = (i == 0 && j == 1) ? 1.0 : 0.0;
        c += get(i - 1, j) + get(i, j - 1) + get(i + 1, j - 1);
        idx(j)[static_cast<std::size_t>(i - lo)] = c;
      }
    }
    count = get(ti, tj);
    if (count > static_cast<double>(path_cap))
      throw std::runtime_error("path count above cap; oracle scale only");
    if (count == 0.0) throw std::invalid_argument("target unreachable from (0,1)");
  }

  double best = -1.0;
  struct Frame { long i, j; double acc; int next; };
  std::vector<Frame> stack;
  stack.push_back({0, 1, grid.effective(0, 1), 0});
  const long steps[3][2] = {{1, 0}, {0, 1}, {-1, 1}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.i == ti && f.j == tj) {
      best = std::max(best, f.acc);
      stack.pop_back();
      continue;
    }
    bool pushed = false;
    while (f.next < 3) {
      long ni = f.i + steps[f.next][0];
      long nj = f.j + steps[f.next][1];
      ++f.next;
      if (nj > tj || ni + nj > smax) continue;
      if (!grid.in_lattice(ni, nj)) continue;
      stack.push_back({ni, nj, f.acc + grid.effective(ni, nj), 0});
      pushed = true;
      break;
    }
    if (!pushed && stack.back().next >= 3) stack.pop_back();
  }
  return best;
}

double corner_passage_time(int n, double r, std::uint64_t seed, std::uint32_t replica) {
  if (n < 1) throw std::invalid_argument("grid size must be >= 1");
  check_rate(r);
  const double inv_r = 1.0 / r;
  std::vector<double> row(static_cast<std::size_t>(n) + 1, 0.0);  // row[j] = T(i,j), row[0] = 0
  for (int i = 1; i <= n; ++i) {
    double left = 0.0;  // T(i, j-1), starts as out-of-range 0
    for (int j = 1; j <= n; ++j) {
      double w = (i == j) ? inv_r : 1.0;
      double v = std::max(row[static_cast<std::size_t>(j)], left) +
                 w * quad_sample(seed, replica, i, j);
      row[static_cast<std::size_t>(j)] = v;
      left = v;
    }
  }
  return row[static_cast<std::size_t>(n)];
}

double shape_probe(double x, double y, int n, std::uint64_t seed, std::uint32_t replica) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("shape probe needs x,y > 0");
  long ni = static_cast<long>(std::floor(n * x));
  long nj = static_cast<long>(std::floor(n * y));
  if (ni < 1 || nj < 1) throw std::invalid_argument("floor(nx), floor(ny) must be >= 1");
  std::vector<double> row(static_cast<std::size_t>(nj) + 1, 0.0);
  for (long i = 1; i <= ni; ++i) {
    double left = 0.0;
    for (long j = 1; j <= nj; ++j) {
      double v = std::max(row[static_cast<std::size_t>(j)], left) +
                 quad_sample(seed, replica, i, j);
      row[static_cast<std::size_t>(j)] = v;
      left = v;
    }
  }
  return row[static_cast<std::size_t>(nj)] / n;
}

KappaEstimate estimate_kappa(double r, int n, int replicas, std::uint64_t seed, int threads) {
  if (n < 1) throw std::invalid_argument("grid size must be >= 1");
  if (replicas < 1) throw std::invalid_argument("need at least one replica");
  check_rate(r);

  KappaEstimate est;
  est.r = r;
  est.n = n;
  est.replicas = replicas;
  est.per_replica.assign(static_cast<std::size_t>(replicas), 0.0);

  const int nthreads = pick_threads(threads, replicas);
  std::vector<std::future<void>> futures;
  for (int t = 0; t < nthreads; ++t) {
    futures.push_back(std::async(std::launch::async, [&, t]() {
      for (int k = t; k < replicas; k += nthreads)
        est.per_replica[static_cast<std::size_t>(k)] =
            corner_passage_time(n, r, seed, static_cast<std::uint32_t>(k)) / n;
    }));
  }
  for (auto& f : futures) f.get();

  double sum = 0.0;
  for (double v : est.per_replica) sum += v;
  est.mean = sum / replicas;
  if (replicas > 1) {
    double ss = 0.0;
    for (double v : est.per_replica) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (replicas - 1)) / std::sqrt(static_cast<double>(replicas));
  }
  return est;
}

double kappa_lower_path_bound(double r) {
  return 1.5 + (r * r + 2.0 * (1.0 + r)) / (2.0 * r * (1.0 + r));
}

double kappa_lower_current_bound(double r) { return 1.0 / (r * (1.0 - r)); }

KappaBounds kappa_bounds(double r) {
  check_rate(r);
  KappaBounds b;
  b.r = r;
  b.lower = std::max(4.0, kappa_lower_path_bound(r));
  if (r <= 0.5) b.lower = std::max(b.lower, kappa_lower_current_bound(r));
  b.upper = 3.0 + 1.0 / r;
  return b;
}

double lambda0_from_kappa(double kappa, double tol) {
  if (kappa < 4.0 - tol) throw std::domain_error("kappa below the 4 floor");
  if (kappa < 4.0) kappa = 4.0;
  return 4.0 / kappa;
}

std::pair<double, double> wedge_quadrant_equivalence(int n, double r, std::uint64_t seed,
                                                     std::uint32_t replica) {
  if (n < 1) throw std::invalid_argument("size must be >= 1");
  check_rate(r);
  const double inv_r = 1.0 / r;

  // Wedge side: defect column 0, steps restricted to (1,0) and (-1,1) (each
  // (0,1) step can be replaced by (1,0)+(-1,1) without lowering the value).
  // Row j holds sites i in [-j+1, n-j]; recursion value(i,j) =
  // max(value(i-1,j), value(i+1,j-1)) + w*tau with out-of-range terms 0.
  double wedge_result = 0.0;
  {
    std::vector<double> prev, cur;
    long prev_lo = 0;
    for (long j = 1; j <= n; ++j) {
      long lo = -j + 1, hi = n - j;
      cur.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
      for (long i = lo; i <= hi; ++i) {
        double left = i > lo ? cur[static_cast<std::size_t>(i - 1 - lo)] : 0.0;
        double diag = 0.0;
        if (j > 1 && i + 1 >= prev_lo && i + 1 <= n - (j - 1))
          diag = prev[static_cast<std::size_t>(i + 1 - prev_lo)];
        double w = (i == 0) ? inv_r : 1.0;
        cur[static_cast<std::size_t>(i - lo)] =
            std::max(left, diag) + w * wedge_sample(seed, replica, i, j);
      }
      prev.swap(cur);
      prev_lo = lo;
    }
    wedge_result = prev[static_cast<std::size_t>(0 - prev_lo)];  // site (0, n)
  }

  // Quadrant side: transport through (i,j) -> (i+j, j): Y(a,b) = tau(a-b, b),
  // diagonal weight 1/r.  Same max/add sequence cell by cell.
  double quad_result = 0.0;
  {
    std::vector<double> row(static_cast<std::size_t>(n) + 1, 0.0);
    for (long a = 1; a <= n; ++a) {
      double left = 0.0;
      for (long b = 1; b <= n; ++b) {
        double w = (a == b) ? inv_r : 1.0;
        double v = std::max(row[static_cast<std::size_t>(b)], left) +
                   w * wedge_sample(seed, replica, a - b, b);
        row[static_cast<std::size_t>(b)] = v;
        left = v;
      }
    }
    quad_result = row[static_cast<std::size_t>(n)];
  }

  return {wedge_result, quad_result};
}

}  // namespace sb::lpp
