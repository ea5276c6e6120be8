#include "slowbond/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "slowbond/text_io.hpp"

namespace sb::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text, std::string& io_errors) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) io_errors += "failed to write " + path.string() + "; ";
}

void finish_io(const std::string& io_errors) {
  if (!io_errors.empty()) throw std::runtime_error("output errors: " + io_errors);
}

// Hashes cover the scientific parameters only; output paths and thread
// counts never change results.
json sweep_config_json(const KappaSweepConfig& c) {
  return json{{"r_values", c.r_values},
              {"n_ladder", c.n_ladder},
              {"replicas", c.replicas},
              {"seed", c.seed},
              {"extrapolate", c.extrapolate}};
}

json compare_config_json(const CompareConfig& c) {
  json profile;
  if (c.profile_left_density >= 0.0) {
    json segs = json::array();
    for (auto& [x, d] : c.profile_segments) segs.push_back({{"x", x}, {"density", d}});
    profile = json{{"left_density", c.profile_left_density}, {"segments", segs}};
  }
  return json{{"r", c.r},
              {"rho", c.rho},
              {"profile", profile},
              {"n", c.n},
              {"n_ladder", c.n_ladder},
              {"t", c.t},
              {"seed", c.seed},
              {"windows", c.windows},
              {"current_points", c.current_points},
              {"density_tol", c.density_tol},
              {"current_tol", c.current_tol},
              {"kappa_mean", c.kappa_mean},
              {"kappa_std_error", c.kappa_std_error},
              {"kappa_n", c.kappa_n},
              {"kappa_replicas", c.kappa_replicas},
              {"two_window_check", c.two_window_check},
              {"window_sites", c.window_sites}};
}

json invariance_config_json(const InvarianceConfig& c) {
  json cases = json::array();
  for (auto& s : c.cases) cases.push_back({{"kind", s.kind}, {"x", s.x}});
  return json{{"lambda0", c.lambda0},   {"times", c.times},     {"cases", cases},
              {"mesh_step", c.mesh_step}, {"tolerance", c.tolerance}, {"micro", c.micro},
              {"micro_r", c.micro_r},   {"micro_n", c.micro_n}, {"micro_t", c.micro_t},
              {"seed", c.seed}};
}

hydro::MacroProfile compare_profile(const CompareConfig& c) {
  if (c.profile_left_density >= 0.0)
    return hydro::MacroProfile::from_segments(c.profile_left_density, c.profile_segments);
  return hydro::MacroProfile::constant(c.rho);
}

// Empirical location of a downward step rho_left -> rho_right from the
// excess mass over the right plateau: robust against site-level noise.
double shock_position(const tasep::Occupancies& occ, double n, double rho_left,
                      double rho_right, double half_range) {
  double mass = tasep::measure_density(occ, -half_range, half_range, n);
  double excess = mass - rho_right * 2.0 * half_range;
  return excess / (rho_left - rho_right) - half_range;
}

}  // namespace

// ---------------------------------------------------------------------------
// kappa sweep.
// ---------------------------------------------------------------------------

KappaSweepResult run_kappa_sweep(const KappaSweepConfig& config) {
  if (config.r_values.empty()) throw std::invalid_argument("no r values configured");
  if (config.n_ladder.empty()) throw std::invalid_argument("empty n ladder");
  for (int n : config.n_ladder)
    if (n < 1) throw std::invalid_argument("ladder entries must be >= 1");
  if (config.replicas < 1) throw std::invalid_argument("need at least one replica");

  KappaSweepResult result;
  result.config_hash = io::hash_hex(canonical_config_string(sweep_config_json(config)));

  std::vector<double> rs(config.r_values);
  std::sort(rs.begin(), rs.end());

  for (int n : config.n_ladder) {
    for (double r : rs) {
      auto est = lpp::estimate_kappa(r, n, config.replicas, config.seed, config.threads);
      auto bounds = lpp::kappa_bounds(r);
      SweepRow row;
      row.r = r;
      row.n = n;
      row.replicas = config.replicas;
      row.mean = est.mean;
      row.std_error = est.std_error;
      row.lower = bounds.lower;
      row.upper = bounds.upper;
      row.per_replica = est.per_replica;
      if (row.lower > row.upper) result.checks_pass = false;
      result.rows.push_back(std::move(row));
    }
    // Shared seed makes the estimates couple sample by sample; the mean must
    // be nonincreasing in r within each n.
    std::size_t base = result.rows.size() - rs.size();
    for (std::size_t i = base + 1; i < result.rows.size(); ++i)
      if (result.rows[i].mean > result.rows[i - 1].mean) result.checks_pass = false;
  }

  if (config.extrapolate && config.n_ladder.size() >= 2) {
    for (double r : rs) {
      double su = 0, sy = 0, suu = 0, suy = 0;
      int m = 0;
      for (const auto& row : result.rows) {
        if (row.r != r) continue;
        double u = std::pow(static_cast<double>(row.n), -1.0 / 3.0);
        su += u;
        sy += row.mean;
        suu += u * u;
        suy += u * row.mean;
        ++m;
      }
      double denom = m * suu - su * su;
      if (std::abs(denom) > 1e-30) {
        double slope = (m * suy - su * sy) / denom;
        result.extrapolated.emplace_back(r, (sy - slope * su) / m);
      }
    }
  }

  if (!config.out_dir.empty()) {
    std::string io_errors;
    fs::create_directories(config.out_dir);
    std::string csv = "r,n,replica,T_over_n,seed,config\n";
    for (const auto& row : result.rows)
      for (std::size_t k = 0; k < row.per_replica.size(); ++k)
        csv += io::fmt17(row.r) + "," + std::to_string(row.n) + "," + std::to_string(k) + "," +
               io::fmt17(row.per_replica[k]) + "," + std::to_string(config.seed) + "," +
               result.config_hash + "\n";
    write_text(fs::path(config.out_dir) / "kappa_rows.csv", csv, io_errors);
    write_text(fs::path(config.out_dir) / "kappa_summary.json", to_json(result).dump(2) + "\n",
               io_errors);
    finish_io(io_errors);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Comparison.
// ---------------------------------------------------------------------------

namespace {

struct EmpiricalRun {
  std::vector<double> window_masses;
  std::vector<double> currents;
};

EmpiricalRun simulate_compare(const CompareConfig& config, const hydro::MacroProfile& profile,
                              int n, long half_window) {
  tasep::Window win{-half_window, half_window};
  auto occ0 = tasep::init_from_profile(profile, n, win, config.seed);
  tasep::LineEngine engine(tasep::heights_from_occ(occ0),
                           tasep::BondClocks::slow_bond(config.seed, config.r));
  engine.run_until(n * config.t);
  auto occ_t = engine.occupancies();

  EmpiricalRun run;
  for (auto& [a, b] : config.windows)
    run.window_masses.push_back(tasep::measure_density(occ_t, a, b, n));
  for (double a : config.current_points) {
    long bond = static_cast<long>(std::floor(n * a));
    run.currents.push_back(static_cast<double>(engine.current_at(bond)) / n);
  }
  return run;
}

long compare_half_window(const CompareConfig& config, int n, double amax) {
  return static_cast<long>(std::ceil(n * (amax + 2.0 * config.t))) + 100;
}

double resolve_lambda0(const CompareConfig& config, double& kappa_mean, double& kappa_se,
                       int& kappa_n) {
  kappa_mean = config.kappa_mean;
  kappa_se = config.kappa_std_error;
  kappa_n = config.kappa_n;
  if (kappa_mean <= 0.0) {
    auto est = lpp::estimate_kappa(config.r, config.kappa_n, config.kappa_replicas, config.seed,
                                   config.threads);
    kappa_mean = est.mean;
    kappa_se = est.std_error;
    kappa_n = est.n;
  }
  return lpp::lambda0_from_kappa(kappa_mean);
}

double window_extent(const CompareConfig& config) {
  double amax = 0.5;
  for (auto& [a, b] : config.windows) amax = std::max({amax, std::abs(a), std::abs(b)});
  for (double a : config.current_points) amax = std::max(amax, std::abs(a));
  return amax;
}

}  // namespace

std::vector<DensityRow> predicted_densities(const CompareConfig& config, double lambda0) {
  auto profile = compare_profile(config);
  auto rate = hydro::MacroRate::from_lambda0(lambda0);
  std::vector<DensityRow> rows;
  for (auto& [a, b] : config.windows) {
    DensityRow row;
    row.a = a;
    row.b = b;
    row.predicted = config.t > 0.0
                        ? hydro::value_at(profile, config.t, rate, b) -
                              hydro::value_at(profile, config.t, rate, a)
                        : profile.v0(b) - profile.v0(a);
    rows.push_back(row);
  }
  return rows;
}

std::vector<CurrentRow> predicted_currents(const CompareConfig& config, double lambda0) {
  auto profile = compare_profile(config);
  auto rate = hydro::MacroRate::from_lambda0(lambda0);
  std::vector<CurrentRow> rows;
  for (double a : config.current_points) {
    CurrentRow row;
    row.a = a;
    row.predicted =
        config.t > 0.0 ? profile.v0(a) - hydro::value_at(profile, config.t, rate, a) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

ComparisonReport run_compare(const CompareConfig& config) {
  auto t0 = std::chrono::steady_clock::now();
  if (config.n < 1) throw std::invalid_argument("scale n must be >= 1");
  if (config.t < 0.0) throw std::invalid_argument("time must be >= 0");
  if (config.windows.empty() && config.current_points.empty())
    throw std::invalid_argument("nothing to compare");

  const double amax = window_extent(config);
  const long needed = compare_half_window(config, config.n, amax);
  long half_window = config.window_sites > 0 ? config.window_sites : needed;
  if (half_window < needed)
    throw std::invalid_argument("window too small for the requested observables and horizon");

  ComparisonReport report;
  report.seed = config.seed;
  report.config_hash = io::hash_hex(canonical_config_string(compare_config_json(config)));
  report.lambda0 = resolve_lambda0(config, report.kappa_mean, report.kappa_std_error,
                                   report.kappa_n);

  auto profile = compare_profile(config);
  auto run = simulate_compare(config, profile, config.n, half_window);

  report.densities = predicted_densities(config, report.lambda0);
  for (std::size_t i = 0; i < report.densities.size(); ++i) {
    auto& row = report.densities[i];
    row.empirical = run.window_masses[i];
    row.abs_err = std::abs(row.empirical - row.predicted);
    report.density_sup = std::max(report.density_sup, row.abs_err);
    report.density_l1 += row.abs_err * std::abs(row.b - row.a);
  }
  report.currents = predicted_currents(config, report.lambda0);
  for (std::size_t i = 0; i < report.currents.size(); ++i) {
    auto& row = report.currents[i];
    row.empirical = run.currents[i];
    row.abs_err = std::abs(row.empirical - row.predicted);
    report.current_sup = std::max(report.current_sup, row.abs_err);
  }

  report.pass = report.density_sup <= config.density_tol &&
                report.current_sup <= config.current_tol;

  // Discrepancy trend across extra scales; how large n must be for the
  // predicted plateaus to emerge is not known in advance, so the ladder
  // reports rather than asserts.
  for (int n : config.n_ladder) {
    auto extra = simulate_compare(config, profile, n, compare_half_window(config, n, amax));
    LadderPoint point;
    point.n = n;
    for (std::size_t i = 0; i < extra.window_masses.size(); ++i)
      point.density_sup = std::max(
          point.density_sup, std::abs(extra.window_masses[i] - report.densities[i].predicted));
    for (std::size_t i = 0; i < extra.currents.size(); ++i)
      point.current_sup =
          std::max(point.current_sup, std::abs(extra.currents[i] - report.currents[i].predicted));
    report.ladder.push_back(point);
  }

  if (config.two_window_check) {
    auto wide = simulate_compare(config, profile, config.n, half_window + config.n);
    double diff = 0.0;
    for (std::size_t i = 0; i < run.window_masses.size(); ++i)
      diff = std::max(diff, std::abs(run.window_masses[i] - wide.window_masses[i]));
    for (std::size_t i = 0; i < run.currents.size(); ++i)
      diff = std::max(diff, std::abs(run.currents[i] - wide.currents[i]));
    report.two_window_max_diff = diff;
    if (diff > config.density_tol) report.pass = false;
  }

  report.runtime_seconds = seconds_since(t0);

  if (!config.out_dir.empty()) {
    std::string io_errors;
    fs::create_directories(config.out_dir);
    std::string dcsv = "a,b,empirical,predicted,abs_err,seed,config\n";
    for (const auto& row : report.densities)
      dcsv += io::fmt17(row.a) + "," + io::fmt17(row.b) + "," + io::fmt17(row.empirical) + "," +
              io::fmt17(row.predicted) + "," + io::fmt17(row.abs_err) + "," +
              std::to_string(config.seed) + "," + report.config_hash + "\n";
    write_text(fs::path(config.out_dir) / "compare_densities.csv", dcsv, io_errors);
    std::string ccsv = "a,empirical,predicted,abs_err,seed,config\n";
    for (const auto& row : report.currents)
      ccsv += io::fmt17(row.a) + "," + io::fmt17(row.empirical) + "," +
              io::fmt17(row.predicted) + "," + io::fmt17(row.abs_err) + "," +
              std::to_string(config.seed) + "," + report.config_hash + "\n";
    write_text(fs::path(config.out_dir) / "compare_currents.csv", ccsv, io_errors);
    write_text(fs::path(config.out_dir) / "compare_report.json", to_json(report).dump(2) + "\n",
               io_errors);
    finish_io(io_errors);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Invariance.
// ---------------------------------------------------------------------------

InvarianceResult run_invariance(const InvarianceConfig& config) {
  auto rate = hydro::MacroRate::from_lambda0(config.lambda0);
  const double rs = rate.rho_star;

  InvarianceResult result;
  result.config_hash = io::hash_hex(canonical_config_string(invariance_config_json(config)));

  for (const auto& spec : config.cases) {
    hydro::MacroProfile profile = hydro::MacroProfile::constant(rs);
    bool expected = true;
    if (spec.kind == "constant-low") {
      profile = hydro::MacroProfile::constant(rs);
    } else if (spec.kind == "constant-high") {
      profile = hydro::MacroProfile::constant(1.0 - rs);
    } else if (spec.kind == "entropy") {
      profile = hydro::MacroProfile::from_segments(rs, {{spec.x, 1.0 - rs}});
    } else if (spec.kind == "nonentropy") {
      profile = hydro::MacroProfile::from_segments(1.0 - rs, {{spec.x, rs}});
      expected = std::abs(spec.x) < 1e-12;
    } else {
      throw std::invalid_argument("unknown invariance case kind: " + spec.kind);
    }
    auto rep = hydro::invariance_check(profile, rate, config.times, config.mesh_step,
                                       config.tolerance);
    InvarianceCaseResult cr;
    cr.spec = spec;
    cr.invariant = rep.invariant;
    cr.expected = expected;
    cr.max_deviation = rep.max_deviation;
    cr.first_fail_t = rep.first_fail_t;
    result.cases.push_back(cr);
    if (rep.invariant != expected) result.all_as_expected = false;
  }

  if (config.micro) {
    // Track the empirical location of the non-entropy shock started at the
    // origin; the report is qualitative (drift magnitude only).
    auto profile = hydro::MacroProfile::from_segments(1.0 - rs, {{0.0, rs}});
    long half = static_cast<long>(std::ceil(config.micro_n * (1.0 + 2.0 * config.micro_t))) + 100;
    tasep::Window win{-half, half};
    auto occ0 = tasep::init_from_profile(profile, config.micro_n, win, config.seed);
    result.micro_shock_start = shock_position(occ0, config.micro_n, 1.0 - rs, rs, 0.9);
    auto res = tasep::evolve(occ0, tasep::BondClocks::slow_bond(config.seed, config.micro_r),
                             config.micro_n * config.micro_t);
    result.micro_shock_end = shock_position(res.occ, config.micro_n, 1.0 - rs, rs, 0.9);
    result.micro_ran = true;
  }

  if (!config.out_dir.empty()) {
    std::string io_errors;
    fs::create_directories(config.out_dir);
    write_text(fs::path(config.out_dir) / "invariance_report.json",
               to_json(result).dump(2) + "\n", io_errors);
    finish_io(io_errors);
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON plumbing.
// ---------------------------------------------------------------------------

std::string canonical_config_string(const json& j) { return j.dump(); }

hydro::MacroProfile profile_from_json(const json& j) {
  if (!j.contains("left_density")) throw std::invalid_argument("profile needs left_density");
  std::vector<std::pair<double, double>> segments;
  for (const auto& seg : j.value("segments", json::array()))
    segments.emplace_back(seg.at("x").get<double>(), seg.at("density").get<double>());
  return hydro::MacroProfile::from_segments(j.at("left_density").get<double>(), segments);
}

KappaSweepConfig kappa_sweep_config_from_json(const json& j) {
  KappaSweepConfig c;
  c.r_values = j.at("r_values").get<std::vector<double>>();
  c.n_ladder = j.value("n_ladder", std::vector<int>{1500});
  c.replicas = j.value("replicas", 20);
  c.seed = j.value("seed", std::uint64_t{1});
  c.threads = j.value("threads", 0);
  c.extrapolate = j.value("extrapolate", false);
  c.out_dir = j.value("out_dir", std::string{});
  return c;
}

CompareConfig compare_config_from_json(const json& j) {
  CompareConfig c;
  c.r = j.at("r").get<double>();
  c.rho = j.value("rho", 0.3);
  if (j.contains("profile") && !j.at("profile").is_null()) {
    const auto& p = j.at("profile");
    c.profile_left_density = p.at("left_density").get<double>();
    for (const auto& seg : p.value("segments", json::array()))
      c.profile_segments.emplace_back(seg.at("x").get<double>(),
                                      seg.at("density").get<double>());
  }
  c.n = j.value("n", 2000);
  c.n_ladder = j.value("n_ladder", std::vector<int>{});
  c.t = j.value("t", 1.0);
  c.seed = j.value("seed", std::uint64_t{1});
  for (const auto& w : j.value("windows", json::array()))
    c.windows.emplace_back(w.at(0).get<double>(), w.at(1).get<double>());
  c.current_points = j.value("current_points", std::vector<double>{});
  c.density_tol = j.value("density_tol", 0.03);
  c.current_tol = j.value("current_tol", 0.03);
  if (j.contains("kappa")) {
    c.kappa_mean = j.at("kappa").value("mean", 0.0);
    c.kappa_std_error = j.at("kappa").value("std_error", 0.0);
    c.kappa_n = j.at("kappa").value("n", 1500);
  }
  c.kappa_n = j.value("kappa_n", c.kappa_n);
  c.kappa_replicas = j.value("kappa_replicas", 20);
  c.threads = j.value("threads", 0);
  c.two_window_check = j.value("two_window_check", false);
  c.window_sites = j.value("window_sites", 0L);
  c.out_dir = j.value("out_dir", std::string{});
  return c;
}

InvarianceConfig invariance_config_from_json(const json& j) {
  InvarianceConfig c;
  c.lambda0 = j.value("lambda0", 0.64);
  c.times = j.value("times", std::vector<double>{0.1, 1.0, 5.0});
  for (const auto& s : j.value("cases", json::array()))
    c.cases.push_back({s.at("kind").get<std::string>(), s.value("x", 0.0)});
  c.mesh_step = j.value("mesh_step", 0.01);
  c.tolerance = j.value("tolerance", 1e-6);
  c.micro = j.value("micro", false);
  c.micro_r = j.value("micro_r", 0.5);
  c.micro_n = j.value("micro_n", 500);
  c.micro_t = j.value("micro_t", 1.0);
  c.seed = j.value("seed", std::uint64_t{1});
  c.out_dir = j.value("out_dir", std::string{});
  return c;
}

json to_json(const KappaSweepResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"r", row.r},
                    {"n", row.n},
                    {"replicas", row.replicas},
                    {"mean", row.mean},
                    {"std_error", row.std_error},
                    {"lower", row.lower},
                    {"upper", row.upper}});
  json extr = json::array();
  for (auto& [r, a] : result.extrapolated) extr.push_back({{"r", r}, {"extrapolated", a}});
  return json{{"rows", rows},
              {"extrapolated", extr},
              {"checks_pass", result.checks_pass},
              {"config", result.config_hash}};
}

json to_json(const ComparisonReport& report) {
  json dens = json::array();
  for (const auto& row : report.densities)
    dens.push_back({{"a", row.a},
                    {"b", row.b},
                    {"empirical", row.empirical},
                    {"predicted", row.predicted},
                    {"abs_err", row.abs_err}});
  json curr = json::array();
  for (const auto& row : report.currents)
    curr.push_back({{"a", row.a},
                    {"empirical", row.empirical},
                    {"predicted", row.predicted},
                    {"abs_err", row.abs_err}});
  json ladder = json::array();
  for (const auto& point : report.ladder)
    ladder.push_back({{"n", point.n},
                      {"density_sup", point.density_sup},
                      {"current_sup", point.current_sup}});
  return json{{"kappa", {{"mean", report.kappa_mean},
                         {"std_error", report.kappa_std_error},
                         {"n", report.kappa_n}}},
              {"lambda0", report.lambda0},
              {"densities", dens},
              {"currents", curr},
              {"ladder", ladder},
              {"density_sup", report.density_sup},
              {"density_l1", report.density_l1},
              {"current_sup", report.current_sup},
              {"two_window_max_diff", report.two_window_max_diff},
              {"pass", report.pass},
              {"runtime_seconds", report.runtime_seconds},
              {"seed", report.seed},
              {"config", report.config_hash}};
}

json to_json(const InvarianceResult& result) {
  json cases = json::array();
  for (const auto& c : result.cases)
    cases.push_back({{"kind", c.spec.kind},
                     {"x", c.spec.x},
                     {"invariant", c.invariant},
                     {"expected", c.expected},
                     {"max_deviation", c.max_deviation},
                     {"first_fail_t", c.first_fail_t}});
  json out{{"cases", cases},
           {"all_as_expected", result.all_as_expected},
           {"config", result.config_hash}};
  if (result.micro_ran) {
    out["micro"] = {{"shock_start", result.micro_shock_start},
                    {"shock_end", result.micro_shock_end},
                    {"drift", result.micro_shock_end - result.micro_shock_start}};
  }
  return out;
}

}  // namespace sb::harness
