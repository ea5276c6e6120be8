// Command-line front end: kappa estimation and sweeps, shape probes, the
// macroscopic solver, invariance checks, particle simulation, and
// micro-vs-macro comparisons.  CSV goes to stdout (or --csv), JSON summaries
// to stderr (or --json); floats carry 17 significant digits throughout.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slowbond/harness.hpp"
#include "slowbond/hydro.hpp"
#include "slowbond/lpp.hpp"
#include "slowbond/tasep.hpp"
#include "slowbond/text_io.hpp"

namespace {

using nlohmann::json;
using sb::io::fmt17;

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

// "a1:b1,a2:b2" -> window list
std::vector<std::pair<double, double>> parse_windows(const std::string& s) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("windows must look like a:b");
    out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  }
  return out;
}

// Inline JSON (starts with '{') or a path to a JSON file.
json load_json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return json::parse(arg);
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("cannot open " + arg);
  return json::parse(in);
}

struct Sinks {
  std::string csv_path;   // empty -> stdout
  std::string json_path;  // empty -> stderr
  void emit_csv(const std::string& text) const {
    if (csv_path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(csv_path);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + csv_path);
  }
  void emit_json(const json& j) const {
    if (json_path.empty()) {
      std::cerr << j.dump(2) << "\n";
      return;
    }
    std::ofstream out(json_path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + json_path);
  }
};

sb::hydro::MacroRate resolve_rate(double lambda0, double r, int kappa_n, int kappa_replicas,
                                  std::uint64_t seed, int threads, json* provenance) {
  if (lambda0 > 0.0) {
    if (provenance) *provenance = {{"lambda0", lambda0}, {"source", "given"}};
    return sb::hydro::MacroRate::from_lambda0(lambda0);
  }
  auto est = sb::lpp::estimate_kappa(r, kappa_n, kappa_replicas, seed, threads);
  double l0 = sb::lpp::lambda0_from_kappa(est.mean);
  if (provenance)
    *provenance = {{"lambda0", l0},
                   {"source", "kappa-estimate"},
                   {"kappa", {{"mean", est.mean}, {"std_error", est.std_error}, {"n", est.n},
                              {"replicas", est.replicas}, {"r", r}}}};
  return sb::hydro::MacroRate::from_lambda0(l0);
}

int cmd_kappa(double r, int n, int replicas, std::uint64_t seed, const std::string& ladder,
              bool extrapolate, int threads, const Sinks& sinks) {
  std::vector<int> ns = ladder.empty() ? std::vector<int>{n} : parse_int_list(ladder);
  auto bounds = sb::lpp::kappa_bounds(r);
  std::string csv = "r,n,replica,T_over_n\n";
  json summary;
  summary["r"] = r;
  summary["bounds"] = {{"lower", bounds.lower}, {"upper", bounds.upper}};
  summary["seed"] = seed;
  json rows = json::array();
  std::vector<std::pair<int, double>> means;
  for (int nn : ns) {
    auto est = sb::lpp::estimate_kappa(r, nn, replicas, seed, threads);
    for (int k = 0; k < est.replicas; ++k)
      csv += fmt17(r) + "," + std::to_string(nn) + "," + std::to_string(k) + "," +
             fmt17(est.per_replica[static_cast<std::size_t>(k)]) + "\n";
    rows.push_back({{"n", nn}, {"mean", est.mean}, {"std_error", est.std_error}});
    means.emplace_back(nn, est.mean);
  }
  summary["estimates"] = rows;
  if (extrapolate && means.size() >= 2) {
    double su = 0, sy = 0, suu = 0, suy = 0;
    for (auto& [nn, mean] : means) {
      double u = std::pow(static_cast<double>(nn), -1.0 / 3.0);
      su += u;
      sy += mean;
      suu += u * u;
      suy += u * mean;
    }
    double m = static_cast<double>(means.size());
    double slope = (m * suy - su * sy) / (m * suu - su * su);
    summary["extrapolated"] = (sy - slope * su) / m;
  }
  sinks.emit_csv(csv);
  sinks.emit_json(summary);
  return 0;
}

int cmd_shape(double x, double y, int n, int replicas, std::uint64_t seed, const Sinks& sinks) {
  std::string csv = "x,y,n,replica,T_over_n\n";
  double sum = 0.0;
  for (int k = 0; k < replicas; ++k) {
    double v = sb::lpp::shape_probe(x, y, n, seed, static_cast<std::uint32_t>(k));
    csv += fmt17(x) + "," + fmt17(y) + "," + std::to_string(n) + "," + std::to_string(k) + "," +
           fmt17(v) + "\n";
    sum += v;
  }
  double expect = std::pow(std::sqrt(x) + std::sqrt(y), 2);
  sinks.emit_csv(csv);
  sinks.emit_json(json{{"x", x},
                       {"y", y},
                       {"n", n},
                       {"replicas", replicas},
                       {"mean", sum / replicas},
                       {"limit_shape", expect}});
  return 0;
}

int cmd_hydro(const std::string& profile_arg, double lambda0, double r, int kappa_n,
              int kappa_replicas, double t, double xmin, double xmax, int points,
              std::uint64_t seed, int threads, const Sinks& sinks) {
  auto profile = sb::harness::profile_from_json(load_json_arg(profile_arg));
  json provenance;
  auto rate = resolve_rate(lambda0, r, kappa_n, kappa_replicas, seed, threads, &provenance);
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid.push_back(points == 1 ? xmin : xmin + (xmax - xmin) * i / (points - 1));
  auto sol = sb::hydro::value_function(profile, t, rate, grid);
  std::string csv = "x,v,rho,argmax_q\n";
  for (std::size_t i = 0; i < sol.x.size(); ++i)
    csv += fmt17(sol.x[i]) + "," + fmt17(sol.v[i]) + "," +
           fmt17(sol.rho.empty() ? 0.0 : sol.rho[i]) + "," + fmt17(sol.argmax_q[i]) + "\n";
  sinks.emit_csv(csv);
  provenance["t"] = t;
  provenance["density_warning"] = sol.density_warning;
  sinks.emit_json(provenance);
  return 0;
}

int cmd_invariant_check(const std::string& profile_arg, double lambda0,
                        const std::string& times_arg, double mesh_step, double tolerance,
                        const Sinks& sinks) {
  auto profile = sb::harness::profile_from_json(load_json_arg(profile_arg));
  auto rate = sb::hydro::MacroRate::from_lambda0(lambda0);
  auto report = sb::hydro::invariance_check(profile, rate, parse_double_list(times_arg),
                                            mesh_step, tolerance);
  json jumps = json::array();
  for (const auto& jj : report.jumps)
    jumps.push_back({{"x", jj.x},
                     {"from", jj.from},
                     {"to", jj.to},
                     {"upward", jj.upward},
                     {"admissible", jj.admissible}});
  sinks.emit_json(json{{"invariant", report.invariant},
                       {"max_deviation", report.max_deviation},
                       {"first_fail_t", report.first_fail_t},
                       {"fail_x", report.fail_x},
                       {"tolerance", report.tolerance},
                       {"jumps", jumps},
                       {"jumps_admissible", report.jumps_admissible}});
  return 0;
}

int cmd_simulate(double r, double rho, const std::string& profile_arg, int n, double t,
                 std::uint64_t seed, const std::string& windows_arg, const std::string& measures,
                 int samples, const std::string& bonds_arg, const std::string& snapshot_out,
                 const Sinks& sinks) {
  auto profile = profile_arg.empty()
                     ? sb::hydro::MacroProfile::constant(rho)
                     : sb::harness::profile_from_json(load_json_arg(profile_arg));
  auto windows = windows_arg.empty() ? std::vector<std::pair<double, double>>{{-0.5, 0.5}}
                                     : parse_windows(windows_arg);
  bool want_density = measures.find("density") != std::string::npos;
  bool want_current = measures.find("current") != std::string::npos;
  bool want_paircorr = measures.find("paircorr") != std::string::npos;
  std::vector<long> bonds;
  if (!bonds_arg.empty())
    for (double b : parse_double_list(bonds_arg)) bonds.push_back(static_cast<long>(b));
  if (bonds.empty()) bonds.push_back(0);

  double amax = 0.5;
  for (auto& [a, b] : windows) amax = std::max({amax, std::abs(a), std::abs(b)});
  long half = static_cast<long>(std::ceil(n * (amax + 2.0 * t))) + 100;
  sb::tasep::Window win{-half, half};
  auto occ0 = sb::tasep::init_from_profile(profile, n, win, seed);
  sb::tasep::LineEngine engine(sb::tasep::heights_from_occ(occ0),
                               sb::tasep::BondClocks::slow_bond(seed, r));

  std::string csv = "time,measure,a,b,value\n";
  for (int s = 1; s <= samples; ++s) {
    double tt = t * s / samples;
    engine.run_until(n * tt);
    auto occ = engine.occupancies();
    if (want_density)
      for (auto& [a, b] : windows)
        csv += fmt17(tt) + ",density," + fmt17(a) + "," + fmt17(b) + "," +
               fmt17(sb::tasep::measure_density(occ, a, b, n) / (b - a)) + "\n";
    if (want_current)
      for (auto& [a, b] : windows) {
        long bond = static_cast<long>(std::floor(n * a));
        csv += fmt17(tt) + ",current," + fmt17(a) + ",," +
               fmt17(static_cast<double>(engine.current_at(bond)) / n) + "\n";
        (void)b;
      }
    if (want_paircorr)
      for (long bond : bonds) {
        double rate_b = bond == 0 ? r : 1.0;
        csv += fmt17(tt) + ",paircorr," + std::to_string(bond) + ",," +
               fmt17(static_cast<double>(engine.current_at(bond)) / (rate_b * n * tt)) + "\n";
      }
  }
  sinks.emit_csv(csv);
  if (!snapshot_out.empty()) {
    std::ofstream out(snapshot_out, std::ios::binary);
    sb::tasep::write_snapshot(out, engine.occupancies(), n * t, seed);
    if (!out) throw std::runtime_error("cannot write " + snapshot_out);
  }
  sinks.emit_json(json{{"r", r},
                       {"n", n},
                       {"t", t},
                       {"seed", seed},
                       {"window_sites", 2 * half + 1},
                       {"particles", engine.occupancies().particle_count()}});
  return 0;
}

int cmd_snapshot(const std::string& in_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  auto snap = sb::tasep::read_snapshot(in);
  double density = static_cast<double>(snap.occ.particle_count()) / snap.occ.win.size();
  std::cout << json{{"lo", snap.occ.win.lo},
                    {"hi", snap.occ.win.hi},
                    {"time", snap.time},
                    {"seed", snap.seed},
                    {"sites", snap.occ.win.size()},
                    {"particles", snap.occ.particle_count()},
                    {"density", density}}
                   .dump(2)
            << "\n";
  return 0;
}

// Config-driven harness commands: exit 0 iff the configured checks pass.
json load_config(const std::string& path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir, std::optional<int> threads) {
  json j = load_json_arg(path);
  if (seed) j["seed"] = *seed;
  if (!out_dir.empty()) j["out_dir"] = out_dir;
  if (threads) j["threads"] = *threads;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slow-bond exclusion workbench"};
  app.require_subcommand(1);

  Sinks sinks;
  app.add_option("--csv", sinks.csv_path, "write CSV here instead of stdout");
  app.add_option("--json", sinks.json_path, "write the JSON summary here instead of stderr");

  // kappa
  double r = 1.0;
  int n = 1500, replicas = 20;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string ladder;
  bool extrapolate = false;
  auto* kappa = app.add_subcommand("kappa", "estimate kappa(r) = lim T(n,n)/n");
  kappa->add_option("--r", r, "slow rate in (0,1]")->required();
  kappa->add_option("--n", n, "grid size");
  kappa->add_option("--replicas", replicas, "independent replicas");
  kappa->add_option("--seed", seed, "RNG seed");
  kappa->add_option("--ladder", ladder, "comma list of n values");
  kappa->add_flag("--extrapolate", extrapolate, "fit a + b*n^(-1/3) across the ladder");
  kappa->add_option("--threads", threads, "worker threads (0 = hardware)");

  // shape
  double sx = 1.0, sy = 1.0;
  int sn = 1000, sreplicas = 10;
  std::uint64_t sseed = 1;
  auto* shape = app.add_subcommand("shape", "homogeneous corner-shape probe");
  shape->add_option("--x", sx)->required();
  shape->add_option("--y", sy)->required();
  shape->add_option("--n", sn);
  shape->add_option("--replicas", sreplicas);
  shape->add_option("--seed", sseed);

  // hydro
  std::string h_profile;
  double h_lambda0 = 0.0, h_r = 1.0, h_t = 1.0, h_xmin = -2.0, h_xmax = 2.0;
  int h_points = 101, h_kn = 1500, h_kreps = 20, h_threads = 0;
  std::uint64_t h_seed = 1;
  auto* hydro_cmd = app.add_subcommand("hydro", "evaluate v(x,t) and the density profile");
  hydro_cmd->add_option("--profile", h_profile, "profile JSON (inline or path)")->required();
  hydro_cmd->add_option("--lambda0", h_lambda0, "macroscopic rate at the defect");
  hydro_cmd->add_option("--r", h_r, "slow rate; lambda0 from a kappa estimate");
  hydro_cmd->add_option("--kappa-n", h_kn);
  hydro_cmd->add_option("--kappa-replicas", h_kreps);
  hydro_cmd->add_option("--t", h_t)->required();
  hydro_cmd->add_option("--xmin", h_xmin);
  hydro_cmd->add_option("--xmax", h_xmax);
  hydro_cmd->add_option("--points", h_points);
  hydro_cmd->add_option("--seed", h_seed);
  hydro_cmd->add_option("--threads", h_threads);

  // invariant-check
  std::string ic_profile, ic_times = "0.1,1,5";
  double ic_lambda0 = 0.64, ic_mesh = 0.01, ic_tol = 1e-6;
  auto* inv_check = app.add_subcommand("invariant-check", "test a profile for invariance");
  inv_check->add_option("--profile", ic_profile)->required();
  inv_check->add_option("--lambda0", ic_lambda0)->required();
  inv_check->add_option("--times", ic_times, "comma list of times");
  inv_check->add_option("--mesh-step", ic_mesh);
  inv_check->add_option("--tolerance", ic_tol);

  // simulate
  double m_r = 1.0, m_rho = 0.3, m_t = 1.0;
  int m_n = 1000, m_samples = 8;
  std::uint64_t m_seed = 1;
  std::string m_profile, m_windows, m_measures = "density,current", m_bonds, m_snapshot;
  auto* sim = app.add_subcommand("simulate", "event-driven particle simulation");
  sim->add_option("--r", m_r)->required();
  sim->add_option("--rho", m_rho, "constant initial density");
  sim->add_option("--profile", m_profile, "profile JSON (inline or path)");
  sim->add_option("--n", m_n, "macroscopic scale")->required();
  sim->add_option("--t", m_t, "macroscopic horizon")->required();
  sim->add_option("--seed", m_seed);
  sim->add_option("--windows", m_windows, "a1:b1,a2:b2");
  sim->add_option("--measure", m_measures, "density,current,paircorr");
  sim->add_option("--samples", m_samples, "number of sample times");
  sim->add_option("--bonds", m_bonds, "bonds for paircorr rows");
  sim->add_option("--snapshot-out", m_snapshot, "write a binary snapshot at the end");

  // snapshot
  std::string snap_in;
  auto* snap = app.add_subcommand("snapshot", "dump a binary snapshot header");
  snap->add_option("--in", snap_in)->required();

  // harness commands
  std::string cfg_path, out_dir;
  std::optional<std::uint64_t> cfg_seed;
  std::optional<int> cfg_threads;
  auto add_cfg = [&](CLI::App* cmd) {
    cmd->add_option("--config", cfg_path, "JSON config (inline or path)")->required();
    cmd->add_option("--seed", cfg_seed, "override config seed");
    cmd->add_option("--out-dir", out_dir, "override config out_dir");
    cmd->add_option("--threads", cfg_threads, "override config threads");
  };
  auto* compare = app.add_subcommand("compare", "micro-vs-macro comparison run");
  add_cfg(compare);
  auto* sweep = app.add_subcommand("kappa-sweep", "kappa estimates across (r, n)");
  add_cfg(sweep);
  auto* invariance = app.add_subcommand("invariance", "invariance study");
  add_cfg(invariance);

  CLI11_PARSE(app, argc, argv);

  try {
    if (kappa->parsed())
      return cmd_kappa(r, n, replicas, seed, ladder, extrapolate, threads, sinks);
    if (shape->parsed()) return cmd_shape(sx, sy, sn, sreplicas, sseed, sinks);
    if (hydro_cmd->parsed())
      return cmd_hydro(h_profile, h_lambda0, h_r, h_kn, h_kreps, h_t, h_xmin, h_xmax, h_points,
                       h_seed, h_threads, sinks);
    if (inv_check->parsed())
      return cmd_invariant_check(ic_profile, ic_lambda0, ic_times, ic_mesh, ic_tol, sinks);
    if (sim->parsed())
      return cmd_simulate(m_r, m_rho, m_profile, m_n, m_t, m_seed, m_windows, m_measures,
                          m_samples, m_bonds, m_snapshot, sinks);
    if (snap->parsed()) return cmd_snapshot(snap_in);
    if (compare->parsed()) {
      auto report = sb::harness::run_compare(sb::harness::compare_config_from_json(
          load_config(cfg_path, cfg_seed, out_dir, cfg_threads)));
      sinks.emit_json(sb::harness::to_json(report));
      return report.pass ? 0 : 1;
    }
    if (sweep->parsed()) {
      auto result = sb::harness::run_kappa_sweep(sb::harness::kappa_sweep_config_from_json(
          load_config(cfg_path, cfg_seed, out_dir, cfg_threads)));
      sinks.emit_json(sb::harness::to_json(result));
      return result.checks_pass ? 0 : 1;
    }
    if (invariance->parsed()) {
      auto result = sb::harness::run_invariance(sb::harness::invariance_config_from_json(
          load_config(cfg_path, cfg_seed, out_dir, cfg_threads)));
      sinks.emit_json(sb::harness::to_json(result));
      return result.all_as_expected ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
