#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slowbond/hydro.hpp"
#include "slowbond/lpp.hpp"
#include "slowbond/tasep.hpp"

// Experiment orchestration: kappa sweeps over (r, n) ladders, micro-vs-macro
// comparisons, and invariance studies, with CSV/JSON persistence.  Every
// emitted row carries the seed and a hash of the canonical configuration so
// it can be regenerated bit-exactly.
namespace sb::harness {

// ---------------------------------------------------------------------------
// kappa sweep.
// ---------------------------------------------------------------------------

struct KappaSweepConfig {
  std::vector<double> r_values;
  std::vector<int> n_ladder{1500};
  int replicas = 20;
  std::uint64_t seed = 1;
  int threads = 0;
  bool extrapolate = false;  // fit mean(n) = a + b * n^(-1/3) across the ladder
  std::string out_dir;
};

struct SweepRow {
  double r = 0.0;
  int n = 0;
  int replicas = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> per_replica;
};

struct KappaSweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::pair<double, double>> extrapolated;  // (r, intercept)
  bool checks_pass = true;  // bound ordering + shared-seed monotonicity in r
  std::string config_hash;
};

KappaSweepResult run_kappa_sweep(const KappaSweepConfig& config);

// ---------------------------------------------------------------------------
// Micro-vs-macro comparison.
// ---------------------------------------------------------------------------

struct CompareConfig {
  double r = 1.0;
  // constant density unless profile segments are given
  double rho = 0.3;
  double profile_left_density = -1.0;
  std::vector<std::pair<double, double>> profile_segments;

  int n = 2000;
  std::vector<int> n_ladder;  // optional extra scales; reports the trend of
                              // the discrepancies, pass is judged at n only
  double t = 1.0;
  std::uint64_t seed = 1;
  std::vector<std::pair<double, double>> windows;  // density windows [a,b]
  std::vector<double> current_points;
  double density_tol = 0.03;  // defaults calibrated on homogeneous runs at n = 2000
  double current_tol = 0.03;

  // kappa provenance: a supplied estimate (mean > 0) or estimated here.
  double kappa_mean = 0.0;
  double kappa_std_error = 0.0;
  int kappa_n = 1500;
  int kappa_replicas = 20;

  int threads = 0;
  bool two_window_check = false;  // rerun with a larger window, compare
  long window_sites = 0;  // simulation half-window override; 0 picks
                          // n*(max|a| + 2t) + 100, smaller values refuse
  std::string out_dir;
};

struct DensityRow {
  double a = 0.0, b = 0.0;
  double empirical = 0.0, predicted = 0.0, abs_err = 0.0;
};

struct CurrentRow {
  double a = 0.0;
  double empirical = 0.0, predicted = 0.0, abs_err = 0.0;
};

struct LadderPoint {
  int n = 0;
  double density_sup = 0.0;
  double current_sup = 0.0;
};

struct ComparisonReport {
  double kappa_mean = 0.0, kappa_std_error = 0.0;
  int kappa_n = 0;
  double lambda0 = 1.0;
  std::vector<DensityRow> densities;
  std::vector<CurrentRow> currents;
  std::vector<LadderPoint> ladder;  // discrepancy trend across n_ladder
  double density_sup = 0.0, density_l1 = 0.0, current_sup = 0.0;
  double two_window_max_diff = -1.0;  // set when the consistency rerun ran
  bool pass = false;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Simulates at scale n, evaluates the variational solver with
// lambda0 = 4/kappa-estimate, and reports per-window density and per-point
// current discrepancies.  Refuses window/light-cone violations before
// simulating.
ComparisonReport run_compare(const CompareConfig& config);

// Prediction columns recomputed from the solver alone (regeneration check).
std::vector<DensityRow> predicted_densities(const CompareConfig& config, double lambda0);
std::vector<CurrentRow> predicted_currents(const CompareConfig& config, double lambda0);

// ---------------------------------------------------------------------------
// Invariance study.
// ---------------------------------------------------------------------------

struct InvarianceCaseSpec {
  std::string kind;  // "constant-low" | "constant-high" | "entropy" | "nonentropy"
  double x = 0.0;    // shock location (ignored for constants)
};

struct InvarianceConfig {
  double lambda0 = 0.64;
  std::vector<double> times{0.1, 1.0, 5.0};
  std::vector<InvarianceCaseSpec> cases;
  double mesh_step = 0.01;
  double tolerance = 1e-6;

  bool micro = false;  // also track the non-entropy shock microscopically
  double micro_r = 0.5;
  int micro_n = 500;
  double micro_t = 1.0;
  std::uint64_t seed = 1;
  std::string out_dir;
};

struct InvarianceCaseResult {
  InvarianceCaseSpec spec;
  bool invariant = false;
  bool expected = false;  // from the jump classification
  double max_deviation = 0.0;
  double first_fail_t = -1.0;
};

struct InvarianceResult {
  std::vector<InvarianceCaseResult> cases;
  bool all_as_expected = true;
  bool micro_ran = false;
  double micro_shock_start = 0.0;  // empirical shock location estimates
  double micro_shock_end = 0.0;
  std::string config_hash;
};

InvarianceResult run_invariance(const InvarianceConfig& config);

// ---------------------------------------------------------------------------
// JSON configuration and persistence.
// ---------------------------------------------------------------------------

KappaSweepConfig kappa_sweep_config_from_json(const nlohmann::json& j);
CompareConfig compare_config_from_json(const nlohmann::json& j);
InvarianceConfig invariance_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const KappaSweepResult& result);
nlohmann::json to_json(const ComparisonReport& report);
nlohmann::json to_json(const InvarianceResult& result);

std::string canonical_config_string(const nlohmann::json& j);

// Parses a profile object {"left_density": d, "segments":[{"x":..,"density":..}]}.
hydro::MacroProfile profile_from_json(const nlohmann::json& j);

}  // namespace sb::harness
