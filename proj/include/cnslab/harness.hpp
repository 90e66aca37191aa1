#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnslab/conditions.hpp"
#include "cnslab/diagnostics.hpp"
#include "cnslab/flow.hpp"
#include "cnslab/prep.hpp"
#include "cnslab/solver.hpp"

namespace cns {

inline constexpr const char* kVersion = "0.3.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// Experiment configuration. Text form (sections and keys):
///
///   [grid]      n
///   [fluid]     mu, lambda | nu, a, gamma
///   [initial]   density = <shape>, density.<param> = ..., velocity = <shape>,
///               velocity.<param> = ..., density_file, velocity_x_file,
///               velocity_y_file (CNSF), mollify, clamp, K
///   [run]       t_end, cfl, dt_max, record_interval, snapshot_interval,
///               limiter, solver_tolerance, rho_floor, seed, out
///   [constants] file, C, c0, rho_star, eps_vac
struct RunConfig {
  std::size_t n = 64;
  double mu = 1.0;
  double lambda = 0.0;
  PressureLaw law{1.0, 1.0};

  ShapeSpec density{"disc", {{"radius", 0.25}}};
  ShapeSpec velocity{"taylor_green", {{"amplitude", 1.0}}};
  std::string density_file;
  std::string velocity_x_file;
  std::string velocity_y_file;
  double mollify = 0.0;
  double clamp = 0.0;
  /// Target ‖div v₀‖₂√ν; negative leaves the velocity as built.
  double k_target = -1.0;

  double t_end = 1.0;
  double cfl = 0.4;
  double dt_max = 1e-2;
  /// Time between diagnostics records; 0 records every step.
  double record_interval = 0.0;
  /// Time between snapshots; 0 writes only the initial and final state.
  double snapshot_interval = 0.0;
  Limiter limiter = Limiter::Minmod;
  double solver_tolerance = 1e-10;
  double rho_floor = 1e-6;
  std::uint64_t seed = 0;
  std::string out = "out";

  std::string constants_file;
  double c_const = 1.0;
  double c0 = 1.0;
  /// 0 selects the density bound.
  double rho_star = 0.0;
  /// Numerical vacuum threshold relative to ρ₀*.
  double eps_vac = 1e-3;

  double nu() const { return lambda + 2.0 * mu; }
  void set_nu(double nu) { lambda = nu - 2.0 * mu; }

  static RunConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  /// Canonical text form; parse(canonical()) reproduces the config.
  std::string canonical() const;
  std::uint64_t hash() const { return fnv1a(canonical()); }
  nlohmann::json to_json() const;
  SolverConfig solver() const;
  void validate() const;
};

/// Builds normalized initial data: shape or snapshot, optional mollification,
/// unit mass and zero momentum, optional clamp, optional K rescaling of the
/// gradient part of v₀.
InitialData build_initial_data(const RunConfig& config);

struct RunOutput {
  explicit RunOutput(FluidState s) : final_state(std::move(s)) {}

  FluidState final_state;
  std::vector<DiagnosticsRecord> records;
  double e0 = 0.0;
  double rho0_star = 0.0;
  double rho_star = 0.0;
  double bound = 0.0;
  ConditionTable conditions;
  std::vector<double> step_times;
  std::vector<double> step_div_l2;
  std::vector<double> step_div_linf;
  std::vector<double> step_sup_rho;
  double mass_drift = 0.0;      ///< max relative |∫ρ(t) - ∫ρ₀|
  double momentum_drift = 0.0;  ///< max |∫ρv(t) - ∫ρ₀v₀|
  long steps = 0;
  double wall_seconds = 0.0;
};

struct RunOptions {
  bool write_outputs = true;
  bool quiet = true;
  /// Called after the initial state and after every step.
  std::function<void(const FluidState&)> observer;
  /// Times at which the state is hit exactly and passed to `sample`.
  std::vector<double> sample_times;
  std::function<void(const FluidState&)> sample;
};

/// prep → solve → diagnostics. With write_outputs, fills config.out with
/// diagnostics.csv, snapshots/*.cnsf and manifest.json; a failure writes the
/// manifest with an error record and rethrows.
RunOutput run(const RunConfig& config, const RunOptions& options = {});
RunOutput run(const RunConfig& config, const InitialData& data, const RunOptions& options = {});

// ------------------------------------------------------------------- sweep

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;   ///< 95% interval on the slope
  double ci_high = 0.0;
};

/// Least-squares fit of log y against log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct SweepMember {
  double nu = 0.0;
  bool ok = false;
  std::string error;
  bool conditions_pass = false;
  double div_l2l2 = 0.0;    ///< ‖div v‖_{L₂(0,T;L₂)}
  double div_linfl2 = 0.0;  ///< ‖div v‖_{L∞(0,T;L₂)}
  double div_lql_inf = 0.0; ///< ‖div v‖_{L_{2-ε}(0,T;L∞)}
  double wall_seconds = 0.0;
};

struct SweepResult {
  std::vector<double> nu;
  double epsilon = 0.5;
  std::vector<SweepMember> members;
  SlopeFit slope_l2l2, slope_linfl2, slope_lqlinf;
  /// ‖v^{ν_{i+1}} - v^{ν_i}‖_{L₂(0,T;L₂)}, one per consecutive pair.
  std::vector<double> cauchy;
  bool complete() const;
  bool cauchy_decreasing() const;
  nlohmann::json to_json() const;
};

/// Runs the family from identical initial data (ν list strictly increasing,
/// at least three entries), one member per worker.
SweepResult sweep_nu(const RunConfig& base, const std::vector<double>& nu, double epsilon = 0.5,
                     std::size_t cauchy_samples = 41);

// ------------------------------------------------------------- perturbation

struct PerturbSeries {
  double eta = 0.0;
  std::vector<DifferenceMetrics> metrics;
  double sup_weighted_rho = 0.0;  ///< sup_t t^{-1/2}‖δρ‖_{Ḣ⁻¹}
  double terminal_v = 0.0;        ///< ‖√ρ δv‖₂ at t_end
};

struct PerturbResult {
  double gamma = 1.0;
  std::vector<PerturbSeries> series;
  SlopeFit slope_v, slope_rho;
  nlohmann::json to_json() const;
};

/// Base run against runs from v₀ + η·w, w a fixed band-limited field with
/// ‖w‖₂ = 1 and ∫ρ₀w = 0 drawn from config.seed.
PerturbResult perturb_experiment(const RunConfig& config, const std::vector<double>& etas,
                                 std::size_t samples = 21);

// ------------------------------------------------------------------ vacuum

struct TrackOptions {
  int subdivision = 4;            ///< vacuum seeds per cell side
  std::size_t lattice = 32;       ///< trajectory-density seeds per side
  double compare_interval = 0.0;  ///< 0 compares at the final time only
  std::size_t ll_pairs = 10000;
  bool write_outputs = true;
  bool quiet = true;
};

struct VacuumRunReport {
  double eps = 0.0;
  bool vacuum_present = false;
  std::vector<VacuumComparison> comparisons;
  /// Per step: time, log-Lipschitz bound and α_t.
  std::vector<double> times, ll_bound, alpha;
  /// At comparison times: sampled log-Lipschitz estimate.
  std::vector<double> ll_sampled;
  std::vector<TrajectoryDensity::Residual> trajectory;
  std::size_t trajectory_seeds = 0;
  std::size_t trajectory_skipped = 0;
  /// α₀ = 1, α_t in (0,1] and nonincreasing.
  bool alpha_valid() const;
  nlohmann::json to_json() const;
};

/// Runs the configuration while carrying the vacuum seeds, the trajectory
/// seeds and the log-Lipschitz series along. With write_outputs, also writes
/// vacuum.json and, per comparison, CNSF indicators and boundary CSVs under
/// config.out/vacuum.
VacuumRunReport track_vacuum(const RunConfig& config, const TrackOptions& options = {});

// -------------------------------------------------------------- conditions

struct ConditionsReport {
  ConditionTable table;
  double e0 = 0.0;
  double rho0_star = 0.0;
  SmallnessReport smallness;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

ConditionsReport check_conditions(const RunConfig& config);

nlohmann::json to_json(const ConditionTable& t);

}  // namespace cns
