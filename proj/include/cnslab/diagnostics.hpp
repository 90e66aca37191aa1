#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cnslab/conditions.hpp"
#include "cnslab/field.hpp"
#include "cnslab/solver.hpp"
#include "cnslab/thermo.hpp"

namespace cns {

/// E = ∫(½ρ|v|² + e(ρ)).
double total_energy(const FluidState& state, const PressureLaw& law);

struct ModifiedEnergy {
  double value = 0.0;        ///< 𝓔
  double lower_bound = 0.0;  ///< ½∫(ρ|v|² + μ|∇𝒫v|² + ν⁻¹(G̃² + P̃²) + 2e)
  double margin() const { return value - lower_bound; }
};

/// 𝓔 = ½∫(ρ|v|² + μ|∇𝒫v|² + ν⁻¹(G̃² + P̃² + ρ∫_ρ^1 P²(τ)/τ² dτ + (P* - P(1))P(1)) + 4e),
/// together with the lower bound it dominates once ν ≥ P*/2.
ModifiedEnergy modified_energy(const FluidState& state, const PressureLaw& law, double mu, double nu);

struct Dissipation {
  /// ¼‖√ρ v̇‖², μ²/(4ρ*)‖∇²𝒫v‖², 1/(8ρ*)‖∇G‖², 1/(4ν)‖P̃‖², ½∫(ν+h)(div v)², μ/2‖∇v‖².
  std::array<double, 6> terms{};
  double total() const;
};

Dissipation dissipation_functional(const FluidState& state, const PressureLaw& law, double nu, double mu,
                                   double rho_star, const VectorField& vdot);

/// v̇ = (μΔv + (λ+μ)∇div v - ∇P)/ρ where ρ ≥ rho_floor and 0 elsewhere, so that
/// ρv̇ = Lv - ∇P on the non-vacuum cells. ∇P uses the dealiased pressure as in
/// the solver.
VectorField material_derivative(const FluidState& state, const SolverConfig& config);

struct DampedMode {
  ScalarField f;              ///< log max(ρ, 1e-12) - ν⁻¹(-Δ)⁻¹div(ρv)
  double f_plus_sup = 0.0;    ///< sup max(F, 0) over cells with ρ ≥ 1e-12
  std::size_t vacuum_cells = 0;
};

inline constexpr double kLogFloor = 1e-12;

DampedMode damped_mode(const FluidState& state, double nu);

/// 2 e^{(γ-1)E₀/γ} ρ₀*.
double density_bound(double gamma, double e0, double rho0_star);

struct DensityBoundCheck {
  bool pass = true;
  double bound = 0.0;
  double worst_margin = 0.0;     ///< min over records of bound - sup ρ
  std::vector<double> margins;
};

DensityBoundCheck density_bound_check(const std::vector<double>& sup_rho_series, double gamma, double e0,
                                      double rho0_star);

struct Commutator {
  VectorField field;  ///< Σ_j [vʲ R_ij(ρvⁱ) - R_ij(vʲρvⁱ)], R_ij = (-Δ)⁻¹∂_i∂_j
  double sup = 0.0;   ///< grid max of |field|
};

Commutator commutator_field(const FluidState& state);

/// (∫|f|^q dt)^{1/q} by the trapezoid rule over (t, f). A single sample
/// stands for an interval of length single_dt.
double time_lq_norm(const std::vector<double>& t, const std::vector<double>& f, double q, double single_dt = 0.0);

struct DifferenceMetrics {
  double t = 0.0;
  double delta_rho_hm1 = 0.0;     ///< ‖ρ_A - ρ_B‖_{Ḣ⁻¹}
  double delta_v_weighted = 0.0;  ///< ‖√ρ_A (v_A - v_B)‖₂
};

/// Throws InvalidArgument if the masses differ by more than 1e-9.
DifferenceMetrics difference_metrics(const FluidState& a, const FluidState& b);

/// Relative gap of μ‖∇v‖² + (λ+μ)‖div v‖² = μ‖∇𝒫v‖² + ν‖div v‖².
double elliptic_identity_gap(const VectorField& v, double mu, double lambda);

struct DiagnosticsRecord {
  double t = 0.0;
  double mass = 0.0;
  double mom_x = 0.0;
  double mom_y = 0.0;
  double energy = 0.0;
  double cal_e = 0.0;
  double int_d = 0.0;
  double sup_rho = 0.0;
  double rho_bound_margin = 0.0;
  double sup_fplus = 0.0;
  double div_l2 = 0.0;
  double div_linf = 0.0;
  double grad_pv_l2 = 0.0;
  double grad_pv_linf = 0.0;
  double gt_l2 = 0.0;
  double pt_l2 = 0.0;
  double rho_vdot_l2 = 0.0;
  double wt_rho_vdot_l2 = 0.0;
  double wt_grad_vdot = 0.0;      ///< ‖√t ∇v̇‖₂ at this instant
  double wt_grad_vdot_acc = 0.0;  ///< ∫₀ᵗ τ‖∇v̇‖₂² dτ
  double energy_residual = 0.0;

  // Identity checks evaluated on this record.
  double elliptic_gap = 0.0;
  double equiv_e_margin = 0.0;
  double div_energy_ratio = 0.0;  ///< ν‖div v‖₂² / (4𝓔)
  bool conditions_pass = false;
  double commutator_sup = 0.0;
};

/// Column names of the CSV, in order.
const std::vector<std::string>& csv_columns();
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const DiagnosticsRecord& r);
void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records);

struct MonitorOptions {
  /// ρ* used in 𝓓 and in the ν-conditions; 0 selects the density bound 2e^{(γ-1)E₀/γ}ρ₀*.
  double rho_star = 0.0;
  double c_const = 1.0;
  /// Emit a record every `record_every` steps (the final state is always recorded).
  int record_every = 1;
};

/// Accumulates the time integrals on every solver step and emits records.
class DiagnosticsMonitor {
 public:
  DiagnosticsMonitor(const FluidState& initial, const SolverConfig& config, MonitorOptions options = {});

  /// Feed the state after each step. Returns true when a record was emitted.
  bool observe(const FluidState& state, bool force_record = false);

  const std::vector<DiagnosticsRecord>& records() const { return records_; }
  double e0() const { return e0_; }
  double rho0_star() const { return rho0_star_; }
  double rho_star() const { return rho_star_; }
  double bound() const { return bound_; }
  const ConditionTable& conditions() const { return conditions_; }

  /// Time series collected on every step (not only on records).
  const std::vector<double>& step_times() const { return step_t_; }
  const std::vector<double>& step_div_l2() const { return step_div_l2_; }
  const std::vector<double>& step_div_linf() const { return step_div_linf_; }
  const std::vector<double>& step_grad_pv_linf() const { return step_grad_pv_linf_; }
  const std::vector<double>& step_sup_rho() const { return step_sup_rho_; }

 private:
  struct Instant {
    double t = 0.0;
    double dissipation_rate = 0.0;  // μ‖∇𝒫v‖² + ν‖div v‖²
    double d_total = 0.0;
    double t_grad_vdot_sq = 0.0;    // t‖∇v̇‖²
  };
  DiagnosticsRecord evaluate(const FluidState& state, const Instant& now) const;
  Instant instant(const FluidState& state, VectorField* vdot_out, Dissipation* d_out) const;

  SolverConfig config_;
  MonitorOptions options_;
  double e0_ = 0.0;
  double rho0_star_ = 0.0;
  double rho_star_ = 0.0;
  double bound_ = 0.0;
  ConditionTable conditions_;
  Instant last_;
  double int_dissipation_rate_ = 0.0;
  double int_d_ = 0.0;
  double int_t_grad_vdot_ = 0.0;
  long steps_ = 0;
  std::vector<DiagnosticsRecord> records_;
  std::vector<double> step_t_, step_div_l2_, step_div_linf_, step_grad_pv_linf_, step_sup_rho_;
};

}  // namespace cns
