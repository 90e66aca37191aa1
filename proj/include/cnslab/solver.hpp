#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "cnslab/error.hpp"
#include "cnslab/field.hpp"
#include "cnslab/thermo.hpp"

namespace cns {

enum class Limiter { None, Minmod };

Limiter parse_limiter(const std::string& name);
std::string to_string(Limiter l);

/// Parameters of one integration. ν = λ + 2μ is derived.
struct SolverConfig {
  double mu = 1.0;
  double lambda = 0.0;
  PressureLaw law{1.0, 1.0};
  double cfl = 0.4;
  double dt_max = 1e-2;
  Limiter limiter = Limiter::Minmod;
  double t_end = 1.0;
  /// Density below which the pressure acceleration is dropped in v̇.
  double rho_floor = 1e-6;
  /// Relative residual target of the implicit viscous solve.
  double solver_tolerance = 1e-10;
  int solver_max_iterations = 2000;

  double nu() const { return lambda + 2.0 * mu; }
  /// Throws InvalidArgument unless μ > 0, ν > 0, cfl in (0,1], dt_max > 0.
  void validate() const;
};

struct FluidState {
  ScalarField rho;
  VectorField v;
  double t = 0.0;

  double mass() const { return rho.mean(); }
  /// ∫ρv.
  std::pair<double, double> momentum() const;
};

struct StepReport {
  double dt = 0.0;
  double max_speed = 0.0;
  double sup_rho = 0.0;
  double mass_drift = 0.0;      ///< relative change of ∫ρ over the step
  double momentum_drift = 0.0;  ///< |Δ∫ρv| over the step
  int solver_iterations = 0;    ///< total iterations of the implicit solves
  int halvings = 0;
};

/// Raised by the transport when max|v| dt / h exceeds 1.
class CflViolation : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// min(dt_max, cfl h / (max|v| + c_s)) with c_s = sqrt(max P'(ρ)); floored at 1e-12 dt_max.
double compute_dt(const FluidState& state, const SolverConfig& config);

/// Lv = μΔv + (λ+μ)∇div v, spectrally.
VectorField viscous_operator(const VectorField& v, double mu, double lambda);

struct TransportResult {
  ScalarField rho;
  VectorField momentum;
};

/// Conservative finite-volume transport of ρ and of the momentum m by the frozen
/// velocity u over dt: Strang-split x(dt/2) y(dt) x(dt/2), face velocities by
/// spectral interpolation, MUSCL-minmod reconstruction with Heun stages
/// (Limiter::Minmod) or first-order upwind (Limiter::None). m is carried with
/// the same reconstruction so that m = cρ stays cρ for constant c.
TransportResult transport(const ScalarField& rho, const VectorField& momentum, const VectorField& u, double dt,
                          Limiter limiter);

/// ρ' from ρ_t + div(ρv) = 0 with frozen v (see transport).
ScalarField advance_density(const ScalarField& rho, const VectorField& v, double dt,
                            Limiter limiter = Limiter::Minmod);

struct MomentumSolve {
  VectorField v;
  int iterations = 0;
};

/// Integrates ρ v_t = Lv - ∇P(ρ) over dt with ρ frozen, from momentum m = ρv,
/// with the two-stage L-stable SDIRK scheme. Each stage solves
/// (ρ - τL)V = r by conjugate gradients, preconditioned with the exact Galerkin
/// block on the low Fourier modes and the constant-density per-mode inverse on
/// the rest, then shifts V by a constant so that ∫ρV equals ∫r exactly.
MomentumSolve advance_momentum(const ScalarField& rho, const VectorField& momentum, const SolverConfig& config,
                               double dt, const VectorField* initial_guess = nullptr);
/// Convenience form starting from the state's own velocity.
VectorField advance_momentum(const FluidState& state, const SolverConfig& config, double dt);

/// One step: momentum(dt/2) → transport(dt) with the midpoint velocity
/// v - (dt/2) v·∇v → momentum(dt/2). A CFL violation halves dt; three
/// consecutive halvings abort with NumericalFailure.
std::pair<FluidState, StepReport> step(const FluidState& state, const SolverConfig& config);

/// Integrates from state to t_end, calling `observer` after every step.
FluidState integrate(FluidState state, const SolverConfig& config, double t_end,
                     const std::function<void(const FluidState&, const StepReport&)>& observer = {});

}  // namespace cns
