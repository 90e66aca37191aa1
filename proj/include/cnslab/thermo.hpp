#pragma once

#include <string>
#include <utility>

#include "cnslab/field.hpp"

namespace cns {

/// Barotropic pressure law P(ρ) = a ρ^γ with a > 0, γ >= 1.
class PressureLaw {
 public:
  /// Throws InvalidArgument unless a > 0 and γ >= 1.
  PressureLaw(double a, double gamma);

  double a() const { return a_; }
  double gamma() const { return gamma_; }

  double pressure(double rho) const;
  double dpressure(double rho) const;
  /// Potential energy normalized so that e(1) = e'(1) = 0; e(0) = a.
  double potential_energy(double rho) const;
  /// h = ρ P'(ρ) - P(ρ) = a (γ - 1) ρ^γ.
  double h(double rho) const;
  /// k = P² - (ρ/2) ∫_1^ρ P²(s)/s² ds, closed form; k(1) = P(1)².
  double k(double rho) const;
  /// ∫_ρ^1 P²(τ)/τ² dτ, closed form (finite at ρ = 0 for γ >= 1).
  double pressure_square_tail(double rho) const;

 private:
  double a_;
  double gamma_;
};

/// Pointwise maps; all throw InvalidArgument naming the first negative sample.
ScalarField pressure(const ScalarField& rho, const PressureLaw& law);
ScalarField potential_energy(const ScalarField& rho, const PressureLaw& law);
ScalarField h_of(const ScalarField& rho, const PressureLaw& law);
ScalarField k_of(const ScalarField& rho, const PressureLaw& law);

struct ThermoScalars {
  double p_star = 0.0;   ///< sup P(ρ)
  double p_bar = 0.0;    ///< mean P(ρ)
  double e_total = 0.0;  ///< ∫ e(ρ)
  double h_sup = 0.0;    ///< sup |h(ρ)|
};

ThermoScalars thermo_scalars(const ScalarField& rho, const PressureLaw& law);

struct ViscousFlux {
  ScalarField g;        ///< G = ν div v - P(ρ)
  ScalarField g_tilde;  ///< G - mean(G)
};

/// Effective viscous flux. Throws AssertionFailure if mean(G) != -mean(P)
/// beyond 1e-10 (div v has zero mean spectrally, so this cannot happen for
/// a consistent state).
ViscousFlux effective_viscous_flux(const ScalarField& rho, const VectorField& v, const PressureLaw& law,
                                   double nu);

struct AdmissibilityReport {
  bool admissible = false;
  std::string reason;
  /// Smallest increment of ρ^{-1}P(ρ) between consecutive samples of the log grid.
  double min_increment = 0.0;
  std::size_t samples = 0;
};

/// P nonnegative, C^1 and ρ ↦ P(ρ)/ρ nondecreasing, checked for the γ-law family
/// by parameter test plus sampling on a logarithmic grid of [1e-6, 1e6].
AdmissibilityReport check_admissible(double a, double gamma);

}  // namespace cns
