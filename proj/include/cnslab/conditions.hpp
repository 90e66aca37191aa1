#pragma once

#include <string>
#include <vector>

#include "cnslab/field.hpp"
#include "cnslab/thermo.hpp"

namespace cns {

/// ν₀ = max(μ, C√(ρ* log(e+ρ*)/μ) P(ρ*), P(ρ*)/2, 4√(ρ*(1+h(ρ*)))).
double nu_threshold(double rho_star, double mu, const PressureLaw& law, double c_const = 1.0);

struct ConditionRow {
  std::string family;  ///< "2d" (large-ν conditions) or "3d"
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct ConditionTable {
  double nu = 0.0;
  double mu = 0.0;
  double rho_star = 0.0;
  double p_star = 0.0;
  double h_sup = 0.0;
  double c_const = 1.0;
  double nu0 = 0.0;
  std::vector<ConditionRow> rows;

  /// True when every row of the given family passes.
  bool all_pass(const std::string& family = "2d") const;
};

/// Evaluates the four two-dimensional conditions
///   ν ≥ μ,  ν² ≥ 2Cμ⁻¹ρ* log(e+ρ*) (P*)²,  ν ≥ 8ρ*(2ν⁻¹‖h‖∞ + 1),  ν ≥ P*/2
/// and the three-dimensional pair
///   ν ≥ 8(ρ*)³P*/μ,  ν² ≥ 8‖h‖∞ρ*
/// with P* = P(ρ*) and ‖h‖∞ = h(ρ*).
ConditionTable evaluate_conditions(double nu, double mu, double rho_star, const PressureLaw& law,
                                   double c_const = 1.0);

struct SmallnessReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  ///< lhs / rhs
  bool pass = false;
};

/// μ‖∇𝒫v₀‖₂² + ν⁻¹‖P̃₀‖₂² + ν‖div v₀‖₂² ≤ c₀ μ⁵ / ((ρ*)³ E₀), evaluated on
/// two-dimensional fields.
SmallnessReport smallness_3d_check(const ScalarField& rho0, const VectorField& v0, const PressureLaw& law, double mu,
                                   double nu, double rho_star, double e0, double c0 = 1.0);

}  // namespace cns
