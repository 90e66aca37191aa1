#include "cnslab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cnslab/error.hpp"
#include "cnslab/spectral.hpp"

namespace cns {

double nu_threshold(double rho_star, double mu, const PressureLaw& law, double c_const) {
  if (!(rho_star > 0.0) || !(mu > 0.0)) throw InvalidArgument("nu_threshold: rho_star and mu must be positive");
  const double p = law.pressure(rho_star);
  const double log_term = std::log(std::numbers::e + rho_star);
  return std::max({mu, c_const * std::sqrt(rho_star * log_term / mu) * p, 0.5 * p,
                   4.0 * std::sqrt(rho_star * (1.0 + law.h(rho_star)))});
}

bool ConditionTable::all_pass(const std::string& family) const {
  return std::all_of(rows.begin(), rows.end(),
                     [&](const ConditionRow& r) { return r.family != family || r.pass; });
}

ConditionTable evaluate_conditions(double nu, double mu, double rho_star, const PressureLaw& law, double c_const) {
  if (!(nu > 0.0)) throw InvalidArgument("evaluate_conditions: nu must be positive");
  ConditionTable t;
  t.nu = nu;
  t.mu = mu;
  t.rho_star = rho_star;
  t.c_const = c_const;
  t.p_star = law.pressure(rho_star);
  t.h_sup = std::abs(law.h(rho_star));
  t.nu0 = nu_threshold(rho_star, mu, law, c_const);
  const double ps = t.p_star;
  const double log_term = std::log(std::numbers::e + rho_star);
  auto add = [&](const char* family, const char* name, double lhs, double rhs) {
    t.rows.push_back({family, name, lhs, rhs, lhs >= rhs});
  };
  add("2d", "nu >= mu", nu, mu);
  add("2d", "nu^2 >= 2C rho* log(e+rho*) P*^2 / mu", nu * nu, 2.0 * c_const * rho_star * log_term * ps * ps / mu);
  add("2d", "nu >= 8 rho* (2 |h|_inf / nu + 1)", nu, 8.0 * rho_star * (2.0 * t.h_sup / nu + 1.0));
  add("2d", "nu >= P*/2", nu, 0.5 * ps);
  add("3d", "nu >= 8 rho*^3 P* / mu", nu, 8.0 * rho_star * rho_star * rho_star * ps / mu);
  add("3d", "nu^2 >= 8 |h|_inf rho*", nu * nu, 8.0 * t.h_sup * rho_star);
  return t;
}

SmallnessReport smallness_3d_check(const ScalarField& rho0, const VectorField& v0, const PressureLaw& law, double mu,
                                   double nu, double rho_star, double e0, double c0) {
  if (!(mu > 0.0 && nu > 0.0 && rho_star > 0.0 && e0 > 0.0 && c0 > 0.0)) {
    throw InvalidArgument("smallness_3d_check: parameters must be positive");
  }
  const auto pv = leray_project(v0).solenoidal;
  const double grad_pv = gradient_l2(pv);
  ScalarField p_tilde = pressure(rho0, law);
  p_tilde += -p_tilde.mean();
  const double pt = norm(p_tilde, Norm::L(2.0));
  const double dv = norm(divergence(v0), Norm::L(2.0));
  SmallnessReport r;
  r.lhs = mu * grad_pv * grad_pv + pt * pt / nu + nu * dv * dv;
  r.rhs = c0 * std::pow(mu, 5) / (rho_star * rho_star * rho_star * e0);
  r.ratio = r.lhs / r.rhs;
  r.pass = r.lhs <= r.rhs;
  return r;
}

}  // namespace cns
