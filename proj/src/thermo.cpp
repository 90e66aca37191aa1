#include "cnslab/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cnslab/error.hpp"
#include "cnslab/spectral.hpp"

namespace cns {

PressureLaw::PressureLaw(double a, double gamma) : a_(a), gamma_(gamma) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("PressureLaw: a must be positive");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw InvalidArgument("PressureLaw: gamma must be >= 1");
}

double PressureLaw::pressure(double rho) const { return a_ * std::pow(rho, gamma_); }

double PressureLaw::dpressure(double rho) const {
  if (gamma_ == 1.0) return a_;
  return a_ * gamma_ * std::pow(rho, gamma_ - 1.0);
}

double PressureLaw::potential_energy(double rho) const {
  if (gamma_ == 1.0) {
    const double rlogr = rho > 0.0 ? rho * std::log(rho) : 0.0;
    return a_ * (rlogr + 1.0 - rho);
  }
  return a_ * (std::pow(rho, gamma_) - gamma_ * rho + gamma_ - 1.0) / (gamma_ - 1.0);
}

double PressureLaw::h(double rho) const { return a_ * (gamma_ - 1.0) * std::pow(rho, gamma_); }

double PressureLaw::pressure_square_tail(double rho) const {
  const double q = 2.0 * gamma_ - 1.0;
  return a_ * a_ * (1.0 - std::pow(rho, q)) / q;
}

double PressureLaw::k(double rho) const {
  const double p = pressure(rho);
  return p * p + 0.5 * rho * pressure_square_tail(rho);
}

namespace {

void require_nonnegative(const ScalarField& rho, const char* where) {
  const auto v = rho.values();
  const std::size_t n = rho.grid().n();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] < 0.0 || std::isnan(v[k])) {
      std::ostringstream os;
      os << where << ": density sample " << v[k] << " is negative at (i=" << k % n << ", j=" << k / n << ")";
      throw InvalidArgument(os.str());
    }
  }
}

template <typename F>
ScalarField pointwise(const ScalarField& rho, const char* where, F&& f) {
  require_nonnegative(rho, where);
  ScalarField out(rho.grid_ptr());
  for (std::size_t k = 0; k < rho.size(); ++k) out[k] = f(rho[k]);
  return out;
}

}  // namespace

ScalarField pressure(const ScalarField& rho, const PressureLaw& law) {
  return pointwise(rho, "pressure", [&](double r) { return law.pressure(r); });
}

ScalarField potential_energy(const ScalarField& rho, const PressureLaw& law) {
  return pointwise(rho, "potential_energy", [&](double r) { return law.potential_energy(r); });
}

ScalarField h_of(const ScalarField& rho, const PressureLaw& law) {
  return pointwise(rho, "h_of", [&](double r) { return law.h(r); });
}

ScalarField k_of(const ScalarField& rho, const PressureLaw& law) {
  return pointwise(rho, "k_of", [&](double r) { return law.k(r); });
}

ThermoScalars thermo_scalars(const ScalarField& rho, const PressureLaw& law) {
  const auto p = pressure(rho, law);
  ThermoScalars s;
  s.p_star = p.max();
  s.p_bar = p.mean();
  s.e_total = potential_energy(rho, law).mean();
  const auto h = h_of(rho, law);
  for (double v : h.values()) s.h_sup = std::max(s.h_sup, std::abs(v));
  return s;
}

ViscousFlux effective_viscous_flux(const ScalarField& rho, const VectorField& v, const PressureLaw& law,
                                   double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("effective_viscous_flux: nu must be positive");
  require_same_grid(rho.grid(), v.grid(), "effective_viscous_flux");
  const auto p = pressure(rho, law);
  ScalarField g = nu * divergence(v) - p;
  const double g_mean = g.mean();
  const double p_mean = p.mean();
  if (std::abs(g_mean + p_mean) > 1e-10 * std::max(1.0, std::abs(p_mean))) {
    std::ostringstream os;
    os << "effective_viscous_flux: mean(G) = " << g_mean << " but -mean(P) = " << -p_mean;
    throw AssertionFailure(os.str());
  }
  ScalarField g_tilde = g;
  g_tilde += -g_mean;
  return {std::move(g), std::move(g_tilde)};
}

AdmissibilityReport check_admissible(double a, double gamma) {
  AdmissibilityReport r;
  if (!(a > 0.0) || !std::isfinite(a)) {
    r.reason = "coefficient a must be positive";
    return r;
  }
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) {
    r.reason = "exponent gamma must be >= 1 (P(rho)/rho is decreasing otherwise)";
  }
  // Sampled monotonicity of P(ρ)/ρ = a ρ^{γ-1} on a log grid.
  constexpr std::size_t kSamples = 241;
  double prev = 0.0;
  r.min_increment = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < kSamples; ++s) {
    const double rho = std::pow(10.0, -6.0 + 12.0 * static_cast<double>(s) / (kSamples - 1));
    const double ratio = a * std::pow(rho, gamma - 1.0);
    if (s > 0) r.min_increment = std::min(r.min_increment, ratio - prev);
    prev = ratio;
  }
  r.samples = kSamples;
  if (r.reason.empty() && r.min_increment < 0.0) r.reason = "P(rho)/rho decreases on the sample grid";
  r.admissible = r.reason.empty();
  if (r.admissible) r.reason = "ok";
  return r;
}

}  // namespace cns
