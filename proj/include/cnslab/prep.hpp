#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cnslab/field.hpp"

namespace cns {

/// Normalized initial data: ∫ρ₀ = 1 and ∫ρ₀v₀ = 0.
struct InitialData {
  ScalarField rho;
  VectorField v;
  std::string provenance;
};

/// Rescales ρ₀ to unit mass and removes the mean momentum by a Galilean shift
/// v₀ -> v₀ - (∫ρ₀v₀)/(∫ρ₀). Throws InvalidArgument for zero (or negative) mass.
InitialData normalize_data(const ScalarField& rho0, const VectorField& v0, std::string provenance = {});

struct ClampResult {
  ScalarField rho;
  double xi = 1.0;  ///< upper cap chosen so that the mass is exactly 1
};

/// min(ξ, max(ρ₀, δ)) with ξ >= 1 found by bisection so that ∫ = 1.
/// Requires 0 < δ < 1 and ∫ρ₀ = 1 (within 1e-10).
ClampResult clamp_and_renormalize(const ScalarField& rho0, double delta);

/// Periodic convolution with the Gaussian of standard deviation δ, applied as
/// the multiplier exp(-2π²δ²|k|²). Keeps the mean exactly; keeps min/max up to
/// ~1e-14 once δ >= 3h (the discrete kernel is then positive to round-off).
ScalarField mollify(const ScalarField& f, double delta);

/// Named shape with numeric parameters, as written in the [initial] config block.
struct ShapeSpec {
  std::string name;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const;
};

/// Density library: "constant", "disc", "square", "star", "smooth", or a
/// path handled by the harness. Indicators take the value 1 inside the set;
/// normalization to unit mass happens in normalize_data.
///   disc:   cx, cy, radius
///   square: cx, cy, half_side
///   star:   cx, cy, radius, amplitude, lobes   (r(θ) = radius (1 + amplitude cos(lobes θ)))
///   smooth: amplitude, mode                    (1 + amplitude cos(2π mode x) cos(2π mode y))
///   constant: value
ScalarField make_density(const GridPtr& grid, const ShapeSpec& spec);

/// Velocity library:
///   zero
///   constant:     ux, uy
///   taylor_green: amplitude   (solenoidal)
///   shear:        amplitude, mode   (amplitude sin(2π mode y), 0)
///   random:       amplitude, kmax, slope, K, nu, seed
///     band-limited field with random phases and |k|^-slope envelope; the
///     solenoidal part has ||∇Pv||_2 = amplitude and the gradient part is
///     scaled so that ||div v||_2 = K / sqrt(nu) (K = 0 gives a solenoidal field).
VectorField make_velocity(const GridPtr& grid, const ShapeSpec& spec);

/// Random band-limited scalar field with random phases and amplitude envelope
/// |k|^-slope for 1 <= |k| <= kmax; zero mean, unit L2 norm.
ScalarField random_band_limited(const GridPtr& grid, int kmax, double slope, std::uint64_t seed);

}  // namespace cns
