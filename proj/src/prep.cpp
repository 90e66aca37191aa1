#include "cnslab/prep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cnslab/error.hpp"
#include "cnslab/spectral.hpp"

namespace cns {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periodic displacement in [-1/2, 1/2).
double wrap_delta(double d) { return d - std::floor(d + 0.5); }

}  // namespace

InitialData normalize_data(const ScalarField& rho0, const VectorField& v0, std::string provenance) {
  require_same_grid(rho0.grid(), v0.grid(), "normalize_data");
  const double mass = rho0.mean();
  if (!(mass > 0.0)) {
    std::ostringstream os;
    os << "normalize_data: total mass must be positive, got " << mass;
    throw InvalidArgument(os.str());
  }
  ScalarField rho = rho0 * (1.0 / mass);
  const double shift_x = inner(rho, v0.x);
  const double shift_y = inner(rho, v0.y);
  VectorField v = v0;
  v.x += -shift_x;
  v.y += -shift_y;
  return {std::move(rho), std::move(v), std::move(provenance)};
}

ClampResult clamp_and_renormalize(const ScalarField& rho0, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("clamp_and_renormalize: delta must lie in (0,1)");
  if (std::abs(rho0.mean() - 1.0) > 1e-10) {
    throw InvalidArgument("clamp_and_renormalize: density must have unit mass");
  }
  const ScalarField floored = rho0.map([delta](double r) { return std::max(r, delta); });
  auto mass_at = [&](double xi) {
    long double s = 0.0L;
    for (double r : floored.values()) s += std::min(xi, r);
    return static_cast<double>(s / static_cast<long double>(floored.size()));
  };
  double lo = 1.0;
  double hi = std::max(1.0, floored.max());
  if (mass_at(lo) > 1.0 + 1e-12 || mass_at(hi) < 1.0 - 1e-12) {
    throw NumericalFailure("clamp_and_renormalize: no admissible cap in [1, sup max(rho0, delta)]");
  }
  double xi = hi;
  if (std::abs(mass_at(lo) - 1.0) <= 1e-15) {
    xi = lo;
  } else {
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (mass_at(mid) < 1.0 ? lo : hi) = mid;
    }
    xi = std::abs(mass_at(lo) - 1.0) < std::abs(mass_at(hi) - 1.0) ? lo : hi;
  }
  return {floored.map([xi](double r) { return std::min(xi, r); }), xi};
}

ScalarField mollify(const ScalarField& f, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("mollify: delta must be positive");
  const double c = 2.0 * std::numbers::pi * std::numbers::pi * delta * delta;
  return apply_multiplier(f, [c](int kx, int ky) {
    return Complex(std::exp(-c * static_cast<double>(kx * kx + ky * ky)), 0.0);
  });
}

double ShapeSpec::get(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

ScalarField make_density(const GridPtr& grid, const ShapeSpec& spec) {
  const double cx = spec.get("cx", 0.5);
  const double cy = spec.get("cy", 0.5);
  if (spec.name == "constant") return ScalarField(grid, spec.get("value", 1.0));
  if (spec.name == "disc") {
    const double r = spec.get("radius", 0.25);
    return ScalarField::sample(grid, [=](double x, double y) {
      return std::hypot(wrap_delta(x - cx), wrap_delta(y - cy)) < r ? 1.0 : 0.0;
    });
  }
  if (spec.name == "square") {
    const double s = spec.get("half_side", 0.25);
    return ScalarField::sample(grid, [=](double x, double y) {
      return (std::abs(wrap_delta(x - cx)) < s && std::abs(wrap_delta(y - cy)) < s) ? 1.0 : 0.0;
    });
  }
  if (spec.name == "star") {
    const double r = spec.get("radius", 0.25);
    const double amp = spec.get("amplitude", 0.3);
    const double lobes = spec.get("lobes", 5.0);
    if (!(amp >= 0.0 && amp < 1.0)) throw InvalidArgument("star: amplitude must lie in [0,1)");
    return ScalarField::sample(grid, [=](double x, double y) {
      const double dx = wrap_delta(x - cx);
      const double dy = wrap_delta(y - cy);
      const double theta = std::atan2(dy, dx);
      return std::hypot(dx, dy) < r * (1.0 + amp * std::cos(lobes * theta)) ? 1.0 : 0.0;
    });
  }
  if (spec.name == "smooth") {
    const double amp = spec.get("amplitude", 0.3);
    const double m = spec.get("mode", 1.0);
    if (!(std::abs(amp) < 1.0)) throw InvalidArgument("smooth: |amplitude| must be < 1");
    return ScalarField::sample(grid, [=](double x, double y) {
      return 1.0 + amp * std::cos(kTwoPi * m * x) * std::cos(kTwoPi * m * y);
    });
  }
  throw InvalidArgument("make_density: unknown shape '" + spec.name + "'");
}

ScalarField random_band_limited(const GridPtr& grid, int kmax, double slope, std::uint64_t seed) {
  if (kmax < 1) throw InvalidArgument("random_band_limited: kmax must be >= 1");
  if (kmax > grid->dealias_cutoff()) kmax = grid->dealias_cutoff();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SpectralField c(grid);
  const std::size_t n = grid->n();
  // Fill a deterministic order over the half spectrum; the kx = 0 column is made
  // Hermitian afterwards.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < grid->half(); ++i) {
      const int kx = grid->kx(i);
      const int ky = grid->ky(j);
      const double kk = std::sqrt(static_cast<double>(kx * kx + ky * ky));
      const double amp = std::abs(gauss(rng));
      const double ph = phase(rng);
      if (kk < 1.0 || kk > kmax || std::abs(kx) > kmax || std::abs(ky) > kmax) continue;
      c(i, j) = std::polar(amp * std::pow(kk, -slope), ph);
    }
  }
  for (std::size_t j = 1; j < n / 2; ++j) c(0, n - j) = std::conj(c(0, j));
  auto f = to_physical(c);
  const double l2 = norm(f, Norm::L(2.0));
  if (l2 > 0.0) f *= 1.0 / l2;
  return f;
}

VectorField make_velocity(const GridPtr& grid, const ShapeSpec& spec) {
  if (spec.name == "zero") return VectorField(grid);
  if (spec.name == "constant") {
    return {ScalarField(grid, spec.get("ux", 0.0)), ScalarField(grid, spec.get("uy", 0.0))};
  }
  if (spec.name == "taylor_green") {
    const double a = spec.get("amplitude", 1.0);
    return {ScalarField::sample(grid, [a](double x, double y) { return a * std::sin(kTwoPi * x) * std::cos(kTwoPi * y); }),
            ScalarField::sample(grid, [a](double x, double y) { return -a * std::cos(kTwoPi * x) * std::sin(kTwoPi * y); })};
  }
  if (spec.name == "shear") {
    const double a = spec.get("amplitude", 1.0);
    const double m = spec.get("mode", 1.0);
    return {ScalarField::sample(grid, [a, m](double, double y) { return a * std::sin(kTwoPi * m * y); }),
            ScalarField(grid)};
  }
  if (spec.name == "random") {
    const double amp = spec.get("amplitude", 1.0);
    const int kmax = static_cast<int>(spec.get("kmax", 8.0));
    const double slope = spec.get("slope", 1.5);
    const double big_k = spec.get("K", 0.0);
    const double nu = spec.get("nu", 1.0);
    const auto seed = static_cast<std::uint64_t>(spec.get("seed", 1.0));
    if (!(nu > 0.0)) throw InvalidArgument("random velocity: nu must be positive");
    // Stream function for the solenoidal part, potential for the gradient part.
    const auto psi = random_band_limited(grid, kmax, slope + 1.0, seed);
    const auto phi = random_band_limited(grid, kmax, slope + 1.0, seed ^ 0x9E3779B97F4A7C15ULL);
    const auto gpsi = gradient(psi);
    VectorField sol(gpsi.y * -1.0, gpsi.x);
    const double gs = gradient_l2(sol);
    if (gs > 0.0) sol *= amp / gs;
    VectorField grad = gradient(phi);
    const double dn = norm(divergence(grad), Norm::L(2.0));
    if (big_k > 0.0 && dn > 0.0) {
      grad *= big_k / std::sqrt(nu) / dn;
      return sol + grad;
    }
    return sol;
  }
  throw InvalidArgument("make_velocity: unknown field '" + spec.name + "'");
}

}  // namespace cns
