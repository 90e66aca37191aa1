#include "cnslab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cnslab/error.hpp"

namespace cns {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wavenumbers used by odd derivatives: the Nyquist lines carry no derivative.
int deriv_kx(const TorusGrid& g, std::size_t i) { return i == g.n() / 2 ? 0 : g.kx(i); }
int deriv_ky(const TorusGrid& g, std::size_t j) { return j == g.n() / 2 ? 0 : g.ky(j); }

template <typename F>
void for_each_mode(const TorusGrid& g, F&& f) {
  const std::size_t n = g.n();
  const std::size_t half = g.half();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < half; ++i) f(i, j, j * half + i);
  }
}

void require_finite(const ScalarField& f, const char* where) {
  const auto v = f.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      const std::size_t n = f.grid().n();
      std::ostringstream os;
      os << where << ": non-finite value " << v[k] << " at (i=" << k % n << ", j=" << k / n << ")";
      throw NonFiniteValue(os.str());
    }
  }
}

}  // namespace

SpectralField::SpectralField(GridPtr grid)
    : grid_(std::move(grid)), coeffs_(grid_->spectral_size(), Complex(0.0, 0.0)) {}

SpectralField::SpectralField(GridPtr grid, std::vector<Complex> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_->spectral_size()) {
    throw InvalidArgument("SpectralField: coefficient count does not match the grid");
  }
}

double mode_weight(const TorusGrid& g, std::size_t i) { return (i == 0 || i == g.n() / 2) ? 1.0 : 2.0; }

double SpectralField::energy() const {
  double s = 0.0;
  for_each_mode(*grid_, [&](std::size_t i, std::size_t, std::size_t idx) {
    s += mode_weight(*grid_, i) * std::norm(coeffs_[idx]);
  });
  return s;
}

SpectralField& SpectralField::apply(const std::function<Complex(int, int)>& m) {
  for_each_mode(*grid_, [&](std::size_t i, std::size_t j, std::size_t idx) {
    coeffs_[idx] *= m(grid_->kx(i), grid_->ky(j));
  });
  return *this;
}

SpectralField to_spectral(const ScalarField& f) {
  require_finite(f, "to_spectral");
  SpectralField out(f.grid_ptr());
  f.grid().forward(f.values(), out.coeffs());
  return out;
}

ScalarField to_physical(const SpectralField& c) {
  ScalarField out(c.grid_ptr());
  c.grid().inverse(c.coeffs(), out.values());
  return out;
}

ScalarField apply_multiplier(const ScalarField& f, const std::function<Complex(int, int)>& m) {
  auto c = to_spectral(f);
  c.apply(m);
  return to_physical(c);
}

namespace {

SpectralField derivative_x(SpectralField c) {
  const auto& g = c.grid();
  for_each_mode(g, [&](std::size_t i, std::size_t, std::size_t idx) {
    c.coeffs()[idx] *= Complex(0.0, kTwoPi * deriv_kx(g, i));
  });
  return c;
}

SpectralField derivative_y(SpectralField c) {
  const auto& g = c.grid();
  for_each_mode(g, [&](std::size_t, std::size_t j, std::size_t idx) {
    c.coeffs()[idx] *= Complex(0.0, kTwoPi * deriv_ky(g, j));
  });
  return c;
}

}  // namespace

ScalarField partial_x(const ScalarField& f) { return to_physical(derivative_x(to_spectral(f))); }
ScalarField partial_y(const ScalarField& f) { return to_physical(derivative_y(to_spectral(f))); }

VectorField gradient(const ScalarField& f) {
  const auto c = to_spectral(f);
  return {to_physical(derivative_x(c)), to_physical(derivative_y(c))};
}

ScalarField divergence(const VectorField& v) {
  auto cx = derivative_x(to_spectral(v.x));
  const auto cy = derivative_y(to_spectral(v.y));
  for (std::size_t k = 0; k < cx.coeffs().size(); ++k) cx.coeffs()[k] += cy.coeffs()[k];
  return to_physical(cx);
}

ScalarField curl2d(const VectorField& v) {
  auto a = derivative_x(to_spectral(v.y));
  const auto b = derivative_y(to_spectral(v.x));
  for (std::size_t k = 0; k < a.coeffs().size(); ++k) a.coeffs()[k] -= b.coeffs()[k];
  return to_physical(a);
}

ScalarField laplacian(const ScalarField& f) {
  return apply_multiplier(f, [](int kx, int ky) {
    return Complex(-kTwoPi * kTwoPi * static_cast<double>(kx * kx + ky * ky), 0.0);
  });
}

ScalarField inverse_laplacian(const ScalarField& f) {
  const double m = f.mean();
  if (std::abs(m) > kMeanZeroTolerance) {
    std::ostringstream os;
    os << "inverse_laplacian: source has mean " << m << " (must be zero within " << kMeanZeroTolerance
       << "); subtract the mean first";
    throw InvalidArgument(os.str());
  }
  return apply_multiplier(f, [](int kx, int ky) {
    const double k2 = static_cast<double>(kx * kx + ky * ky);
    return k2 == 0.0 ? Complex(0.0, 0.0) : Complex(1.0 / (kTwoPi * kTwoPi * k2), 0.0);
  });
}

LerayParts leray_project(const VectorField& v) {
  auto cx = to_spectral(v.x);
  auto cy = to_spectral(v.y);
  SpectralField qx(v.grid_ptr());
  SpectralField qy(v.grid_ptr());
  const auto& g = v.grid();
  for_each_mode(g, [&](std::size_t i, std::size_t j, std::size_t idx) {
    const double kx = deriv_kx(g, i);
    const double ky = deriv_ky(g, j);
    const double k2 = kx * kx + ky * ky;
    if (k2 == 0.0) return;
    const Complex proj = (kx * cx.coeffs()[idx] + ky * cy.coeffs()[idx]) / k2;
    qx.coeffs()[idx] = kx * proj;
    qy.coeffs()[idx] = ky * proj;
  });
  VectorField q(to_physical(qx), to_physical(qy));
  VectorField p = v - q;
  return {std::move(p), std::move(q)};
}

ScalarField spectral_truncate(const ScalarField& b, int n) {
  if (n < 1) throw InvalidArgument("spectral_truncate: n must be >= 1");
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return apply_multiplier(b, [n2](int kx, int ky) {
    const double k2 = static_cast<double>(kx * kx + ky * ky);
    return (k2 >= 1.0 && k2 <= n2) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
  });
}

ScalarField dealias(const ScalarField& f) {
  const int cut = f.grid().dealias_cutoff();
  return apply_multiplier(f, [cut](int kx, int ky) {
    return (std::abs(kx) > cut || std::abs(ky) > cut) ? Complex(0.0, 0.0) : Complex(1.0, 0.0);
  });
}

VectorField dealias(const VectorField& v) { return {dealias(v.x), dealias(v.y)}; }

ScalarField dealiased_product(const ScalarField& a, const ScalarField& b) {
  return dealias(dealias(a) * dealias(b));
}

Norm Norm::Linf() { return {Kind::Lp, std::numeric_limits<double>::infinity(), 0}; }

namespace {

double lp_norm(std::span<const double> vals, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("norm: L_p requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : vals) m = std::max(m, std::abs(v));
    return m;
  }
  long double s = 0.0L;
  for (double v : vals) s += std::pow(std::abs(v), p);
  return std::pow(static_cast<double>(s / static_cast<long double>(vals.size())), 1.0 / p);
}

double hdot_squared(const ScalarField& f, int s) {
  const auto c = to_spectral(f);
  const auto& g = f.grid();
  if (s == -1 && std::abs(c(0, 0).real()) > kMeanZeroTolerance) {
    std::ostringstream os;
    os << "norm: H^-1 requires a mean-zero field, mean = " << c(0, 0).real();
    throw InvalidArgument(os.str());
  }
  double acc = 0.0;
  for_each_mode(g, [&](std::size_t i, std::size_t j, std::size_t idx) {
    const double k2 = static_cast<double>(g.kx(i) * g.kx(i) + g.ky(j) * g.ky(j));
    if (k2 == 0.0) return;
    const double mult = std::pow(kTwoPi * std::sqrt(k2), 2 * s);
    acc += mode_weight(g, i) * mult * std::norm(c.coeffs()[idx]);
  });
  return acc;
}

}  // namespace

double norm(const ScalarField& f, Norm spec) {
  switch (spec.kind) {
    case Norm::Kind::Lp:
      return lp_norm(f.values(), spec.p);
    case Norm::Kind::Hdot:
      if (spec.s != 1 && spec.s != -1) throw InvalidArgument("norm: only H^1 and H^-1 are supported");
      return std::sqrt(hdot_squared(f, spec.s));
    case Norm::Kind::H1: {
      const double l2 = lp_norm(f.values(), 2.0);
      return std::sqrt(l2 * l2 + hdot_squared(f, 1));
    }
  }
  throw InvalidArgument("norm: unknown kind");
}

double norm(const VectorField& v, Norm spec) {
  if (spec.kind == Norm::Kind::Lp) return lp_norm(magnitude(v).values(), spec.p);
  const double a = norm(v.x, spec);
  const double b = norm(v.y, spec);
  return std::sqrt(a * a + b * b);
}

namespace {

// sum_k w (2π|k_d|)^(2*order) |c_k|^2 over both components.
double derivative_energy(const VectorField& v, int order) {
  double acc = 0.0;
  for (const ScalarField* comp : {&v.x, &v.y}) {
    const auto c = to_spectral(*comp);
    const auto& g = comp->grid();
    for_each_mode(g, [&](std::size_t i, std::size_t j, std::size_t idx) {
      const double kx = deriv_kx(g, i);
      const double ky = deriv_ky(g, j);
      const double k2 = kTwoPi * kTwoPi * (kx * kx + ky * ky);
      acc += mode_weight(g, i) * std::pow(k2, order) * std::norm(c.coeffs()[idx]);
    });
  }
  return acc;
}

}  // namespace

double gradient_l2(const VectorField& v) { return std::sqrt(derivative_energy(v, 1)); }
double hessian_l2(const VectorField& v) { return std::sqrt(derivative_energy(v, 2)); }

double gradient_linf(const VectorField& v) {
  const auto gx = gradient(v.x);
  const auto gy = gradient(v.y);
  double m = 0.0;
  for (std::size_t k = 0; k < gx.x.size(); ++k) {
    const double f2 = gx.x[k] * gx.x[k] + gx.y[k] * gx.y[k] + gy.x[k] * gy.x[k] + gy.y[k] * gy.y[k];
    m = std::max(m, std::sqrt(f2));
  }
  return m;
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(s / static_cast<long double>(a.size()));
}

double inner(const VectorField& a, const VectorField& b) { return inner(a.x, b.x) + inner(a.y, b.y); }

}  // namespace cns
