#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "cnslab/diagnostics.hpp"
#include "cnslab/error.hpp"
#include "cnslab/prep.hpp"
#include "cnslab/spectral.hpp"
#include "helpers.hpp"

using namespace cns;
using testing::kTwoPi;
using testing::max_abs;
using testing::max_abs_diff;

namespace {

VectorField shear(const GridPtr& g, double amp = 1.0) {
  return {ScalarField::sample(g, [amp](double, double y) { return amp * std::sin(kTwoPi * y); }), ScalarField(g, 0.0)};
}

FluidState random_state(const GridPtr& g, std::uint64_t seed) {
  auto rho = random_band_limited(g, 5, 1.0, seed);
  rho *= 0.4 / rho.map([](double x) { return std::abs(x); }).max();
  rho += 1.0;
  rho *= 1.0 / rho.mean();
  const VectorField v(random_band_limited(g, 5, 1.0, seed + 1), random_band_limited(g, 5, 1.0, seed + 2));
  return {rho, v, 0.0};
}

// Naive DFT on a small grid: coefficients c[ky][kx] for k in [-n/2, n/2).
using Spectrum = std::vector<std::vector<std::complex<double>>>;

Spectrum naive_forward(const ScalarField& f) {
  const int n = static_cast<int>(f.grid().n());
  Spectrum c(n, std::vector<std::complex<double>>(n));
  for (int ky = -n / 2; ky < n / 2; ++ky)
    for (int kx = -n / 2; kx < n / 2; ++kx) {
      std::complex<double> s = 0.0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) s += f(i, j) * std::polar(1.0, -kTwoPi * (kx * i + ky * j) / n);
      c[ky + n / 2][kx + n / 2] = s / static_cast<double>(n * n);
    }
  return c;
}

ScalarField naive_inverse(const Spectrum& c, const GridPtr& g) {
  const int n = static_cast<int>(g->n());
  ScalarField f(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::complex<double> s = 0.0;
      for (int ky = -n / 2; ky < n / 2; ++ky)
        for (int kx = -n / 2; kx < n / 2; ++kx)
          s += c[ky + n / 2][kx + n / 2] * std::polar(1.0, kTwoPi * (kx * i + ky * j) / n);
      f(i, j) = s.real();
    }
  return f;
}

ScalarField naive_filter(const ScalarField& f, const std::function<double(int, int)>& m) {
  const int n = static_cast<int>(f.grid().n());
  auto c = naive_forward(f);
  for (int ky = -n / 2; ky < n / 2; ++ky)
    for (int kx = -n / 2; kx < n / 2; ++kx) c[ky + n / 2][kx + n / 2] *= m(kx, ky);
  return naive_inverse(c, f.grid_ptr());
}

ScalarField naive_dealias(const ScalarField& f) {
  const int cut = static_cast<int>(f.grid().n()) / 3;
  return naive_filter(f, [cut](int kx, int ky) { return std::abs(kx) > cut || std::abs(ky) > cut ? 0.0 : 1.0; });
}

ScalarField naive_product(const ScalarField& a, const ScalarField& b) {
  return naive_dealias(naive_dealias(a) * naive_dealias(b));
}

ScalarField naive_riesz(const ScalarField& f, int i, int j) {
  const int nyq = static_cast<int>(f.grid().n()) / 2;
  return naive_filter(f, [=](int kx, int ky) {
    if (std::abs(kx) == nyq || std::abs(ky) == nyq || (kx == 0 && ky == 0)) return 0.0;
    const double k[2] = {static_cast<double>(kx), static_cast<double>(ky)};
    return -k[i] * k[j] / (k[0] * k[0] + k[1] * k[1]);
  });
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("total energy") {
  auto g = TorusGrid::create(32);
  const PressureLaw iso(1.0, 1.0);
  CHECK(total_energy({ScalarField(g, 1.0), VectorField(g), 0.0}, iso) == 0.0);
  CHECK(total_energy({ScalarField(g, 1.0), shear(g), 0.0}, iso) == doctest::Approx(0.25).epsilon(1e-14));
  const auto rho = ScalarField::sample(g, [](double x, double) { return x < 0.5 ? 2.0 : 0.0; });
  CHECK(total_energy({rho, VectorField(g), 0.0}, PressureLaw(1.0, 2.0)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("modified energy") {
  auto g = TorusGrid::create(32);
  const PressureLaw iso(1.0, 1.0);
  const double mu = 0.7, nu = 5.0;
  CHECK(std::abs(modified_energy({ScalarField(g, 1.0), VectorField(g), 0.0}, iso, mu, nu).value) < 1e-15);

  const auto tg = make_velocity(g, {"taylor_green", {{"amplitude", 1.0}}});
  const double grad = gradient_l2(tg);
  const double expect = 0.5 * (inner(tg, tg) + mu * grad * grad);
  CHECK(modified_energy({ScalarField(g, 1.0), tg, 0.0}, iso, mu, nu).value == doctest::Approx(expect).epsilon(1e-12));

  for (std::uint64_t seed : {1, 2, 3}) {
    for (double gamma : {1.0, 2.0}) {
      const PressureLaw law(1.0, gamma);
      const auto s = random_state(g, seed);
      const double nu_big = std::max(nu, 0.5 * pressure(s.rho, law).max());
      const auto m = modified_energy(s, law, mu, nu_big);
      CHECK(m.margin() >= -1e-10);
    }
  }
}

TEST_CASE("dissipation functional") {
  auto g = TorusGrid::create(32);
  const PressureLaw iso(1.0, 1.0);
  SolverConfig cfg;
  cfg.mu = 0.3;
  cfg.lambda = 2.0;
  const double rho_star = 2.0, nu = cfg.nu();

  FluidState rest{ScalarField(g, 1.0), VectorField(g), 0.0};
  CHECK(dissipation_functional(rest, iso, nu, cfg.mu, rho_star, material_derivative(rest, cfg)).total() == 0.0);

  // Shear wave: v̇ = μΔv, ∇²v = -4π² v, ‖∇v‖² = 2π², and G is constant.
  FluidState s{ScalarField(g, 1.0), shear(g), 0.0};
  const auto d = dissipation_functional(s, iso, nu, cfg.mu, rho_star, material_derivative(s, cfg));
  const double k2 = kTwoPi * kTwoPi;
  CHECK(d.terms[0] == doctest::Approx(0.25 * std::pow(k2 * cfg.mu, 2) * 0.5).epsilon(1e-12));
  CHECK(d.terms[1] == doctest::Approx(cfg.mu * cfg.mu / (4.0 * rho_star) * k2 * k2 * 0.5).epsilon(1e-12));
  CHECK(std::abs(d.terms[2]) < 1e-20);
  CHECK(std::abs(d.terms[3]) < 1e-20);
  CHECK(std::abs(d.terms[4]) < 1e-20);
  CHECK(d.terms[5] == doctest::Approx(0.5 * cfg.mu * k2 * 0.5).epsilon(1e-12));

  for (std::uint64_t seed : {4, 5}) {
    const auto r = random_state(g, seed);
    const auto dr = dissipation_functional(r, iso, nu, cfg.mu, rho_star, material_derivative(r, cfg));
    const double gv = gradient_l2(r.v);
    CHECK(dr.total() >= 0.5 * cfg.mu * gv * gv);
    for (double t : dr.terms) CHECK(t >= 0.0);
  }
}

TEST_CASE("material derivative") {
  auto g = TorusGrid::create(32);
  SolverConfig cfg;
  cfg.mu = 0.4;
  CHECK(max_abs(material_derivative({ScalarField(g, 1.0), VectorField(g), 0.0}, cfg)) == 0.0);
  const auto v = shear(g);
  const auto vdot = material_derivative({ScalarField(g, 1.0), v, 0.0}, cfg);
  CHECK(max_abs_diff(vdot, v * (-kTwoPi * kTwoPi * cfg.mu)) < 1e-11);

  // Vacuum cells get zero acceleration.
  auto rho = make_density(g, {"disc", {{"radius", 0.3}}});
  const auto vd = material_derivative({rho, shear(g), 0.0}, cfg);
  for (std::size_t k = 0; k < rho.size(); ++k)
    if (rho[k] < cfg.rho_floor) CHECK(vd.x[k] == 0.0);
  CHECK(vd.x.all_finite());
}

TEST_CASE("material derivative against a time difference") {
  // Centered difference of v along the solver trajectory plus v·∇v, with
  // dt ∝ h². The gap is bounded by the minmod transport of the momentum,
  // which is between first and second order at smooth extrema.
  std::vector<double> gaps;
  for (std::size_t n : {32, 64, 128}) {
    auto g = TorusGrid::create(n);
    const double dt = 1.024 / static_cast<double>(n * n);
    SolverConfig cfg;
    cfg.mu = 0.5;
    cfg.lambda = 1.0;
    cfg.law = PressureLaw(1.0, 1.4);
    cfg.dt_max = dt;
    const auto d = normalize_data(make_density(g, {"smooth", {{"amplitude", 0.2}}}),
                                  make_velocity(g, {"taylor_green", {{"amplitude", 0.3}}}));
    const FluidState s0{d.rho, d.v, 0.0};
    const auto s1 = step(s0, cfg).first;
    const auto s2 = step(s1, cfg).first;
    REQUIRE(s2.t == doctest::Approx(2.0 * cfg.dt_max));
    const auto vt = (s2.v - s0.v) * (0.5 / cfg.dt_max);
    const auto& v = s1.v;
    const VectorField adv(dot(v, VectorField(partial_x(v.x), partial_y(v.x))),
                          dot(v, VectorField(partial_x(v.y), partial_y(v.y))));
    const auto exact = material_derivative(s1, cfg);
    const auto diff = vt + adv - exact;
    gaps.push_back(std::sqrt(inner(diff, diff) / inner(exact, exact)));
  }
  MESSAGE("v-dot gaps " << gaps[0] << " " << gaps[1] << " " << gaps[2]);
  CHECK(gaps[2] < 1e-3);
  CHECK(std::log2(gaps[0] / gaps[1]) >= 1.0);
  CHECK(std::log2(gaps[1] / gaps[2]) >= 1.0);
}

TEST_CASE("damped mode") {
  auto g = TorusGrid::create(32);
  const double nu = 7.0;
  auto m = damped_mode({ScalarField(g, 1.0), VectorField(g), 0.0}, nu);
  CHECK(max_abs(m.f) == 0.0);
  CHECK(m.f_plus_sup == 0.0);

  const auto v = make_velocity(g, {"random", {{"amplitude", 1.0}, {"K", 2.0}, {"seed", 3}}});
  m = damped_mode({ScalarField(g, 1.0), v, 0.0}, nu);
  CHECK(max_abs_diff(m.f, inverse_laplacian(divergence(v)) * (-1.0 / nu)) < 1e-13);

  const auto s = random_state(g, 9);
  m = damped_mode(s, nu);
  const auto lhs = (m.f - s.rho.map([](double r) { return std::log(r); })) * nu;
  auto src = divergence(s.rho * s.v);
  src += -src.mean();
  CHECK(max_abs_diff(lhs, inverse_laplacian(src) * -1.0) <= 1e-10);

  auto rho = make_density(g, {"disc", {{"radius", 0.3}}});
  m = damped_mode({rho, v, 0.0}, nu);
  CHECK(m.vacuum_cells > 0);
  CHECK(m.f.all_finite());
}

TEST_CASE("density bound") {
  CHECK(density_bound(1.0, 3.0, 1.7) == doctest::Approx(3.4));
  CHECK(density_bound(2.0, 1.0, 1.0) == doctest::Approx(2.0 * std::exp(0.5)).epsilon(1e-14));
  const auto c = density_bound_check(std::vector<double>(10, 1.0), 1.0, 0.0, 1.0);
  CHECK(c.pass);
  CHECK(c.worst_margin == doctest::Approx(1.0));
  CHECK_FALSE(density_bound_check({1.0, 2.5}, 1.0, 0.0, 1.0).pass);
}

TEST_CASE("commutator") {
  auto g = TorusGrid::create(16);
  const auto rho = random_state(g, 2).rho;
  const VectorField c(ScalarField(g, 1.3), ScalarField(g, -0.4));
  CHECK(max_abs(commutator_field({rho, c, 0.0}).field) < 1e-13);
  const auto v = random_state(g, 5).v;
  CHECK(max_abs(commutator_field({ScalarField(g, 0.0), v, 0.0}).field) == 0.0);

  const auto direct = commutator_field({rho, v, 0.0});
  const auto flipped = commutator_field({rho, v * -1.0, 0.0});
  CHECK(max_abs_diff(direct.field, flipped.field) < 1e-13);

  const ScalarField* vv[2] = {&v.x, &v.y};
  for (int i = 0; i < 2; ++i) {
    const auto m = naive_product(rho, *vv[i]);
    ScalarField expect(g, 0.0);
    for (int j = 0; j < 2; ++j) {
      expect += naive_product(*vv[j], naive_riesz(m, i, j));
      expect -= naive_riesz(naive_product(*vv[j], m), i, j);
    }
    CHECK(max_abs_diff(i == 0 ? direct.field.x : direct.field.y, expect) <= 1e-8);
  }
  CHECK(direct.sup == doctest::Approx(norm(direct.field, Norm::Linf())));
}

TEST_CASE("time norms") {
  CHECK(time_lq_norm({0.0, 0.5, 1.0}, {0.0, 0.0, 0.0}, 1.5) == 0.0);
  CHECK(time_lq_norm({0.3}, {2.0}, 1.5, 0.01) == doctest::Approx(std::pow(0.01, 1.0 / 1.5) * 2.0));
  CHECK(time_lq_norm({0.0, 1.0}, {1.0, 1.0}, 2.0) == doctest::Approx(1.0));
  CHECK(time_lq_norm({0.0, 2.0}, {3.0, 3.0}, 2.0) == doctest::Approx(3.0 * std::sqrt(2.0)));
  CHECK_THROWS_AS(time_lq_norm({0.0, 1.0}, {1.0}, 2.0), InvalidArgument);
}

TEST_CASE("difference metrics") {
  auto g = TorusGrid::create(32);
  const auto s = random_state(g, 1);
  const auto z = difference_metrics(s, s);
  CHECK(z.delta_rho_hm1 == 0.0);
  CHECK(z.delta_v_weighted == 0.0);

  FluidState a{ScalarField(g, 1.0), VectorField(g), 0.0};
  FluidState b{ScalarField(g, 1.0) + ScalarField::sample(g, [](double x, double) { return std::sin(kTwoPi * x); }),
               VectorField(ScalarField(g, 0.5), ScalarField(g, -1.2)), 0.0};
  const auto m = difference_metrics(b, a);
  CHECK(m.delta_rho_hm1 == doctest::Approx(1.0 / (kTwoPi * std::sqrt(2.0))).epsilon(1e-13));
  const auto w = difference_metrics(FluidState{ScalarField(g, 1.0), b.v, 0.0}, a);
  CHECK(w.delta_v_weighted == doctest::Approx(std::hypot(0.5, 1.2)).epsilon(1e-14));

  FluidState heavy{ScalarField(g, 1.1), VectorField(g), 0.0};
  CHECK_THROWS_AS(difference_metrics(heavy, a), InvalidArgument);
}

TEST_CASE("elliptic identity gap") {
  auto g = TorusGrid::create(32);
  const auto v = random_state(g, 7).v;
  CHECK(elliptic_identity_gap(v, 0.5, 3.0) <= 1e-12);
}

TEST_CASE("CSV layout") {
  const auto& cols = csv_columns();
  REQUIRE(cols.size() == 20);
  CHECK(cols.front() == "t");
  CHECK(cols[4] == "E");
  CHECK(cols[5] == "calE");
  CHECK(cols[18] == "wt_grad_vdot_acc");
  CHECK(cols.back() == "energy_residual");

  DiagnosticsRecord r;
  r.t = 0.1;
  r.mass = 1.0 / 3.0;
  std::ostringstream os;
  write_csv(os, {r});
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header.rfind("t,mass,mom_x", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 19);
  const double mass = std::stod(row.substr(row.find(',') + 1));
  CHECK(mass == 1.0 / 3.0);  // 17 significant digits round-trip
}

TEST_CASE("monitor on a stationary run") {
  auto g = TorusGrid::create(16);
  SolverConfig cfg;
  FluidState s{ScalarField(g, 1.0), VectorField(g), 0.0};
  DiagnosticsMonitor mon(s, cfg);
  for (int k = 0; k < 5; ++k) {
    s = step(s, cfg).first;
    mon.observe(s);
  }
  REQUIRE(mon.records().size() == 6);
  for (const auto& r : mon.records()) {
    CHECK(r.mass == doctest::Approx(1.0));
    CHECK(r.energy == 0.0);
    CHECK(r.int_d == 0.0);
    CHECK(r.wt_rho_vdot_l2 == 0.0);
    CHECK(r.wt_grad_vdot_acc == 0.0);
    CHECK(std::abs(r.energy_residual) < 1e-15);
    CHECK(r.sup_rho == doctest::Approx(1.0));
    CHECK(r.rho_bound_margin == doctest::Approx(1.0));
  }
}

}  // TEST_SUITE
