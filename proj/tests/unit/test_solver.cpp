#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cnslab/conditions.hpp"
#include "cnslab/error.hpp"
#include "cnslab/prep.hpp"
#include "cnslab/solver.hpp"
#include "cnslab/spectral.hpp"
#include "helpers.hpp"

using namespace cns;
using testing::kTwoPi;
using testing::max_abs;
using testing::max_abs_diff;

namespace {

VectorField shear_wave(const GridPtr& g, double t, double mu) {
  const double decay = std::exp(-kTwoPi * kTwoPi * mu * t);
  return {ScalarField::sample(g, [decay](double, double y) { return decay * std::sin(kTwoPi * y); }),
          ScalarField(g, 0.0)};
}

double l1(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("time step") {
  auto g = TorusGrid::create(64);
  SolverConfig cfg;
  cfg.cfl = 0.5;
  cfg.dt_max = 1.0;
  FluidState s{ScalarField(g, 1.0), VectorField(g), 0.0};
  CHECK(compute_dt(s, cfg) == doctest::Approx(1.0 / 128.0).epsilon(1e-14));

  s.v = make_velocity(g, {"taylor_green", {{"amplitude", 1.0}}});
  const double dt1 = compute_dt(s, cfg);
  s.v *= 2.0;
  const double dt2 = compute_dt(s, cfg);
  CHECK(dt2 <= dt1);
  CHECK(dt2 >= 0.5 * dt1);
  cfg.dt_max = 1e-4;
  CHECK(compute_dt(s, cfg) <= 1e-4);
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.mu = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.mu = 1.0;
  cfg.lambda = -2.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.lambda = 0.0;
  cfg.cfl = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK(parse_limiter("minmod") == Limiter::Minmod);
  CHECK(parse_limiter("none") == Limiter::None);
  CHECK_THROWS_AS(parse_limiter("superbee"), InvalidArgument);
}

TEST_CASE("density transport") {
  auto g = TorusGrid::create(32);
  const auto rho = make_density(g, {"disc", {{"radius", 0.3}}}) + ScalarField(g, 0.1);
  CHECK(max_abs_diff(advance_density(rho, VectorField(g), 0.01), rho) == 0.0);

  const auto v = make_velocity(g, {"random", {{"amplitude", 1.0}, {"K", 3.0}, {"seed", 2}}});
  const double dt = 0.3 * g->h() / max_abs(v);
  for (auto lim : {Limiter::Minmod, Limiter::None}) {
    const auto r1 = advance_density(ScalarField(g, 1.0), v, dt, lim);
    CHECK(std::abs(r1.mean() - 1.0) <= 1e-13);
    const auto r2 = advance_density(rho, v, dt, lim);
    CHECK(std::abs(r2.mean() - rho.mean()) <= 1e-13 * rho.mean());
    CHECK(r2.min() >= 0.0);
  }
  CHECK_THROWS_AS(advance_density(rho, v, 5.0 * g->h() / max_abs(v)), CflViolation);
}

TEST_CASE("translation over one period") {
  double prev = 1e300;
  for (std::size_t n : {32, 64, 128}) {
    auto g = TorusGrid::create(n);
    const auto rho = make_density(g, {"smooth", {{"amplitude", 0.5}}}) + make_density(g, {"disc", {{"radius", 0.2}}});
    const double c = 1.0;
    const VectorField v(ScalarField(g, c), ScalarField(g, 0.0));
    const int steps = static_cast<int>(2 * n);  // CFL 1/2, lands on t = 1/c
    ScalarField r = rho;
    for (int k = 0; k < steps; ++k) r = advance_density(r, v, 1.0 / (c * steps));
    const double err = l1(r, rho);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("momentum update trivial states") {
  auto g = TorusGrid::create(32);
  SolverConfig cfg;
  const ScalarField one(g, 1.0);
  auto out = advance_momentum(one, VectorField(g), cfg, 0.01);
  CHECK(max_abs(out.v) < 1e-14);

  const VectorField c(ScalarField(g, 0.7), ScalarField(g, -0.2));
  out = advance_momentum(one, c, cfg, 0.01);
  CHECK(max_abs_diff(out.v, c) < 1e-13);
}

TEST_CASE("shear wave step against the heat kernel") {
  // The force update is second order: one step's error falls by about eight
  // when dt halves.
  auto g = TorusGrid::create(64);
  SolverConfig cfg;
  cfg.mu = 0.5;
  const ScalarField one(g, 1.0);
  const auto v0 = shear_wave(g, 0.0, cfg.mu);
  double prev = 0.0;
  for (double dt : {0.02, 0.01, 0.005}) {
    const auto out = advance_momentum(one, v0, cfg, dt);
    const double err = max_abs_diff(out.v, shear_wave(g, dt, cfg.mu));
    CHECK(err <= std::pow(kTwoPi * kTwoPi * cfg.mu * dt, 2));
    if (prev > 0.0) CHECK(std::log2(prev / err) >= 2.5);
    prev = err;
  }
}

TEST_CASE("stationary state is preserved") {
  auto g = TorusGrid::create(32);
  SolverConfig cfg;
  FluidState s{ScalarField(g, 1.0), VectorField(g), 0.0};
  auto [next, report] = step(s, cfg);
  CHECK(max_abs_diff(next.rho, s.rho) < 1e-15);
  CHECK(max_abs(next.v) < 1e-14);
  CHECK(next.t == doctest::Approx(report.dt));
  CHECK(report.dt > 0.0);
}

TEST_CASE("mass drift over 1000 steps") {
  auto g = TorusGrid::create(32);
  SolverConfig cfg;
  cfg.mu = 0.1;
  cfg.lambda = 1.0;
  cfg.dt_max = 1e-3;
  const auto d = normalize_data(make_density(g, {"disc", {{"radius", 0.25}}}),
                                make_velocity(g, {"random", {{"amplitude", 1.0}, {"K", 1.0}, {"seed", 5}}}));
  FluidState s{d.rho, d.v, 0.0};
  double drift = 0.0, min_rho = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = step(s, cfg).first;
    drift = std::max(drift, std::abs(s.mass() - 1.0));
    min_rho = std::min(min_rho, s.rho.min());
  }
  CHECK(drift <= 1e-11);
  CHECK(min_rho >= 0.0);
  const auto [mx, my] = s.momentum();
  CHECK(std::hypot(mx, my) < 1e-10);
}

TEST_CASE("Galilean consistency of the force update") {
  auto g = TorusGrid::create(32);
  SolverConfig cfg;
  cfg.mu = 0.2;
  cfg.lambda = 0.5;
  cfg.law = PressureLaw(1.0, 1.4);
  const auto d = normalize_data(make_density(g, {"smooth", {{"amplitude", 0.3}}}),
                                make_velocity(g, {"random", {{"amplitude", 0.5}, {"K", 0.5}, {"seed", 8}, {"kmax", 4}}}));
  const VectorField c(ScalarField(g, 3.0), ScalarField(g, -1.5));
  const auto plain = advance_momentum(d.rho, d.rho * d.v, cfg, 0.01);
  const auto boosted = advance_momentum(d.rho, d.rho * (d.v + c), cfg, 0.01);
  CHECK(max_abs_diff(boosted.v - c, plain.v) <= 1e-8);
}

TEST_CASE("Galilean consistency of a full step") {
  // Boosting by c and translating back by c dt commutes with the step up to
  // the upwind truncation error, which vanishes under refinement.
  const double c = 2.0;
  auto translate = [](const ScalarField& f, double s) {
    return apply_multiplier(f, [s](int kx, int) { return std::polar(1.0, kTwoPi * kx * s); });
  };
  double prev = 0.0;
  for (std::size_t n : {32, 64, 128}) {
    auto g = TorusGrid::create(n);
    SolverConfig cfg;
    cfg.mu = 0.2;
    cfg.lambda = 0.5;
    const auto d = normalize_data(make_density(g, {"smooth", {{"amplitude", 0.3}}}),
                                  make_velocity(g, {"taylor_green", {{"amplitude", 0.5}}}));
    const double dt = 0.1 * g->h();
    cfg.dt_max = dt;
    const auto plain = step(FluidState{d.rho, d.v, 0.0}, cfg).first;
    const VectorField shift(ScalarField(g, c), ScalarField(g, 0.0));
    const auto boosted = step(FluidState{d.rho, d.v + shift, 0.0}, cfg).first;
    REQUIRE(plain.t == doctest::Approx(dt));
    REQUIRE(boosted.t == doctest::Approx(dt));
    const double gap = std::max({max_abs_diff(translate(boosted.rho, c * dt), plain.rho),
                                 max_abs_diff(translate(boosted.v.x, c * dt) - ScalarField(g, c), plain.v.x),
                                 max_abs_diff(translate(boosted.v.y, c * dt), plain.v.y)});
    if (prev > 0.0) CHECK(std::log2(prev / gap) >= 1.0);
    prev = gap;
  }
}

TEST_CASE("viscous operator") {
  auto g = TorusGrid::create(32);
  const auto v = shear_wave(g, 0.0, 1.0);
  const auto lv = viscous_operator(v, 0.3, 2.0);
  CHECK(max_abs_diff(lv.x, v.x * (-0.3 * kTwoPi * kTwoPi)) < 1e-11);
}

}  // TEST_SUITE

TEST_SUITE("conditions") {

TEST_CASE("nu threshold") {
  const PressureLaw iso(1.0, 1.0);
  CHECK(nu_threshold(1.0, 1.0, iso) == doctest::Approx(4.0));
  double prev = 0.0;
  for (double r = 0.1; r < 50.0; r *= 1.3) {
    const double v = nu_threshold(r, 1.0, PressureLaw(2.0, 1.6));
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("condition table") {
  const PressureLaw iso(1.0, 1.0);
  const double nu0 = nu_threshold(1.0, 1.0, iso);
  auto t = evaluate_conditions(2.0 * nu0, 1.0, 1.0, iso);
  CHECK(t.rows.size() == 6);
  CHECK(std::count_if(t.rows.begin(), t.rows.end(), [](const ConditionRow& r) { return r.family == "2d"; }) == 4);
  CHECK(t.nu0 == doctest::Approx(nu0));
  // ν = 8: 8 ≥ 1; 64 ≥ 2 log(e+1); 8 ≥ 8; 8 ≥ 1/2.
  CHECK(t.rows[0].pass);
  CHECK(t.rows[1].rhs == doctest::Approx(2.0 * std::log(std::exp(1.0) + 1.0)));
  CHECK(t.rows[2].rhs == doctest::Approx(8.0));
  CHECK(t.rows[2].pass);
  CHECK(t.rows[3].pass);
  CHECK(t.all_pass());

  // μ = 1, ρ* = 2, a = 1, γ = 1, ν = 100.
  t = evaluate_conditions(100.0, 1.0, 2.0, iso);
  CHECK(t.p_star == 2.0);
  CHECK(t.h_sup == 0.0);
  CHECK(t.rows[1].lhs == 1e4);
  CHECK(t.rows[1].rhs == doctest::Approx(2.0 * 2.0 * std::log(std::exp(1.0) + 2.0) * 4.0));
  CHECK(t.rows[2].rhs == doctest::Approx(16.0));
  CHECK(t.rows[3].rhs == doctest::Approx(1.0));
  CHECK(t.all_pass("2d"));
  CHECK(t.rows[4].rhs == doctest::Approx(8.0 * 8.0 * 2.0));
  CHECK_FALSE(t.rows[4].pass);

  t = evaluate_conditions(0.5, 1.0, 1.0, iso);
  CHECK_FALSE(t.rows[0].pass);
}

TEST_CASE("three-dimensional smallness") {
  auto g = TorusGrid::create(32);
  const PressureLaw iso(1.0, 1.0);
  auto r = smallness_3d_check(ScalarField(g, 1.0), VectorField(g), iso, 1.0, 10.0, 1.0, 1.0);
  CHECK(r.lhs == 0.0);
  CHECK(r.pass);

  const auto d = normalize_data(make_density(g, {"smooth", {{"amplitude", 0.4}}}),
                                make_velocity(g, {"random", {{"amplitude", 0.5}, {"K", 1.0}, {"nu", 10.0}, {"seed", 3}}}));
  const double mu = 0.8, nu = 10.0, rho_star = 2.0, e0 = 0.3;
  r = smallness_3d_check(d.rho, d.v, iso, mu, nu, rho_star, e0);
  const auto r2 = smallness_3d_check(d.rho, d.v, iso, mu, nu, rho_star, 2.0 * e0);
  CHECK(r2.ratio == doctest::Approx(2.0 * r.ratio).epsilon(1e-14));

  // Quadrature oracle: ∇𝒫v from the stream function, P̃ and div v pointwise.
  const auto psi = inverse_laplacian(curl2d(d.v) * -1.0);
  const auto gp = gradient(psi);
  const VectorField pv(-gp.y, gp.x);
  double grad2 = 0.0;
  for (const auto& c : {partial_x(pv.x), partial_y(pv.x), partial_x(pv.y), partial_y(pv.y)}) grad2 += inner(c, c);
  const auto p = pressure(d.rho, iso);
  const auto pt = p - ScalarField(g, p.mean());
  const auto dv = divergence(d.v);
  const double lhs = mu * grad2 + inner(pt, pt) / nu + nu * inner(dv, dv);
  const double rhs = std::pow(mu, 5) / (rho_star * rho_star * rho_star * e0);
  CHECK(r.lhs == doctest::Approx(lhs).epsilon(1e-10));
  CHECK(r.ratio == doctest::Approx(lhs / rhs).epsilon(1e-10));
}

}  // TEST_SUITE
