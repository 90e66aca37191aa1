#include <doctest.h>

#include <cmath>

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

ScalarField half_indicator(const GridPtr& g, double value) {
  return ScalarField::sample(g, [value](double x, double) { return x < 0.5 ? value : 0.0; });
}

double l1_distance(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST_SUITE("prep") {

TEST_CASE("normalization") {
  auto g = TorusGrid::create(16);
  auto d = normalize_data(ScalarField(g, 2.0), VectorField(g));
  CHECK(max_abs_diff(d.rho, ScalarField(g, 1.0)) < 1e-15);
  CHECK(max_abs(d.v) == 0.0);

  d = normalize_data(ScalarField(g, 1.0), VectorField(ScalarField(g, 3.0), ScalarField(g, 0.0)));
  CHECK(max_abs(d.v) < 1e-15);

  // ρ₀ = 2·1_A, v₀ = (1,0) on A: ∫ρv = 1, so v shifts by (1,0).
  const auto rho = half_indicator(g, 2.0);
  const VectorField v(half_indicator(g, 1.0), ScalarField(g, 0.0));
  d = normalize_data(rho, v, "half");
  CHECK(max_abs_diff(d.v.x, half_indicator(g, 1.0) - ScalarField(g, 1.0)) < 1e-15);
  CHECK(d.provenance == "half");
  CHECK(std::abs(d.rho.mean() - 1.0) < 1e-15);
  const auto [mx, my] = FluidState{d.rho, d.v, 0.0}.momentum();
  CHECK(std::abs(mx) < 1e-15);
  CHECK(std::abs(my) < 1e-15);

  CHECK_THROWS_AS(normalize_data(ScalarField(g, 0.0), VectorField(g)), InvalidArgument);
}

TEST_CASE("normalization is idempotent") {
  auto g = TorusGrid::create(32);
  const auto rho = make_density(g, {"star", {{"radius", 0.3}, {"amplitude", 0.2}, {"lobes", 5}}});
  const auto v = make_velocity(g, {"random", {{"amplitude", 1.0}, {"K", 1.0}, {"nu", 10.0}, {"seed", 4}}});
  const auto once = normalize_data(rho, v);
  const auto twice = normalize_data(once.rho, once.v);
  CHECK(max_abs_diff(once.rho, twice.rho) < 1e-14);
  CHECK(max_abs_diff(once.v, twice.v) < 1e-14);
}

TEST_CASE("clamp and renormalize") {
  auto g = TorusGrid::create(16);
  auto c = clamp_and_renormalize(ScalarField(g, 1.0), 0.1);
  CHECK(max_abs_diff(c.rho, ScalarField(g, 1.0)) < 1e-15);
  CHECK(c.xi >= 1.0);

  c = clamp_and_renormalize(half_indicator(g, 2.0), 0.1);
  CHECK(c.xi == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(std::abs(c.rho.mean() - 1.0) <= 1e-12);
  CHECK(c.rho.max() == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(c.rho.min() == doctest::Approx(0.1));

  CHECK_THROWS_AS(clamp_and_renormalize(ScalarField(g, 1.0), 0.0), InvalidArgument);
  CHECK_THROWS_AS(clamp_and_renormalize(ScalarField(g, 1.0), 1.0), InvalidArgument);
  CHECK_THROWS_AS(clamp_and_renormalize(ScalarField(g, 2.0), 0.5), InvalidArgument);
}

TEST_CASE("clamped data converges to the original") {
  auto g = TorusGrid::create(64);
  const auto rho = normalize_data(make_density(g, {"disc", {{"radius", 0.3}}}), VectorField(g)).rho;
  double prev = 1e300;
  for (double delta : {0.1, 0.01, 0.001}) {
    const double d = l1_distance(clamp_and_renormalize(rho, delta).rho, rho);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("mollifier") {
  auto g = TorusGrid::create(64);
  CHECK(max_abs_diff(mollify(ScalarField(g, 2.5), 0.05), ScalarField(g, 2.5)) < 1e-14);

  const double sigma = 0.03;
  const auto s = ScalarField::sample(g, [](double x, double) { return std::sin(kTwoPi * x); });
  CHECK(max_abs_diff(mollify(s, sigma), s * std::exp(-2.0 * M_PI * M_PI * sigma * sigma)) < 1e-14);

  const auto ind = make_density(g, {"square", {{"half_side", 0.2}}});
  const auto m = mollify(ind, 3.0 * g->h());
  CHECK(m.min() >= -1e-12);
  CHECK(m.max() <= 1.0 + 1e-12);
  CHECK(std::abs(m.mean() - ind.mean()) < 1e-15);
}

TEST_CASE("clamp then mollify keeps the mass and the floor") {
  auto g = TorusGrid::create(64);
  const double delta = 0.05;
  const auto rho = normalize_data(make_density(g, {"disc", {{"radius", 0.25}}}), VectorField(g)).rho;
  const auto out = mollify(clamp_and_renormalize(rho, delta).rho, 4.0 * g->h());
  CHECK(std::abs(out.mean() - 1.0) <= 1e-12);
  CHECK(out.min() >= delta * (1.0 - 1e-12));
}

TEST_CASE("shape library") {
  auto g = TorusGrid::create(64);
  const auto disc = make_density(g, {"disc", {{"radius", 0.25}}});
  CHECK(disc.max() == 1.0);
  CHECK(disc.min() == 0.0);
  CHECK(disc.mean() == doctest::Approx(M_PI * 0.25 * 0.25).epsilon(0.02));
  const auto sq = make_density(g, {"square", {{"half_side", 0.25}}});
  CHECK(sq.mean() == doctest::Approx(31.0 * 31.0 / (64.0 * 64.0)).epsilon(1e-14));  // edge nodes lie outside
  const auto smooth = make_density(g, {"smooth", {{"amplitude", 0.3}}});
  CHECK(smooth.min() == doctest::Approx(0.7));
  CHECK(smooth.mean() == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_density(g, {"blob", {}}), InvalidArgument);

  const auto tg = make_velocity(g, {"taylor_green", {{"amplitude", 1.0}}});
  CHECK(max_abs(divergence(tg)) < 1e-12);
  const auto shear = make_velocity(g, {"shear", {{"amplitude", 2.0}}});
  CHECK(max_abs(shear.x) == doctest::Approx(2.0));
  CHECK(max_abs(shear.y) == 0.0);
  CHECK_THROWS_AS(make_velocity(g, {"vortex", {}}), InvalidArgument);
}

TEST_CASE("random velocity hits its targets") {
  auto g = TorusGrid::create(64);
  const double nu = 40.0, k = 2.0;
  const auto v =
      make_velocity(g, {"random", {{"amplitude", 1.5}, {"K", k}, {"nu", nu}, {"seed", 9}, {"kmax", 6}, {"slope", 1.0}}});
  CHECK(gradient_l2(leray_project(v).solenoidal) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(norm(divergence(v), Norm::L(2)) == doctest::Approx(k / std::sqrt(nu)).epsilon(1e-12));

  const auto sol = make_velocity(g, {"random", {{"amplitude", 1.0}, {"K", 0.0}, {"seed", 9}}});
  CHECK(max_abs(divergence(sol)) < 1e-12);

  const auto again =
      make_velocity(g, {"random", {{"amplitude", 1.5}, {"K", k}, {"nu", nu}, {"seed", 9}, {"kmax", 6}, {"slope", 1.0}}});
  CHECK(max_abs_diff(v, again) == 0.0);
}

TEST_CASE("band-limited sampler") {
  auto g = TorusGrid::create(32);
  const auto f = random_band_limited(g, 4, 1.5, 12);
  CHECK(std::abs(f.mean()) < 1e-15);
  CHECK(norm(f, Norm::L(2)) == doctest::Approx(1.0).epsilon(1e-12));
  const auto c = to_spectral(f);
  for (std::size_t j = 0; j < g->n(); ++j)
    for (std::size_t i = 0; i < g->half(); ++i) {
      const int kx = g->kx(i), ky = g->ky(j);
      if (kx * kx + ky * ky > 16) CHECK(std::abs(c(i, j)) < 1e-14);
    }
}

}  // TEST_SUITE
