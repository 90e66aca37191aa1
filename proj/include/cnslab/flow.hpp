#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "cnslab/field.hpp"

namespace cns {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Wraps a coordinate into [0, 1).
double wrap_unit(double s);
/// Shortest periodic distance on the unit torus.
double torus_distance(Point a, Point b);

/// Periodic bicubic Hermite interpolant. Nodal values and the derivatives
/// f_x, f_y, f_xy are taken from the spectral representation, so band-limited
/// fields are reproduced to O(h⁴).
class CubicInterpolant {
 public:
  explicit CubicInterpolant(const ScalarField& f);
  double operator()(Point p) const;

 private:
  std::size_t n_;
  double h_;
  std::vector<double> f_, fx_, fy_, fxy_;
};

class VelocityInterpolant {
 public:
  explicit VelocityInterpolant(const VectorField& v) : x_(v.x), y_(v.y) {}
  Point operator()(Point p) const { return {x_(p), y_(p)}; }

 private:
  CubicInterpolant x_, y_;
};

/// Periodic bilinear interpolation of nodal values.
double bilinear(const ScalarField& f, Point p);

struct ParticleSet {
  std::vector<Point> seeds;
  std::vector<Point> positions;  ///< X(t, y), wrapped to [0,1)²
  double t = 0.0;
  /// ∫₀ᵗ div v(τ, X(τ,y)) dτ per particle.
  std::vector<double> div_integral;
  /// Recorded snapshots of positions (see FlowTracker::record).
  std::vector<double> history_times;
  std::vector<std::vector<Point>> history;
};

/// Online integration of dX/dτ = v(τ, X) over a velocity series. Each call to
/// advance() takes one Heun step between the previous snapshot and the new one
/// (v linear in time across the step), so the series never has to be stored.
class FlowTracker {
 public:
  FlowTracker(std::vector<Point> seeds, const VectorField& v0, double t0 = 0.0);

  void advance(const VectorField& v, double t);
  void record();

  const ParticleSet& particles() const { return set_; }
  /// exp(∫ div v) along each path: the Jacobian of X(t, ·).
  double jacobian(std::size_t k) const;

 private:
  ParticleSet set_;
  VelocityInterpolant v_;
  CubicInterpolant div_;
  std::vector<double> div_now_;
};

/// Flow of a velocity frozen in time, RK2 with step dt (the last step is shortened).
ParticleSet integrate_frozen_flow(const VectorField& v, std::vector<Point> seeds, double t_end, double dt);

/// Flow over a stored series (times strictly increasing, one field per time).
ParticleSet integrate_flow(const std::vector<double>& times, const std::vector<VectorField>& series,
                           std::vector<Point> seeds);

// ------------------------------------------------------- density identity

/// ρ(t, X(t,y)) = ρ₀(y) exp(-∫₀ᵗ div v(τ, X(τ,y)) dτ), left side by bilinear
/// interpolation of ρ(t), right side from the path integral.
class TrajectoryDensity {
 public:
  /// Seeds closer than 2h to a node where {ρ₀ < eps_vac} changes are skipped.
  TrajectoryDensity(const ScalarField& rho0, const VectorField& v0, std::vector<Point> seeds, double eps_vac,
                    double t0 = 0.0);

  void advance(const VectorField& v, double t);

  struct Residual {
    double t = 0.0;
    double max_relative = 0.0;
    double mean_relative = 0.0;
  };
  /// Relative gap |ρ(t,X) - ρ₀(y)e^{-∫div}| / (ρ₀(y)e^{-∫div}) over kept seeds.
  Residual residual(const ScalarField& rho) const;
  std::size_t kept() const { return rho0_at_seed_.size(); }
  std::size_t skipped() const { return skipped_; }

 private:
  std::size_t skipped_ = 0;
  std::vector<double> rho0_at_seed_;
  FlowTracker tracker_;
};

/// Regular lattice of m×m seeds offset by half a spacing.
std::vector<Point> lattice_seeds(std::size_t m);

// ------------------------------------------------------ log-Lipschitz norm

struct LogLipschitz {
  double bound = 0.0;    ///< ‖v‖₂ + ‖div v‖∞ + ‖curl v‖∞
  double sampled = 0.0;  ///< sup |v(x)-v(y)| / (|x-y|(1 + |log|x-y||)) over random pairs
};

/// Pairs with |x - y| in [2h, 0.25]; deterministic in seed.
LogLipschitz ll_norm(const VectorField& v, std::size_t pairs = 10000, std::uint64_t seed = 1);

/// α_t = exp(-∫₀ᵗ L dτ) by the trapezoid rule; α₀ = 1.
std::vector<double> holder_exponent(const std::vector<double>& times, const std::vector<double>& ll);

// --------------------------------------------------------------- vacuum

struct Polyline {
  std::vector<Point> points;
  bool closed = false;
};

struct VacuumSet {
  ScalarField indicator;  ///< 1 where ρ < eps, else 0
  double eps = 0.0;

  double area() const { return indicator.mean(); }
  /// Marching squares on the indicator at level 1/2, segments chained into polylines.
  std::vector<Polyline> boundary() const;
};

VacuumSet vacuum_set(const ScalarField& rho, double eps);

/// CSV with columns polyline,x,y. Closed polylines repeat their first point.
void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines);
void write_polylines_csv(const std::filesystem::path& path, const std::vector<Polyline>& lines);

struct VacuumComparison {
  double t = 0.0;
  double eulerian_area = 0.0;
  double lagrangian_area = 0.0;
  double symmetric_difference = 0.0;  ///< |A_E Δ A_L|
  double relative = 0.0;              ///< |A_E Δ A_L| / |A_L|
  /// min ρ(t) over nodes at least 2h inside the transported non-vacuum set.
  double interior_min_rho = 0.0;
};

/// Eulerian set {ρ(t) < eps} against the Lagrangian image X(t, V₀) of the
/// initial set V₀ = {ρ₀ < eps}. V₀ is seeded on a sub-grid with `subdivision`
/// points per cell side; each seed deposits its transported area
/// (cell area / subdivision² times the path Jacobian) into the cell it lands in,
/// and cells holding at least half their area form A_L.
class VacuumTracker {
 public:
  VacuumTracker(const ScalarField& rho0, const VectorField& v0, double eps, int subdivision = 4, double t0 = 0.0);

  bool empty() const { return seeds_ == 0; }
  void advance(const VectorField& v, double t);
  VacuumSet lagrangian_set() const;
  VacuumComparison compare(const ScalarField& rho) const;
  double eps() const { return eps_; }

 private:
  GridPtr grid_;
  double eps_;
  int subdivision_;
  std::size_t seeds_ = 0;
  FlowTracker tracker_;
};

}  // namespace cns
