#include "cnslab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_map>

#include "cnslab/error.hpp"
#include "cnslab/parallel.hpp"
#include "cnslab/spectral.hpp"

namespace cns {
namespace {

constexpr std::size_t kChunk = 512;

template <class F>
void for_particles(std::size_t count, F&& body) {
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(count, (c + 1) * kChunk);
    for (std::size_t k = c * kChunk; k < end; ++k) body(k);
  });
}

std::size_t wrap_index(long long i, std::size_t n) {
  const long long m = static_cast<long long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

std::size_t nearest_node(double s, double h, std::size_t n) {
  return wrap_index(static_cast<long long>(std::floor(s / h + 0.5)), n);
}

double wrapped_delta(double d) { return d - std::round(d); }

}  // namespace

double wrap_unit(double s) {
  double w = s - std::floor(s);
  return w >= 1.0 ? 0.0 : w;
}

double torus_distance(Point a, Point b) {
  return std::hypot(wrapped_delta(a.x - b.x), wrapped_delta(a.y - b.y));
}

CubicInterpolant::CubicInterpolant(const ScalarField& f) : n_(f.grid().n()), h_(f.grid().h()) {
  const ScalarField fx = partial_x(f);
  const ScalarField fy = partial_y(f);
  const ScalarField fxy = partial_y(fx);
  f_.assign(f.values().begin(), f.values().end());
  fx_.assign(fx.values().begin(), fx.values().end());
  fy_.assign(fy.values().begin(), fy.values().end());
  fxy_.assign(fxy.values().begin(), fxy.values().end());
  for (std::size_t k = 0; k < f_.size(); ++k) {
    fx_[k] *= h_;
    fy_[k] *= h_;
    fxy_[k] *= h_ * h_;
  }
}

double CubicInterpolant::operator()(Point p) const {
  const double sx = wrap_unit(p.x) / h_;
  const double sy = wrap_unit(p.y) / h_;
  const double fi = std::floor(sx), fj = std::floor(sy);
  const double tx = sx - fi, ty = sy - fj;
  const std::size_t i0 = wrap_index(static_cast<long long>(fi), n_), i1 = wrap_index(static_cast<long long>(fi) + 1, n_);
  const std::size_t j0 = wrap_index(static_cast<long long>(fj), n_), j1 = wrap_index(static_cast<long long>(fj) + 1, n_);
  auto basis = [](double t, double* v, double* d) {
    const double t2 = t * t, t3 = t2 * t;
    v[0] = 2.0 * t3 - 3.0 * t2 + 1.0;
    v[1] = 3.0 * t2 - 2.0 * t3;
    d[0] = t3 - 2.0 * t2 + t;
    d[1] = t3 - t2;
  };
  double vx[2], dx[2], vy[2], dy[2];
  basis(tx, vx, dx);
  basis(ty, vy, dy);
  const std::size_t is[2] = {i0, i1}, js[2] = {j0, j1};
  double out = 0.0;
  for (int b = 0; b < 2; ++b) {
    for (int a = 0; a < 2; ++a) {
      const std::size_t k = js[b] * n_ + is[a];
      out += vx[a] * vy[b] * f_[k] + dx[a] * vy[b] * fx_[k] + vx[a] * dy[b] * fy_[k] + dx[a] * dy[b] * fxy_[k];
    }
  }
  return out;
}

double bilinear(const ScalarField& f, Point p) {
  const std::size_t n = f.grid().n();
  const double sx = wrap_unit(p.x) * static_cast<double>(n);
  const double sy = wrap_unit(p.y) * static_cast<double>(n);
  const double fi = std::floor(sx), fj = std::floor(sy);
  const double tx = sx - fi, ty = sy - fj;
  const std::size_t i0 = wrap_index(static_cast<long long>(fi), n), i1 = wrap_index(static_cast<long long>(fi) + 1, n);
  const std::size_t j0 = wrap_index(static_cast<long long>(fj), n), j1 = wrap_index(static_cast<long long>(fj) + 1, n);
  return (1.0 - ty) * ((1.0 - tx) * f(i0, j0) + tx * f(i1, j0)) + ty * ((1.0 - tx) * f(i0, j1) + tx * f(i1, j1));
}

// ------------------------------------------------------------- flow

FlowTracker::FlowTracker(std::vector<Point> seeds, const VectorField& v0, double t0)
    : v_(v0), div_(divergence(v0)) {
  set_.t = t0;
  set_.seeds = std::move(seeds);
  set_.positions.resize(set_.seeds.size());
  set_.div_integral.assign(set_.seeds.size(), 0.0);
  div_now_.resize(set_.seeds.size());
  for (std::size_t k = 0; k < set_.seeds.size(); ++k) {
    set_.positions[k] = {wrap_unit(set_.seeds[k].x), wrap_unit(set_.seeds[k].y)};
    div_now_[k] = div_(set_.positions[k]);
  }
}

void FlowTracker::advance(const VectorField& v, double t) {
  const double dt = t - set_.t;
  if (!(dt > 0.0)) throw InvalidArgument("FlowTracker::advance: snapshot times must increase");
  VelocityInterpolant next(v);
  CubicInterpolant next_div(divergence(v));
  for_particles(set_.positions.size(), [&](std::size_t k) {
    const Point x = set_.positions[k];
    const Point k1 = v_(x);
    const Point k2 = next({x.x + dt * k1.x, x.y + dt * k1.y});
    const Point y{wrap_unit(x.x + 0.5 * dt * (k1.x + k2.x)), wrap_unit(x.y + 0.5 * dt * (k1.y + k2.y))};
    const double d = next_div(y);
    set_.div_integral[k] += 0.5 * dt * (div_now_[k] + d);
    div_now_[k] = d;
    set_.positions[k] = y;
  });
  v_ = std::move(next);
  div_ = std::move(next_div);
  set_.t = t;
}

void FlowTracker::record() {
  set_.history_times.push_back(set_.t);
  set_.history.push_back(set_.positions);
}

double FlowTracker::jacobian(std::size_t k) const { return std::exp(set_.div_integral.at(k)); }

ParticleSet integrate_frozen_flow(const VectorField& v, std::vector<Point> seeds, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw InvalidArgument("integrate_frozen_flow: need dt > 0 and t_end >= 0");
  FlowTracker tracker(std::move(seeds), v);
  const auto steps = static_cast<long long>(std::ceil(t_end / dt - 1e-9));
  for (long long s = 1; s <= steps; ++s) tracker.advance(v, std::min(t_end, static_cast<double>(s) * dt));
  return tracker.particles();
}

ParticleSet integrate_flow(const std::vector<double>& times, const std::vector<VectorField>& series,
                           std::vector<Point> seeds) {
  if (times.empty() || times.size() != series.size()) {
    throw InvalidArgument("integrate_flow: need one velocity field per time");
  }
  FlowTracker tracker(std::move(seeds), series.front(), times.front());
  tracker.record();
  for (std::size_t s = 1; s < times.size(); ++s) {
    tracker.advance(series[s], times[s]);
    tracker.record();
  }
  return tracker.particles();
}

std::vector<Point> lattice_seeds(std::size_t m) {
  std::vector<Point> out;
  out.reserve(m * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      out.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(m),
                     (static_cast<double>(j) + 0.5) / static_cast<double>(m)});
    }
  }
  return out;
}

// ------------------------------------------------- density identity

namespace {

std::vector<Point> keep_away_from_vacuum_edge(const ScalarField& rho0, double eps, std::vector<Point> seeds,
                                              std::size_t& skipped) {
  const auto& g = rho0.grid();
  const std::size_t n = g.n();
  std::vector<Point> kept;
  for (const Point& p : seeds) {
    const auto ci = static_cast<long long>(nearest_node(wrap_unit(p.x), g.h(), n));
    const auto cj = static_cast<long long>(nearest_node(wrap_unit(p.y), g.h(), n));
    bool near_edge = false;
    bool vacuum = false;
    for (long long dj = -3; dj <= 3 && !near_edge; ++dj) {
      for (long long di = -3; di <= 3; ++di) {
        const bool v = rho0(wrap_index(ci + di, n), wrap_index(cj + dj, n)) < eps;
        if (di == -3 && dj == -3) vacuum = v;
        if (v != vacuum) {
          near_edge = true;
          break;
        }
      }
    }
    if (near_edge || vacuum) {
      ++skipped;
    } else {
      kept.push_back(p);
    }
  }
  return kept;
}

}  // namespace

TrajectoryDensity::TrajectoryDensity(const ScalarField& rho0, const VectorField& v0, std::vector<Point> seeds,
                                     double eps_vac, double t0)
    : tracker_(keep_away_from_vacuum_edge(rho0, eps_vac, std::move(seeds), skipped_), v0, t0) {
  for (const Point& p : tracker_.particles().seeds) rho0_at_seed_.push_back(bilinear(rho0, p));
}

void TrajectoryDensity::advance(const VectorField& v, double t) { tracker_.advance(v, t); }

TrajectoryDensity::Residual TrajectoryDensity::residual(const ScalarField& rho) const {
  const auto& set = tracker_.particles();
  Residual r;
  r.t = set.t;
  double sum = 0.0;
  for (std::size_t k = 0; k < rho0_at_seed_.size(); ++k) {
    const double predicted = rho0_at_seed_[k] * std::exp(-set.div_integral[k]);
    const double gap = std::abs(bilinear(rho, set.positions[k]) - predicted) / predicted;
    r.max_relative = std::max(r.max_relative, gap);
    sum += gap;
  }
  if (!rho0_at_seed_.empty()) r.mean_relative = sum / static_cast<double>(rho0_at_seed_.size());
  return r;
}

// ---------------------------------------------------- log-Lipschitz

LogLipschitz ll_norm(const VectorField& v, std::size_t pairs, std::uint64_t seed) {
  LogLipschitz out;
  out.bound = norm(v, Norm::L(2.0)) + norm(divergence(v), Norm::Linf()) + norm(curl2d(v), Norm::Linf());
  if (pairs == 0) return out;
  const VelocityInterpolant interp(v);
  const double rmin = 2.0 * v.grid().h();
  const double rmax = 0.25;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < pairs; ++k) {
    const Point x{unit(rng), unit(rng)};
    const double r = rmin + (rmax - rmin) * unit(rng);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const Point y{x.x + r * std::cos(theta), x.y + r * std::sin(theta)};
    const Point a = interp(x), b = interp(y);
    const double q = std::hypot(a.x - b.x, a.y - b.y) / (r * (1.0 + std::abs(std::log(r))));
    out.sampled = std::max(out.sampled, q);
  }
  return out;
}

std::vector<double> holder_exponent(const std::vector<double>& times, const std::vector<double>& ll) {
  if (times.size() != ll.size()) throw InvalidArgument("holder_exponent: series lengths differ");
  std::vector<double> alpha;
  alpha.reserve(times.size());
  double integral = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) {
      if (times[k] < times[k - 1]) throw InvalidArgument("holder_exponent: times must be nondecreasing");
      integral += 0.5 * (times[k] - times[k - 1]) * (ll[k] + ll[k - 1]);
    }
    alpha.push_back(std::exp(-integral));
  }
  return alpha;
}

// ------------------------------------------------------------ vacuum

VacuumSet vacuum_set(const ScalarField& rho, double eps) {
  return {rho.map([eps](double r) { return r < eps ? 1.0 : 0.0; }), eps};
}

std::vector<Polyline> VacuumSet::boundary() const {
  const auto& g = indicator.grid();
  const std::size_t n = g.n();
  const double h = g.h();
  auto in = [&](std::size_t i, std::size_t j) { return indicator(i % n, j % n) > 0.5; };
  auto h_edge = [&](std::size_t i, std::size_t j) { return 2 * ((j % n) * n + (i % n)); };
  auto v_edge = [&](std::size_t i, std::size_t j) { return 2 * ((j % n) * n + (i % n)) + 1; };
  auto midpoint = [&](std::size_t e) {
    const std::size_t node = e / 2;
    const double x = static_cast<double>(node % n) * h, y = static_cast<double>(node / n) * h;
    return (e % 2 == 0) ? Point{x + 0.5 * h, y} : Point{x, y + 0.5 * h};
  };
  std::unordered_map<std::size_t, std::vector<std::size_t>> links;
  auto connect = [&](std::size_t a, std::size_t b) {
    links[a].push_back(b);
    links[b].push_back(a);
  };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool a = in(i, j), b = in(i + 1, j), c = in(i + 1, j + 1), d = in(i, j + 1);
      std::vector<std::size_t> crossed;
      const std::size_t bottom = h_edge(i, j), right = v_edge(i + 1, j), top = h_edge(i, j + 1), left = v_edge(i, j);
      if (a != b && b != c && c != d && d != a) {
        connect(bottom, left);
        connect(top, right);
        continue;
      }
      if (a != b) crossed.push_back(bottom);
      if (b != c) crossed.push_back(right);
      if (c != d) crossed.push_back(top);
      if (d != a) crossed.push_back(left);
      if (crossed.size() == 2) connect(crossed[0], crossed[1]);
    }
  }
  std::vector<std::size_t> starts;
  for (const auto& [edge, _] : links) starts.push_back(edge);
  std::sort(starts.begin(), starts.end());
  std::unordered_map<std::size_t, bool> used;
  std::vector<Polyline> out;
  for (std::size_t start : starts) {
    if (used[start]) continue;
    Polyline line;
    line.closed = true;
    constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t prev = kNone, cur = start;
    Point last = midpoint(start);
    line.points.push_back(last);
    used[start] = true;
    while (true) {
      const auto& nb = links[cur];
      const std::size_t next = (nb[0] != prev || nb.size() < 2) ? nb[0] : nb[1];
      if (next == start) break;
      if (used[next]) {
        line.closed = false;
        break;
      }
      used[next] = true;
      const Point m = midpoint(next);
      last = {last.x + wrapped_delta(m.x - last.x), last.y + wrapped_delta(m.y - last.y)};
      line.points.push_back(last);
      prev = cur;
      cur = next;
    }
    out.push_back(std::move(line));
  }
  return out;
}

void write_polylines_csv(std::ostream& os, const std::vector<Polyline>& lines) {
  os << "polyline,x,y\n";
  os.precision(17);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    for (const Point& p : lines[k].points) os << k << ',' << p.x << ',' << p.y << '\n';
    if (lines[k].closed && !lines[k].points.empty()) {
      os << k << ',' << lines[k].points.front().x << ',' << lines[k].points.front().y << '\n';
    }
  }
}

void write_polylines_csv(const std::filesystem::path& path, const std::vector<Polyline>& lines) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_polylines_csv(os, lines);
}

namespace {

std::vector<Point> vacuum_seeds(const ScalarField& rho0, double eps, int subdivision) {
  if (subdivision < 1) throw InvalidArgument("VacuumTracker: subdivision must be >= 1");
  const auto& g = rho0.grid();
  const double h = g.h();
  std::vector<Point> seeds;
  for (std::size_t j = 0; j < g.n(); ++j) {
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (!(rho0(i, j) < eps)) continue;
      for (int b = 0; b < subdivision; ++b) {
        for (int a = 0; a < subdivision; ++a) {
          seeds.push_back({wrap_unit(g.x(i) + ((a + 0.5) / subdivision - 0.5) * h),
                           wrap_unit(g.y(j) + ((b + 0.5) / subdivision - 0.5) * h)});
        }
      }
    }
  }
  return seeds;
}

}  // namespace

VacuumTracker::VacuumTracker(const ScalarField& rho0, const VectorField& v0, double eps, int subdivision, double t0)
    : grid_(rho0.grid_ptr()), eps_(eps), subdivision_(subdivision),
      tracker_(vacuum_seeds(rho0, eps, subdivision), v0, t0) {
  seeds_ = tracker_.particles().seeds.size();
}

void VacuumTracker::advance(const VectorField& v, double t) { tracker_.advance(v, t); }

VacuumSet VacuumTracker::lagrangian_set() const {
  const std::size_t n = grid_->n();
  const double h = grid_->h();
  const auto& set = tracker_.particles();
  std::vector<double> deposit(n * n, 0.0);
  const double share = 1.0 / static_cast<double>(subdivision_ * subdivision_);
  for (std::size_t k = 0; k < set.positions.size(); ++k) {
    const std::size_t i = nearest_node(set.positions[k].x, h, n);
    const std::size_t j = nearest_node(set.positions[k].y, h, n);
    deposit[j * n + i] += share * tracker_.jacobian(k);
  }
  ScalarField ind(grid_);
  for (std::size_t k = 0; k < deposit.size(); ++k) ind[k] = deposit[k] >= 0.5 ? 1.0 : 0.0;
  return {std::move(ind), eps_};
}

VacuumComparison VacuumTracker::compare(const ScalarField& rho) const {
  const VacuumSet eul = vacuum_set(rho, eps_);
  const VacuumSet lag = lagrangian_set();
  const std::size_t n = grid_->n();
  VacuumComparison c;
  c.t = tracker_.particles().t;
  c.eulerian_area = eul.area();
  c.lagrangian_area = lag.area();
  double diff = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) diff += std::abs(eul.indicator[k] - lag.indicator[k]);
  c.symmetric_difference = diff / static_cast<double>(rho.size());
  c.relative = c.lagrangian_area > 0.0 ? c.symmetric_difference / c.lagrangian_area : 0.0;
  c.interior_min_rho = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      bool interior = true;
      for (long long dj = -2; dj <= 2 && interior; ++dj) {
        for (long long di = -2; di <= 2; ++di) {
          if (lag.indicator(wrap_index(static_cast<long long>(i) + di, n), wrap_index(static_cast<long long>(j) + dj, n)) >
              0.5) {
            interior = false;
            break;
          }
        }
      }
      if (interior) c.interior_min_rho = std::min(c.interior_min_rho, rho(i, j));
    }
  }
  return c;
}

}  // namespace cns
