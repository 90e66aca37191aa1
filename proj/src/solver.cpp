#include "cnslab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cnslab/error.hpp"
#include "cnslab/spectral.hpp"

namespace cns {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi2 = kTwoPi * kTwoPi;

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// Per-mode wavenumber data for the viscous operator. The Laplacian uses the
// true |k|², the grad-div part the derivative wavenumbers (zero on Nyquist lines).
struct ModeTable {
  std::vector<double> k2;
  std::vector<double> kdx;
  std::vector<double> kdy;

  explicit ModeTable(const TorusGrid& g) : k2(g.spectral_size()), kdx(g.spectral_size()), kdy(g.spectral_size()) {
    const std::size_t n = g.n();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < g.half(); ++i) {
        const std::size_t idx = j * g.half() + i;
        const double kx = g.kx(i);
        const double ky = g.ky(j);
        k2[idx] = kFourPi2 * (kx * kx + ky * ky);
        kdx[idx] = (i == n / 2) ? 0.0 : kTwoPi * kx;
        kdy[idx] = (j == n / 2) ? 0.0 : kTwoPi * ky;
      }
    }
  }
};

// (Lv)^ = -(μ|k|² v̂ + (λ+μ) kd (kd·v̂)).
void viscous_modes(const ModeTable& t, double mu, double lambda, std::span<const Complex> vx,
                   std::span<const Complex> vy, std::span<Complex> ox, std::span<Complex> oy) {
  const double lm = lambda + mu;
  for (std::size_t idx = 0; idx < t.k2.size(); ++idx) {
    const Complex proj = t.kdx[idx] * vx[idx] + t.kdy[idx] * vy[idx];
    ox[idx] = -(mu * t.k2[idx] * vx[idx] + lm * t.kdx[idx] * proj);
    oy[idx] = -(mu * t.k2[idx] * vy[idx] + lm * t.kdy[idx] * proj);
  }
}

// Galerkin block of ρ - τL on the low Fourier modes |kx|, |ky| <= K, factored
// once per solve. Used as the low-mode part of the preconditioner.
class CoarseBlock {
 public:
  CoarseBlock(const TorusGrid& g, const ScalarField& rho, double mu, double lambda, double tau, int k_max)
      : k_(k_max), width_(2 * k_max + 1), modes_(static_cast<std::size_t>(width_ * width_)) {
    if (k_ <= 0) return;
    const std::size_t n = g.n();
    std::vector<Complex> rho_hat(g.spectral_size());
    g.forward(rho.values(), rho_hat);
    auto coeff = [&](int kx, int ky) {
      const auto wrap = [n](int k) { return static_cast<std::size_t>((k % static_cast<int>(n) + static_cast<int>(n)) % static_cast<int>(n)); };
      if (kx >= 0) return rho_hat[wrap(ky) * g.half() + static_cast<std::size_t>(kx)];
      return std::conj(rho_hat[wrap(-ky) * g.half() + static_cast<std::size_t>(-kx)]);
    };
    const std::size_t m = modes_;
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
    for (std::size_t p = 0; p < m; ++p) {
      const int px = mode_x(p), py = mode_y(p);
      for (std::size_t q = 0; q < m; ++q) {
        const Complex r = coeff(px - mode_x(q), py - mode_y(q));
        e(p, q) = r;
        e(m + p, m + q) = r;
      }
      const double kx = kTwoPi * px, ky = kTwoPi * py;
      const double k2 = kx * kx + ky * ky;
      e(p, p) += tau * (mu * k2 + (lambda + mu) * kx * kx);
      e(m + p, m + p) += tau * (mu * k2 + (lambda + mu) * ky * ky);
      e(p, m + p) += tau * (lambda + mu) * kx * ky;
      e(m + p, p) += tau * (lambda + mu) * kx * ky;
    }
    llt_.compute(e);
    if (llt_.info() != Eigen::Success) throw NumericalFailure("implicit viscous solve: coarse block is not positive definite");
    rhs_.resize(static_cast<Eigen::Index>(2 * m));
  }

  bool active() const { return k_ > 0; }
  int k_max() const { return k_; }
  bool contains(int kx, int ky) const { return std::abs(kx) <= k_ && std::abs(ky) <= k_; }

  // Replaces the low modes of (sx, sy) by E^{-1} applied to them.
  void solve(const TorusGrid& g, std::span<Complex> sx, std::span<Complex> sy) {
    const std::size_t m = modes_;
    for (std::size_t p = 0; p < m; ++p) {
      rhs_(static_cast<Eigen::Index>(p)) = fetch(g, sx, mode_x(p), mode_y(p));
      rhs_(static_cast<Eigen::Index>(m + p)) = fetch(g, sy, mode_x(p), mode_y(p));
    }
    rhs_ = llt_.solve(rhs_);
    for (std::size_t p = 0; p < m; ++p) {
      const int px = mode_x(p), py = mode_y(p);
      if (px < 0) continue;
      const std::size_t idx = row(g, py) * g.half() + static_cast<std::size_t>(px);
      sx[idx] = rhs_(static_cast<Eigen::Index>(p));
      sy[idx] = rhs_(static_cast<Eigen::Index>(m + p));
    }
  }

 private:
  int mode_x(std::size_t p) const { return static_cast<int>(p % static_cast<std::size_t>(width_)) - k_; }
  int mode_y(std::size_t p) const { return static_cast<int>(p / static_cast<std::size_t>(width_)) - k_; }
  static std::size_t row(const TorusGrid& g, int ky) {
    const int n = static_cast<int>(g.n());
    return static_cast<std::size_t>((ky + n) % n);
  }
  static Complex fetch(const TorusGrid& g, std::span<const Complex> s, int kx, int ky) {
    if (kx >= 0) return s[row(g, ky) * g.half() + static_cast<std::size_t>(kx)];
    return std::conj(s[row(g, -ky) * g.half() + static_cast<std::size_t>(-kx)]);
  }

  int k_;
  int width_;
  std::size_t modes_;
  Eigen::LLT<Eigen::MatrixXcd> llt_;
  Eigen::VectorXcd rhs_;
};

// Low-mode block size K of the preconditioner. The block is only needed when
// the density contrast is large; K covers the modes where τμ4π²|k|² < max ρ,
// capped at min(8, n/16).
int coarse_modes_for(const TorusGrid& g, const ScalarField& rho, double mu, double tau) {
  const double mean = rho.mean();
  const double lo = rho.min();
  const double hi = rho.max();
  if (lo >= 0.2 * mean && hi <= 5.0 * mean) return 0;
  const int cap = std::min<int>(8, static_cast<int>(g.n() / 16));
  const double k = std::ceil(std::sqrt(hi / (tau * mu * kFourPi2)));
  return std::clamp(static_cast<int>(std::min(k, 1e6)), std::min(2, cap), cap);
}

// Conjugate-gradient solver for (ρ - τL) V = r.
class ImplicitViscousSolver {
 public:
  ImplicitViscousSolver(const ScalarField& rho, const SolverConfig& cfg, double tau)
      : grid_(rho.grid_ptr()),
        modes_(*grid_),
        rho_(rho),
        mu_(cfg.mu),
        lambda_(cfg.lambda),
        tau_(tau),
        rho_ref_(std::max(rho.mean(), 1e-300)),
        tol_(cfg.solver_tolerance),
        max_iter_(cfg.solver_max_iterations),
        sx_(grid_->spectral_size()),
        sy_(grid_->spectral_size()),
        tx_(grid_->spectral_size()),
        ty_(grid_->spectral_size()),
        coarse_(*grid_, rho, cfg.mu, cfg.lambda, tau, coarse_modes_for(*grid_, rho, cfg.mu, tau)) {}

  // Lv into out (physical).
  void apply_L(const VectorField& v, VectorField& out) {
    grid_->forward(v.x.values(), sx_);
    grid_->forward(v.y.values(), sy_);
    viscous_modes(modes_, mu_, lambda_, sx_, sy_, tx_, ty_);
    grid_->inverse(tx_, out.x.values());
    grid_->inverse(ty_, out.y.values());
  }

  // z = M^{-1} r and Lz, with M the constant-density operator ρ_ref - τL.
  void precondition(const VectorField& r, VectorField& z, VectorField& lz) {
    grid_->forward(r.x.values(), sx_);
    grid_->forward(r.y.values(), sy_);
    const double lm = lambda_ + mu_;
    const std::size_t half = grid_->half();
    for (std::size_t idx = 0; idx < sx_.size(); ++idx) {
      if (coarse_.active() && coarse_.contains(grid_->kx(idx % half), grid_->ky(idx / half))) continue;
      const double kdx = modes_.kdx[idx];
      const double kdy = modes_.kdy[idx];
      const double kd2 = kdx * kdx + kdy * kdy;
      const double a_perp = rho_ref_ + tau_ * mu_ * modes_.k2[idx];
      if (kd2 == 0.0) {
        sx_[idx] /= a_perp;
        sy_[idx] /= a_perp;
        continue;
      }
      const double a_par = a_perp + tau_ * lm * kd2;
      const Complex par = (kdx * sx_[idx] + kdy * sy_[idx]) / kd2;
      const Complex px = sx_[idx] - kdx * par;
      const Complex py = sy_[idx] - kdy * par;
      sx_[idx] = px / a_perp + kdx * par / a_par;
      sy_[idx] = py / a_perp + kdy * par / a_par;
    }
    if (coarse_.active()) coarse_.solve(*grid_, sx_, sy_);
    viscous_modes(modes_, mu_, lambda_, sx_, sy_, tx_, ty_);
    grid_->inverse(sx_, z.x.values());
    grid_->inverse(sy_, z.y.values());
    grid_->inverse(tx_, lz.x.values());
    grid_->inverse(ty_, lz.y.values());
  }

  // A v = ρv - τ Lv, given Lv.
  void combine(const VectorField& v, const VectorField& lv, VectorField& out) const {
    for (std::size_t k = 0; k < v.x.size(); ++k) {
      out.x[k] = rho_[k] * v.x[k] - tau_ * lv.x[k];
      out.y[k] = rho_[k] * v.y[k] - tau_ * lv.y[k];
    }
  }

  MomentumSolve solve(const VectorField& rhs, const VectorField& guess) {
    VectorField x = guess;
    VectorField lx(grid_), ax(grid_);
    apply_L(x, lx);
    combine(x, lx, ax);
    VectorField r = rhs - ax;
    const double bnorm = std::sqrt(inner(rhs, rhs));
    const double target = tol_ * std::max(bnorm, 1e-300);
    VectorField z(grid_), lz(grid_), p(grid_), lp(grid_), ap(grid_);
    int it = 0;
    double rnorm = std::sqrt(inner(r, r));
    if (rnorm > target) {
      precondition(r, z, lz);
      p = z;
      lp = lz;
      double rz = inner(r, z);
      for (it = 1; it <= max_iter_; ++it) {
        combine(p, lp, ap);
        const double pap = inner(p, ap);
        if (!(pap > 0.0)) throw NumericalFailure("implicit viscous solve: operator lost positivity");
        const double alpha = rz / pap;
        for (std::size_t k = 0; k < x.x.size(); ++k) {
          x.x[k] += alpha * p.x[k];
          x.y[k] += alpha * p.y[k];
          r.x[k] -= alpha * ap.x[k];
          r.y[k] -= alpha * ap.y[k];
        }
        rnorm = std::sqrt(inner(r, r));
        if (rnorm <= target) break;
        precondition(r, z, lz);
        const double rz_new = inner(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < x.x.size(); ++k) {
          p.x[k] = z.x[k] + beta * p.x[k];
          p.y[k] = z.y[k] + beta * p.y[k];
          lp.x[k] = lz.x[k] + beta * lp.x[k];
          lp.y[k] = lz.y[k] + beta * lp.y[k];
        }
      }
      if (it > max_iter_) {
        std::ostringstream os;
        os << "implicit viscous solve did not converge in " << max_iter_ << " iterations (residual "
           << rnorm / std::max(bnorm, 1e-300) << ")";
        throw NumericalFailure(os.str());
      }
    }
    // Exact momentum balance: ∫ρV = ∫rhs, since ∫Lv = 0.
    const double rho_mean = rho_.mean();
    x.x += (rhs.x.mean() - inner(rho_, x.x)) / rho_mean;
    x.y += (rhs.y.mean() - inner(rho_, x.y)) / rho_mean;
    return {std::move(x), it};
  }

 private:
  GridPtr grid_;
  ModeTable modes_;
  const ScalarField& rho_;
  double mu_;
  double lambda_;
  double tau_;
  double rho_ref_;
  double tol_;
  int max_iter_;
  std::vector<Complex> sx_, sy_, tx_, ty_;
  CoarseBlock coarse_;
};

// Velocity component shifted by half a cell along one axis (spectral interpolation).
ScalarField face_values(const ScalarField& u, bool along_x) {
  const auto& g = u.grid();
  const double half_h = 0.5 * g.h();
  const int nyq = static_cast<int>(g.n() / 2);
  return apply_multiplier(u, [=](int kx, int ky) {
    const int k = along_x ? kx : ky;
    if (std::abs(k) == nyq) return Complex(0.0, 0.0);
    return std::polar(1.0, kTwoPi * k * half_h);
  });
}

// One conservative 1D sweep over every line of the grid.
//   line(l, i) maps (line, position) to the flat index.
template <typename Index>
void sweep(std::vector<ScalarField*>& q, const ScalarField& uface, double dt, Limiter limiter, Index line_index) {
  const std::size_t n = uface.grid().n();
  const double lam = dt / uface.grid().h();
  std::vector<double> cell(n), flux(n), stage(n), u(n);
  auto compute_flux = [&](const std::vector<double>& c) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t ip = (i + 1) % n;
      double left = c[i];
      double right = c[ip];
      if (limiter == Limiter::Minmod) {
        const std::size_t im = (i + n - 1) % n;
        const std::size_t ipp = (i + 2) % n;
        left += 0.5 * minmod(c[i] - c[im], c[ip] - c[i]);
        right -= 0.5 * minmod(c[ip] - c[i], c[ipp] - c[ip]);
      }
      flux[i] = u[i] >= 0.0 ? u[i] * left : u[i] * right;
    }
  };
  auto euler = [&](const std::vector<double>& c, std::vector<double>& out) {
    compute_flux(c);
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i] - lam * (flux[i] - flux[(i + n - 1) % n]);
  };
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t i = 0; i < n; ++i) u[i] = uface[line_index(l, i)];
    for (ScalarField* f : q) {
      for (std::size_t i = 0; i < n; ++i) cell[i] = (*f)[line_index(l, i)];
      if (limiter == Limiter::None) {
        euler(cell, stage);
        for (std::size_t i = 0; i < n; ++i) (*f)[line_index(l, i)] = stage[i];
      } else {
        std::vector<double> second(n);
        euler(cell, stage);
        euler(stage, second);
        for (std::size_t i = 0; i < n; ++i) (*f)[line_index(l, i)] = 0.5 * (cell[i] + second[i]);
      }
    }
  }
}

void clip_density(ScalarField& rho) {
  const double scale = std::max(1.0, rho.max());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (rho[k] < 0.0) {
      if (rho[k] < -1e-14 * scale) {
        std::ostringstream os;
        os << "transport produced negative density " << rho[k] << " at index " << k;
        throw NumericalFailure(os.str());
      }
      rho[k] = 0.0;
    }
  }
}

VectorField advect_velocity_midpoint(const VectorField& v, double dt) {
  const auto gx = gradient(v.x);
  const auto gy = gradient(v.y);
  const auto vx = dealias(v.x);
  const auto vy = dealias(v.y);
  ScalarField ax = dealias(vx * dealias(gx.x) + vy * dealias(gx.y));
  ScalarField ay = dealias(vx * dealias(gy.x) + vy * dealias(gy.y));
  return {v.x - 0.5 * dt * ax, v.y - 0.5 * dt * ay};
}

}  // namespace

Limiter parse_limiter(const std::string& name) {
  if (name == "none") return Limiter::None;
  if (name == "minmod") return Limiter::Minmod;
  throw InvalidArgument("unknown limiter '" + name + "' (expected none or minmod)");
}

std::string to_string(Limiter l) { return l == Limiter::None ? "none" : "minmod"; }

void SolverConfig::validate() const {
  if (!(mu > 0.0)) throw InvalidArgument("SolverConfig: mu must be positive");
  if (!(nu() > 0.0)) throw InvalidArgument("SolverConfig: nu = lambda + 2 mu must be positive");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("SolverConfig: cfl must lie in (0, 1]");
  if (!(dt_max > 0.0)) throw InvalidArgument("SolverConfig: dt_max must be positive");
  if (!(solver_tolerance > 0.0)) throw InvalidArgument("SolverConfig: solver_tolerance must be positive");
}

std::pair<double, double> FluidState::momentum() const { return {inner(rho, v.x), inner(rho, v.y)}; }

double compute_dt(const FluidState& state, const SolverConfig& config) {
  const double vmax = norm(state.v, Norm::Linf());
  double dp = 0.0;
  for (double r : state.rho.values()) dp = std::max(dp, config.law.dpressure(std::max(r, 0.0)));
  const double cs = std::sqrt(dp);
  const double h = state.rho.grid().h();
  const double speed = vmax + cs;
  double dt = speed > 0.0 ? config.cfl * h / speed : config.dt_max;
  dt = std::min(dt, config.dt_max);
  return std::max(dt, 1e-12 * config.dt_max);
}

VectorField viscous_operator(const VectorField& v, double mu, double lambda) {
  const auto& g = v.grid();
  ModeTable modes(g);
  std::vector<Complex> sx(g.spectral_size()), sy(g.spectral_size()), ox(g.spectral_size()), oy(g.spectral_size());
  g.forward(v.x.values(), sx);
  g.forward(v.y.values(), sy);
  viscous_modes(modes, mu, lambda, sx, sy, ox, oy);
  VectorField out(v.grid_ptr());
  g.inverse(ox, out.x.values());
  g.inverse(oy, out.y.values());
  return out;
}

TransportResult transport(const ScalarField& rho, const VectorField& momentum, const VectorField& u, double dt,
                          Limiter limiter) {
  require_same_grid(rho.grid(), u.grid(), "transport");
  require_same_grid(rho.grid(), momentum.grid(), "transport");
  const auto& g = rho.grid();
  const std::size_t n = g.n();
  const ScalarField ux = face_values(u.x, true);
  const ScalarField uy = face_values(u.y, false);
  const double courant = std::max(norm(ux, Norm::Linf()), norm(uy, Norm::Linf())) * dt / g.h();
  if (courant > 1.0) {
    std::ostringstream os;
    os << "CFL violated: max|u| dt / h = " << courant;
    throw CflViolation(os.str());
  }
  TransportResult out{rho, momentum};
  std::vector<ScalarField*> q{&out.rho, &out.momentum.x, &out.momentum.y};
  auto row = [n](std::size_t l, std::size_t i) { return l * n + i; };
  auto col = [n](std::size_t l, std::size_t i) { return i * n + l; };
  sweep(q, ux, 0.5 * dt, limiter, row);
  sweep(q, uy, dt, limiter, col);
  sweep(q, ux, 0.5 * dt, limiter, row);
  clip_density(out.rho);
  return out;
}

ScalarField advance_density(const ScalarField& rho, const VectorField& v, double dt, Limiter limiter) {
  VectorField zero(rho.grid_ptr());
  return transport(rho, zero, v, dt, limiter).rho;
}

MomentumSolve advance_momentum(const ScalarField& rho, const VectorField& momentum, const SolverConfig& config,
                               double dt, const VectorField* initial_guess) {
  require_same_grid(rho.grid(), momentum.grid(), "advance_momentum");
  if (!(dt > 0.0)) throw InvalidArgument("advance_momentum: dt must be positive");
  static const double kGamma = 1.0 - 1.0 / std::numbers::sqrt2;
  const double tau = kGamma * dt;
  const VectorField force = gradient(dealias(pressure(rho, config.law)));
  ImplicitViscousSolver solver(rho, config, tau);

  VectorField guess = initial_guess != nullptr ? *initial_guess : VectorField(rho.grid_ptr());
  // Stage 1: (ρ - τL) V1 = m - τ g.
  VectorField rhs1 = momentum - tau * force;
  auto s1 = solver.solve(rhs1, guess);
  // Stage 2: (ρ - τL) V2 = m + (1-γ) dt (L V1 - g) - τ g.
  VectorField lv1(rho.grid_ptr());
  solver.apply_L(s1.v, lv1);
  VectorField rhs2 = momentum + (1.0 - kGamma) * dt * (lv1 - force) - tau * force;
  VectorField guess2 = guess + (1.0 / kGamma) * (s1.v - guess);
  auto s2 = solver.solve(rhs2, guess2);
  return {std::move(s2.v), s1.iterations + s2.iterations};
}

VectorField advance_momentum(const FluidState& state, const SolverConfig& config, double dt) {
  const VectorField m = state.rho * state.v;
  return advance_momentum(state.rho, m, config, dt, &state.v).v;
}

std::pair<FluidState, StepReport> step(const FluidState& state, const SolverConfig& config) {
  StepReport report;
  double dt = compute_dt(state, config);
  const double mass0 = state.mass();
  const auto [px0, py0] = state.momentum();
  for (int halvings = 0;; ++halvings) {
    try {
      const VectorField m0 = state.rho * state.v;
      auto first = advance_momentum(state.rho, m0, config, 0.5 * dt, &state.v);
      const VectorField vmid = advect_velocity_midpoint(first.v, dt);
      auto moved = transport(state.rho, state.rho * first.v, vmid, dt, config.limiter);
      auto second = advance_momentum(moved.rho, moved.momentum, config, 0.5 * dt, &first.v);
      FluidState next{std::move(moved.rho), std::move(second.v), state.t + dt};
      report.dt = dt;
      report.halvings = halvings;
      report.solver_iterations = first.iterations + second.iterations;
      report.max_speed = norm(next.v, Norm::Linf());
      report.sup_rho = next.rho.max();
      report.mass_drift = std::abs(next.mass() - mass0) / std::max(std::abs(mass0), 1e-300);
      const auto [px1, py1] = next.momentum();
      report.momentum_drift = std::hypot(px1 - px0, py1 - py0);
      return {std::move(next), report};
    } catch (const CflViolation& e) {
      if (halvings >= 2) {
        throw NumericalFailure(std::string("step aborted after three dt halvings: ") + e.what());
      }
      dt *= 0.5;
    }
  }
}

FluidState integrate(FluidState state, const SolverConfig& config, double t_end,
                     const std::function<void(const FluidState&, const StepReport&)>& observer) {
  config.validate();
  SolverConfig cfg = config;
  while (state.t < t_end - 1e-14 * std::max(1.0, t_end)) {
    cfg.dt_max = std::min(config.dt_max, t_end - state.t);
    auto [next, report] = step(state, cfg);
    state = std::move(next);
    if (observer) observer(state, report);
  }
  return state;
}

}  // namespace cns
