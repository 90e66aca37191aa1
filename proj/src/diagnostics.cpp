#include "cnslab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cnslab/error.hpp"
#include "cnslab/spectral.hpp"

namespace cns {

double total_energy(const FluidState& state, const PressureLaw& law) {
  const auto e = potential_energy(state.rho, law);
  long double s = 0.0L;
  for (std::size_t k = 0; k < state.rho.size(); ++k) {
    const double v2 = state.v.x[k] * state.v.x[k] + state.v.y[k] * state.v.y[k];
    s += 0.5L * state.rho[k] * v2 + e[k];
  }
  return static_cast<double>(s / static_cast<long double>(state.rho.size()));
}

ModifiedEnergy modified_energy(const FluidState& state, const PressureLaw& law, double mu, double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("modified_energy: nu must be positive");
  const auto& rho = state.rho;
  const auto pv = leray_project(state.v).solenoidal;
  const double grad_pv = gradient_l2(pv);
  const auto flux = effective_viscous_flux(rho, state.v, law, nu);
  const auto p = pressure(rho, law);
  const double p_mean = p.mean();
  const double p_star = p.max();
  const double p1 = law.pressure(1.0);
  const auto e = potential_energy(rho, law);
  long double kinetic = 0.0L, gt2 = 0.0L, pt2 = 0.0L, tail = 0.0L, e_sum = 0.0L;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    kinetic += rho[k] * (state.v.x[k] * state.v.x[k] + state.v.y[k] * state.v.y[k]);
    gt2 += flux.g_tilde[k] * flux.g_tilde[k];
    const double pt = p[k] - p_mean;
    pt2 += pt * pt;
    tail += rho[k] * law.pressure_square_tail(rho[k]);
    e_sum += e[k];
  }
  const long double cells = static_cast<long double>(rho.size());
  const double kin = static_cast<double>(kinetic / cells);
  const double g2 = static_cast<double>(gt2 / cells);
  const double p2 = static_cast<double>(pt2 / cells);
  const double tl = static_cast<double>(tail / cells);
  const double el = static_cast<double>(e_sum / cells);
  const double common = kin + mu * grad_pv * grad_pv + (g2 + p2) / nu;
  ModifiedEnergy out;
  out.value = 0.5 * (common + (tl + (p_star - p1) * p1) / nu + 4.0 * el);
  out.lower_bound = 0.5 * (common + 2.0 * el);
  return out;
}

double Dissipation::total() const {
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

Dissipation dissipation_functional(const FluidState& state, const PressureLaw& law, double nu, double mu,
                                   double rho_star, const VectorField& vdot) {
  if (!(rho_star > 0.0)) throw InvalidArgument("dissipation_functional: rho_star must be positive");
  const auto& rho = state.rho;
  const auto pv = leray_project(state.v).solenoidal;
  const auto div = divergence(state.v);
  const auto p = pressure(rho, law);
  const ScalarField g = nu * div - p;
  const auto grad_g = gradient(g);
  const auto h = h_of(rho, law);
  const double p_mean = p.mean();
  long double rv = 0.0L, pt2 = 0.0L, dd = 0.0L, gg = 0.0L;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    rv += rho[k] * (vdot.x[k] * vdot.x[k] + vdot.y[k] * vdot.y[k]);
    pt2 += (p[k] - p_mean) * (p[k] - p_mean);
    dd += (nu + h[k]) * div[k] * div[k];
    gg += grad_g.x[k] * grad_g.x[k] + grad_g.y[k] * grad_g.y[k];
  }
  const long double cells = static_cast<long double>(rho.size());
  const double hess = hessian_l2(pv);
  const double grad_v = gradient_l2(state.v);
  Dissipation d;
  d.terms[0] = 0.25 * static_cast<double>(rv / cells);
  d.terms[1] = mu * mu / (4.0 * rho_star) * hess * hess;
  d.terms[2] = static_cast<double>(gg / cells) / (8.0 * rho_star);
  d.terms[3] = static_cast<double>(pt2 / cells) / (4.0 * nu);
  d.terms[4] = 0.5 * static_cast<double>(dd / cells);
  d.terms[5] = 0.5 * mu * grad_v * grad_v;
  return d;
}

VectorField material_derivative(const FluidState& state, const SolverConfig& config) {
  const auto lv = viscous_operator(state.v, config.mu, config.lambda);
  const auto gp = gradient(dealias(pressure(state.rho, config.law)));
  VectorField out(state.rho.grid_ptr());
  for (std::size_t k = 0; k < state.rho.size(); ++k) {
    const double r = state.rho[k];
    if (r < config.rho_floor) continue;
    out.x[k] = (lv.x[k] - gp.x[k]) / r;
    out.y[k] = (lv.y[k] - gp.y[k]) / r;
  }
  return out;
}

DampedMode damped_mode(const FluidState& state, double nu) {
  if (!(nu > 0.0)) throw InvalidArgument("damped_mode: nu must be positive");
  ScalarField src = divergence(state.rho * state.v);
  src += -src.mean();
  const auto phi = inverse_laplacian(src);
  DampedMode out{ScalarField(state.rho.grid_ptr()), 0.0, 0};
  for (std::size_t k = 0; k < state.rho.size(); ++k) {
    const double r = state.rho[k];
    out.f[k] = std::log(std::max(r, kLogFloor)) - phi[k] / nu;
    if (r < kLogFloor) {
      ++out.vacuum_cells;
      continue;
    }
    out.f_plus_sup = std::max(out.f_plus_sup, out.f[k]);
  }
  return out;
}

double density_bound(double gamma, double e0, double rho0_star) {
  if (!(gamma >= 1.0)) throw InvalidArgument("density_bound: gamma must be >= 1");
  return 2.0 * std::exp((gamma - 1.0) * e0 / gamma) * rho0_star;
}

DensityBoundCheck density_bound_check(const std::vector<double>& sup_rho_series, double gamma, double e0,
                                      double rho0_star) {
  DensityBoundCheck c;
  c.bound = density_bound(gamma, e0, rho0_star);
  c.worst_margin = c.bound;
  for (double s : sup_rho_series) {
    const double m = c.bound - s;
    c.margins.push_back(m);
    c.worst_margin = std::min(c.worst_margin, m);
  }
  c.pass = c.worst_margin >= 0.0;
  return c;
}

namespace {

// (-Δ)⁻¹∂_i∂_j: symbol -k_i k_j / |k|², with the Nyquist lines removed.
ScalarField riesz(const ScalarField& f, int i, int j) {
  const int nyq = static_cast<int>(f.grid().n() / 2);
  return apply_multiplier(f, [=](int kx, int ky) {
    if (std::abs(kx) == nyq || std::abs(ky) == nyq || (kx == 0 && ky == 0)) return Complex(0.0, 0.0);
    const double k[2] = {static_cast<double>(kx), static_cast<double>(ky)};
    return Complex(-k[i] * k[j] / (k[0] * k[0] + k[1] * k[1]), 0.0);
  });
}

}  // namespace

Commutator commutator_field(const FluidState& state) {
  const ScalarField* v[2] = {&state.v.x, &state.v.y};
  VectorField field(state.rho.grid_ptr());
  ScalarField* out[2] = {&field.x, &field.y};
  for (int i = 0; i < 2; ++i) {
    const ScalarField m = dealiased_product(state.rho, *v[i]);
    for (int j = 0; j < 2; ++j) {
      const ScalarField first = dealiased_product(*v[j], riesz(m, i, j));
      const ScalarField second = riesz(dealiased_product(*v[j], m), i, j);
      *out[i] += first;
      *out[i] -= second;
    }
  }
  Commutator c{std::move(field), 0.0};
  c.sup = norm(c.field, Norm::Linf());
  return c;
}

double time_lq_norm(const std::vector<double>& t, const std::vector<double>& f, double q, double single_dt) {
  if (t.size() != f.size()) throw InvalidArgument("time_lq_norm: series lengths differ");
  if (!(q > 0.0)) throw InvalidArgument("time_lq_norm: q must be positive");
  if (t.empty()) return 0.0;
  if (t.size() == 1) return std::pow(single_dt, 1.0 / q) * std::abs(f[0]);
  double s = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    s += 0.5 * (t[k] - t[k - 1]) * (std::pow(std::abs(f[k]), q) + std::pow(std::abs(f[k - 1]), q));
  }
  return std::pow(s, 1.0 / q);
}

DifferenceMetrics difference_metrics(const FluidState& a, const FluidState& b) {
  require_same_grid(a.rho.grid(), b.rho.grid(), "difference_metrics");
  ScalarField dr = a.rho - b.rho;
  const double dm = dr.mean();
  if (std::abs(dm) > 1e-9) {
    std::ostringstream os;
    os << "difference_metrics: mass mismatch " << dm;
    throw InvalidArgument(os.str());
  }
  dr += -dm;
  DifferenceMetrics m;
  m.t = a.t;
  m.delta_rho_hm1 = norm(dr, Norm::Hdot(-1));
  const VectorField dv = a.v - b.v;
  long double s = 0.0L;
  for (std::size_t k = 0; k < dr.size(); ++k) s += a.rho[k] * (dv.x[k] * dv.x[k] + dv.y[k] * dv.y[k]);
  m.delta_v_weighted = std::sqrt(static_cast<double>(s / static_cast<long double>(dr.size())));
  return m;
}

double elliptic_identity_gap(const VectorField& v, double mu, double lambda) {
  const double gv = gradient_l2(v);
  const double dv = norm(divergence(v), Norm::L(2.0));
  const double gp = gradient_l2(leray_project(v).solenoidal);
  const double lhs = mu * gv * gv + (lambda + mu) * dv * dv;
  const double rhs = mu * gp * gp + (lambda + 2.0 * mu) * dv * dv;
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return std::abs(lhs - rhs) / scale;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "t",          "mass",         "mom_x",       "mom_y",         "E",      "calE",  "intD",
      "sup_rho",    "rho_bound_margin", "sup_Fplus", "div_L2",      "div_Linf", "gradPv_L2",
      "gradPv_Linf", "Gt_L2",       "Pt_L2",       "rho_vdot_L2",   "wt_rho_vdot_L2", "wt_grad_vdot_acc",
      "energy_residual"};
  return cols;
}

void write_csv_header(std::ostream& os) {
  const auto& cols = csv_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << '\n';
}

void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
  const double values[] = {r.t,          r.mass,         r.mom_x,       r.mom_y,           r.energy,
                           r.cal_e,      r.int_d,        r.sup_rho,     r.rho_bound_margin, r.sup_fplus,
                           r.div_l2,     r.div_linf,     r.grad_pv_l2,  r.grad_pv_linf,    r.gt_l2,
                           r.pt_l2,      r.rho_vdot_l2,  r.wt_rho_vdot_l2, r.wt_grad_vdot_acc, r.energy_residual};
  char buf[40];
  bool first = true;
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << (first ? "" : ",") << buf;
    first = false;
  }
  os << '\n';
}

void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& records) {
  write_csv_header(os);
  for (const auto& r : records) write_csv_row(os, r);
}

DiagnosticsMonitor::DiagnosticsMonitor(const FluidState& initial, const SolverConfig& config, MonitorOptions options)
    : config_(config), options_(options) {
  config_.validate();
  if (options_.record_every < 1) throw InvalidArgument("DiagnosticsMonitor: record_every must be >= 1");
  e0_ = total_energy(initial, config_.law);
  rho0_star_ = initial.rho.max();
  bound_ = density_bound(config_.law.gamma(), e0_, rho0_star_);
  rho_star_ = options_.rho_star > 0.0 ? options_.rho_star : bound_;
  conditions_ = evaluate_conditions(config_.nu(), config_.mu, rho_star_, config_.law, options_.c_const);
  last_ = instant(initial, nullptr, nullptr);
  step_t_.push_back(initial.t);
  const auto div = divergence(initial.v);
  step_div_l2_.push_back(norm(div, Norm::L(2.0)));
  step_div_linf_.push_back(norm(div, Norm::Linf()));
  step_grad_pv_linf_.push_back(gradient_linf(leray_project(initial.v).solenoidal));
  step_sup_rho_.push_back(rho0_star_);
  records_.push_back(evaluate(initial, last_));
}

DiagnosticsMonitor::Instant DiagnosticsMonitor::instant(const FluidState& state, VectorField* vdot_out,
                                                        Dissipation* d_out) const {
  Instant in;
  in.t = state.t;
  const double nu = config_.nu();
  const double gp = gradient_l2(leray_project(state.v).solenoidal);
  const double dv = norm(divergence(state.v), Norm::L(2.0));
  in.dissipation_rate = config_.mu * gp * gp + nu * dv * dv;
  VectorField vdot = material_derivative(state, config_);
  const auto d = dissipation_functional(state, config_.law, nu, config_.mu, rho_star_, vdot);
  in.d_total = d.total();
  const double gvd = gradient_l2(dealias(vdot));
  in.t_grad_vdot_sq = state.t * gvd * gvd;
  if (d_out != nullptr) *d_out = d;
  if (vdot_out != nullptr) *vdot_out = std::move(vdot);
  return in;
}

bool DiagnosticsMonitor::observe(const FluidState& state, bool force_record) {
  const Instant now = instant(state, nullptr, nullptr);
  const double dt = now.t - last_.t;
  int_dissipation_rate_ += 0.5 * dt * (now.dissipation_rate + last_.dissipation_rate);
  int_d_ += 0.5 * dt * (now.d_total + last_.d_total);
  int_t_grad_vdot_ += 0.5 * dt * (now.t_grad_vdot_sq + last_.t_grad_vdot_sq);
  last_ = now;
  ++steps_;
  const auto div = divergence(state.v);
  step_t_.push_back(state.t);
  step_div_l2_.push_back(norm(div, Norm::L(2.0)));
  step_div_linf_.push_back(norm(div, Norm::Linf()));
  step_grad_pv_linf_.push_back(gradient_linf(leray_project(state.v).solenoidal));
  step_sup_rho_.push_back(state.rho.max());
  if (!force_record && steps_ % options_.record_every != 0) return false;
  records_.push_back(evaluate(state, now));
  return true;
}

DiagnosticsRecord DiagnosticsMonitor::evaluate(const FluidState& state, const Instant& now) const {
  const double nu = config_.nu();
  DiagnosticsRecord r;
  r.t = state.t;
  r.mass = state.mass();
  std::tie(r.mom_x, r.mom_y) = state.momentum();
  r.energy = total_energy(state, config_.law);
  const auto me = modified_energy(state, config_.law, config_.mu, nu);
  r.cal_e = me.value;
  r.equiv_e_margin = me.margin();
  r.int_d = int_d_;
  r.sup_rho = state.rho.max();
  r.rho_bound_margin = bound_ - r.sup_rho;
  r.sup_fplus = damped_mode(state, nu).f_plus_sup;
  const auto div = divergence(state.v);
  r.div_l2 = norm(div, Norm::L(2.0));
  r.div_linf = norm(div, Norm::Linf());
  const auto pv = leray_project(state.v).solenoidal;
  r.grad_pv_l2 = gradient_l2(pv);
  r.grad_pv_linf = gradient_linf(pv);
  const auto flux = effective_viscous_flux(state.rho, state.v, config_.law, nu);
  r.gt_l2 = norm(flux.g_tilde, Norm::L(2.0));
  ScalarField pt = pressure(state.rho, config_.law);
  pt += -pt.mean();
  r.pt_l2 = norm(pt, Norm::L(2.0));
  const VectorField vdot = material_derivative(state, config_);
  long double s = 0.0L;
  for (std::size_t k = 0; k < state.rho.size(); ++k) {
    s += state.rho[k] * (vdot.x[k] * vdot.x[k] + vdot.y[k] * vdot.y[k]);
  }
  r.rho_vdot_l2 = std::sqrt(static_cast<double>(s / static_cast<long double>(state.rho.size())));
  r.wt_rho_vdot_l2 = std::sqrt(std::max(state.t, 0.0)) * r.rho_vdot_l2;
  r.wt_grad_vdot = std::sqrt(std::max(now.t_grad_vdot_sq, 0.0));
  r.wt_grad_vdot_acc = int_t_grad_vdot_;
  r.energy_residual = r.energy + int_dissipation_rate_ - e0_;
  r.elliptic_gap = elliptic_identity_gap(state.v, config_.mu, config_.lambda);
  r.div_energy_ratio = r.cal_e > 0.0 ? nu * r.div_l2 * r.div_l2 / (4.0 * r.cal_e) : 0.0;
  r.conditions_pass = conditions_.all_pass("2d");
  r.commutator_sup = commutator_field(state).sup;
  return r;
}

}  // namespace cns
