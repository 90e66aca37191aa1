#include "cnslab/ineq.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "cnslab/error.hpp"
#include "cnslab/parallel.hpp"
#include "cnslab/prep.hpp"
#include "cnslab/spectral.hpp"

namespace cns {
namespace {

struct Blowup {
  double t;
};

double implied(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

void finish(InequalityReport& r) {
  r.implied_constant = implied(r.lhs, r.rhs_without_constant);
  if (r.calibration) r.pass = r.implied_constant <= *r.calibration;
}

double dot_norm(const ScalarField& b) { return norm(b, Norm::Hdot(1)); }

void require_moment(const ScalarField& rho, const ScalarField& b, const char* where) {
  const double m = rho.mean();
  if (!(m > 0.0)) throw InvalidArgument(std::string(where) + ": density must have positive mass");
  const double moment = inner(rho, b);
  const double scale = std::max(1.0, norm(rho, Norm::L(2.0)) * norm(b, Norm::L(2.0)));
  if (std::abs(moment) > 1e-9 * scale) {
    std::ostringstream os;
    os << where << ": moment condition violated, integral of rho*b = " << moment;
    throw InvalidArgument(os.str());
  }
}

}  // namespace

OsgoodReport osgood_check(const std::function<double(double)>& f, const std::function<double(double)>& g, double a,
                          double b, double x0, const std::vector<double>& times, double tolerance) {
  if (!(a >= 1.0) || !(b >= 0.0) || !(x0 >= 0.0)) {
    throw InvalidArgument("osgood_check: requires A >= 1, B >= 0, X0 >= 0");
  }
  if (times.empty()) throw InvalidArgument("osgood_check: no output times");
  using State = std::array<double, 3>;  // X, ∫f, ∫g
  namespace odeint = boost::numeric::odeint;
  auto rhs = [&](const State& s, State& ds, double t) {
    const double ft = f(t);
    const double gt = g(t);
    ds[0] = ft * s[0] * std::log(a + b * s[0]) + gt * s[0];
    ds[1] = ft;
    ds[2] = gt;
  };
  OsgoodReport report;
  report.max_relative_excess = -std::numeric_limits<double>::infinity();
  State s{x0, 0.0, 0.0};
  std::vector<double> grid{0.0};
  for (double t : times) {
    if (t < grid.back()) throw InvalidArgument("osgood_check: output times must be nondecreasing and >= 0");
    grid.push_back(t);
  }
  auto observer = [&](const State& st, double t) {
    if (!std::isfinite(st[0]) || st[0] > 1e250) throw Blowup{t};
    if (t == 0.0 && grid.size() > 1 && times.front() != 0.0) return;
    OsgoodPoint p;
    p.t = t;
    p.x = st[0];
    p.lhs = a + b * st[0];
    const double log_rhs = std::exp(st[1]) * std::log(a + b * std::exp(st[2]) * x0);
    p.rhs = std::exp(log_rhs);
    const double rel = p.lhs > 0.0 ? std::expm1(std::log(p.lhs) - log_rhs) : -1.0;
    report.max_relative_excess = std::max(report.max_relative_excess, rel);
    report.points.push_back(p);
  };
  try {
    auto stepper = odeint::make_controlled(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_times(stepper, rhs, s, grid.begin(), grid.end(), 1e-4, observer);
  } catch (const Blowup& e) {
    report.blowup = true;
    report.blowup_time = e.t;
  }
  report.pass = report.max_relative_excess <= tolerance;
  return report;
}

ScalarField remove_weighted_mean(const ScalarField& rho, const ScalarField& b) {
  const double m = rho.mean();
  if (!(m > 0.0)) throw InvalidArgument("remove_weighted_mean: density must have positive mass");
  ScalarField out = b;
  out += -inner(rho, b) / m;
  return out;
}

InequalityReport poincare_weighted(const ScalarField& rho, const ScalarField& b, double p, double c) {
  require_same_grid(rho.grid(), b.grid(), "poincare_weighted");
  if (!(p >= 2.0) || !std::isfinite(p)) throw InvalidArgument("poincare_weighted: p must lie in [2, inf)");
  require_moment(rho, b, "poincare_weighted");
  const double m = rho.mean();
  const double p_dual = p / (p - 1.0);
  ScalarField shifted = rho;
  shifted += -c;
  const double contrast = norm(shifted, Norm::L(p_dual)) / m;
  const double grad = dot_norm(b);
  InequalityReport r;
  r.inequality = "poincare_weighted";
  r.lhs = norm(b, Norm::L(2.0));
  if (p == 2.0) {
    r.rhs_without_constant = (1.0 + contrast) * grad;
    r.implied_constant = implied(r.lhs, r.rhs_without_constant);
    r.calibration = 1.0;
    r.pass = r.lhs <= r.rhs_without_constant * (1.0 + 1e-12) + 1e-300;
  } else {
    r.rhs_without_constant = contrast * grad;
    r.implied_constant = implied(std::max(0.0, r.lhs - grad), r.rhs_without_constant);
  }
  return r;
}

InequalityReport poincare_log(const ScalarField& rho, const ScalarField& b, double c,
                              std::optional<double> calibration) {
  require_same_grid(rho.grid(), b.grid(), "poincare_log");
  require_moment(rho, b, "poincare_log");
  const double m = rho.mean();
  ScalarField shifted = rho;
  shifted += -c;
  const double factor = std::sqrt(std::log(std::numbers::e + norm(shifted, Norm::L(2.0)) / m));
  InequalityReport r;
  r.inequality = "poincare_log";
  r.lhs = norm(b, Norm::L(2.0));
  r.rhs_without_constant = factor * dot_norm(b);
  r.calibration = calibration;
  r.aux = implied(std::abs(b.mean()), r.rhs_without_constant);
  finish(r);
  return r;
}

InequalityReport truncation_sup_bound(const ScalarField& b, int n, std::optional<double> calibration) {
  if (n < 2) throw InvalidArgument("truncation_sup_bound: n must be >= 2");
  InequalityReport r;
  r.inequality = "truncation_sup";
  r.lhs = norm(spectral_truncate(b, n), Norm::Linf());
  r.rhs_without_constant = std::sqrt(std::log(static_cast<double>(n))) * dot_norm(b);
  r.calibration = calibration;
  finish(r);
  return r;
}

InequalityReport desjardins_ratio(const ScalarField& rho, const ScalarField& u, double c,
                                  std::optional<double> calibration) {
  require_same_grid(rho.grid(), u.grid(), "desjardins_ratio");
  if (rho.min() < 0.0) throw InvalidArgument("desjardins_ratio: density must be nonnegative");
  const double m = rho.mean();
  if (!(m > 0.0)) throw InvalidArgument("desjardins_ratio: density must have positive mass");
  long double q4 = 0.0L, q2 = 0.0L;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double u2 = u[k] * u[k];
    q2 += rho[k] * u2;
    q4 += rho[k] * u2 * u2;
  }
  const long double cells = static_cast<long double>(u.size());
  InequalityReport r;
  r.inequality = "desjardins";
  r.calibration = calibration;
  r.lhs = std::sqrt(static_cast<double>(q4 / cells));
  const double su2 = static_cast<double>(q2 / cells);
  if (!(su2 > 0.0)) {
    r.vacuous = true;
    r.pass = true;
    return r;
  }
  const double gu = dot_norm(u);
  ScalarField shifted = rho;
  shifted += -c;
  const double arg = std::numbers::e + norm(shifted, Norm::L(2.0)) / m + norm(rho, Norm::L(2.0)) * gu * gu / su2;
  r.rhs_without_constant = std::sqrt(su2) * gu * std::sqrt(std::log(arg));
  finish(r);
  return r;
}

FieldSampler::Sample FieldSampler::draw(std::uint64_t index) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int cutoff = grid_->dealias_cutoff();
  static constexpr double kSlopes[] = {1.0, 1.5, 2.0};
  static constexpr const char* kFamilies[] = {"smooth", "disc", "square", "star", "contrast"};

  const int family = static_cast<int>(rng() % 5);
  ShapeSpec shape;
  std::ostringstream desc;
  desc << "family=" << kFamilies[family];
  ScalarField rho(grid_);
  if (family == 0) {
    const auto pert = random_band_limited(grid_, 1 + static_cast<int>(rng() % 6), kSlopes[rng() % 3], rng());
    const double amp = 0.95 * unit(rng) / std::max(1e-300, norm(pert, Norm::Linf()));
    rho = pert * amp;
    rho += 1.0;
  } else if (family == 4) {
    const double eps = std::pow(10.0, -4.0 + 3.0 * unit(rng));
    const double radius = 0.03 + 0.1 * unit(rng);
    rho = make_density(grid_, {"disc", {{"cx", unit(rng)}, {"cy", unit(rng)}, {"radius", radius}}});
    rho *= 1.0 / eps;
    rho += 1.0;
    desc << " eps=" << eps << " radius=" << radius;
  } else {
    shape.name = kFamilies[family];
    shape.params = {{"cx", unit(rng)}, {"cy", unit(rng)}};
    if (family == 1) shape.params["radius"] = 0.08 + 0.35 * unit(rng);
    if (family == 2) shape.params["half_side"] = 0.08 + 0.35 * unit(rng);
    if (family == 3) {
      shape.params["radius"] = 0.1 + 0.25 * unit(rng);
      shape.params["amplitude"] = 0.6 * unit(rng);
      shape.params["lobes"] = static_cast<double>(3 + rng() % 5);
    }
    rho = make_density(grid_, shape);
    if (!(rho.mean() > 0.0)) rho = make_density(grid_, {"disc", {{"radius", 0.25}}});
    rho *= 0.2 + 4.8 * unit(rng);
  }
  const int kmax = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(cutoff));
  const double slope = kSlopes[rng() % 3];
  ScalarField b = random_band_limited(grid_, kmax, slope, rng());
  b *= std::pow(10.0, -2.0 + 4.0 * unit(rng));
  b += (unit(rng) - 0.5) * 4.0;
  int trunc = 2;
  const int max_trunc = static_cast<int>(grid_->n() / 2) - 1;
  for (int k = 2; k <= max_trunc; k *= 2) {
    if (unit(rng) < 0.5) break;
    trunc = k;
  }
  const double c = unit(rng) < 0.5 ? rho.mean() : 2.0 * rho.max() * unit(rng);
  desc << " kmax=" << kmax << " slope=" << slope << " n=" << trunc << " c=" << c << " index=" << index;
  return {std::move(rho), std::move(b), c, trunc, desc.str()};
}

nlohmann::json Calibration::to_json() const {
  return {{"truncation_sup", truncation}, {"poincare_log", log_poincare}, {"desjardins", desjardins},
          {"seed", seed},                 {"samples", samples},           {"safety_factor", safety},
          {"grid_n", grid_n}};
}

Calibration Calibration::from_json(const nlohmann::json& j) {
  Calibration c;
  c.truncation = j.at("truncation_sup").get<double>();
  c.log_poincare = j.at("poincare_log").get<double>();
  c.desjardins = j.at("desjardins").get<double>();
  c.seed = j.value("seed", std::uint64_t{0});
  c.samples = j.value("samples", std::uint64_t{0});
  c.safety = j.value("safety_factor", 1.5);
  c.grid_n = j.value("grid_n", 64);
  return c;
}

Calibration Calibration::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open calibration file " + path);
  return from_json(nlohmann::json::parse(in));
}

void Calibration::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write calibration file " + path);
  out << to_json().dump(2) << '\n';
}

namespace {

struct SampleOutcome {
  InequalityReport weighted, log, trunc, desj;
};

SampleOutcome evaluate_sample(const FieldSampler::Sample& s, const Calibration* cal) {
  const ScalarField b = remove_weighted_mean(s.rho, s.b);
  SampleOutcome o;
  o.weighted = poincare_weighted(s.rho, b, 2.0, s.c);
  o.log = poincare_log(s.rho, b, s.c, cal ? std::optional<double>(cal->log_poincare) : std::nullopt);
  ScalarField b0 = s.b;
  b0 += -b0.mean();
  o.trunc = truncation_sup_bound(b0, s.truncation, cal ? std::optional<double>(cal->truncation) : std::nullopt);
  o.desj = desjardins_ratio(s.rho, b, s.c, cal ? std::optional<double>(cal->desjardins) : std::nullopt);
  return o;
}

void merge(SuiteEntry& e, const InequalityReport& r, const std::string& desc) {
  ++e.samples;
  if (!r.pass) ++e.violations;
  if (r.implied_constant > e.max_implied_constant || e.worst_sample.empty()) {
    e.max_implied_constant = std::max(e.max_implied_constant, r.implied_constant);
    e.worst_sample = desc;
  }
}

std::vector<SampleOutcome> evaluate_all(const FieldSampler& sampler, std::uint64_t samples, const Calibration* cal) {
  std::vector<SampleOutcome> out(samples);
  parallel_for(samples, [&](std::size_t i) {
    auto s = sampler.draw(i);
    out[i] = evaluate_sample(s, cal);
    out[i].weighted.sample = out[i].log.sample = out[i].trunc.sample = out[i].desj.sample = s.descriptor;
  });
  return out;
}

}  // namespace

Calibration calibrate(const GridPtr& grid, std::uint64_t samples, std::uint64_t seed, double safety) {
  if (samples == 0) throw InvalidArgument("calibrate: need at least one sample");
  FieldSampler sampler(grid, seed);
  Calibration c;
  c.seed = seed;
  c.samples = samples;
  c.safety = safety;
  c.grid_n = static_cast<int>(grid->n());
  double t = 0.0, l = 0.0, d = 0.0;
  constexpr std::uint64_t kChunk = 4096;
  for (std::uint64_t start = 0; start < samples; start += kChunk) {
    const std::uint64_t count = std::min(kChunk, samples - start);
    std::vector<SampleOutcome> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = evaluate_sample(sampler.draw(start + i), nullptr); });
    for (const auto& o : out) {
      t = std::max(t, o.trunc.implied_constant);
      l = std::max(l, o.log.implied_constant);
      if (!o.desj.vacuous) d = std::max(d, o.desj.implied_constant);
    }
  }
  c.truncation = safety * t;
  c.log_poincare = safety * l;
  c.desjardins = safety * d;
  return c;
}

bool SuiteResult::pass() const {
  if (!osgood_worst.pass) return false;
  return std::all_of(entries.begin(), entries.end(), [](const SuiteEntry& e) { return e.pass; });
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["pass"] = pass();
  for (const auto& e : entries) {
    nlohmann::json je{{"samples", e.samples},
                      {"violations", e.violations},
                      {"max_implied_constant", e.max_implied_constant},
                      {"worst_sample", e.worst_sample},
                      {"pass", e.pass}};
    je["calibration"] = e.calibration ? nlohmann::json(*e.calibration) : nlohmann::json(nullptr);
    j["inequalities"][e.inequality] = je;
  }
  j["osgood"] = {{"max_relative_excess", osgood_worst.max_relative_excess},
                 {"tolerance", 1e-8},
                 {"blowup", osgood_worst.blowup},
                 {"pass", osgood_worst.pass}};
  return j;
}

SuiteResult run_inequality_suite(const GridPtr& grid, const Calibration& calibration, std::uint64_t samples,
                                 std::uint64_t seed) {
  SuiteResult result;
  result.seed = seed;
  FieldSampler sampler(grid, seed);
  const auto outcomes = evaluate_all(sampler, samples, &calibration);
  SuiteEntry weighted, log, trunc, desj;
  weighted.inequality = "poincare_weighted_p2";
  log.inequality = "poincare_log";
  trunc.inequality = "truncation_sup";
  desj.inequality = "desjardins";
  weighted.calibration = 1.0;
  log.calibration = calibration.log_poincare;
  trunc.calibration = calibration.truncation;
  desj.calibration = calibration.desjardins;
  for (const auto& o : outcomes) {
    merge(weighted, o.weighted, o.weighted.sample);
    merge(log, o.log, o.log.sample);
    merge(trunc, o.trunc, o.trunc.sample);
    merge(desj, o.desj, o.desj.sample);
  }
  for (auto* e : {&weighted, &log, &trunc, &desj}) {
    e->pass = e->violations == 0;
    result.entries.push_back(*e);
  }

  // Osgood: equality-case trajectories for a family of f, g, A, B, X₀.
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  result.osgood_worst.max_relative_excess = -std::numeric_limits<double>::infinity();
  const std::vector<double> times{0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  for (int k = 0; k < 24; ++k) {
    const double f0 = unit(rng), f1 = unit(rng), g0 = unit(rng), jump = 0.2 + 1.6 * unit(rng);
    std::function<double(double)> f, g;
    switch (k % 3) {
      case 0:
        f = [f0](double) { return f0; };
        g = [g0](double) { return g0; };
        break;
      case 1:
        f = [f0, f1, jump](double t) { return t < jump ? f0 : f1; };
        g = [g0, jump](double t) { return t < jump ? 0.0 : g0; };
        break;
      default:
        f = [f0](double t) { return f0 * (1.0 + std::sin(3.0 * t)); };
        g = [g0](double t) { return g0 * std::cos(2.0 * t) * std::cos(2.0 * t); };
    }
    const double a = 1.0 + 4.0 * unit(rng);
    const double b = 3.0 * unit(rng);
    const double x0 = 2.0 * unit(rng);
    auto rep = osgood_check(f, g, a, b, x0, times);
    if (rep.max_relative_excess > result.osgood_worst.max_relative_excess) result.osgood_worst = rep;
  }
  result.osgood_worst.pass = result.osgood_worst.max_relative_excess <= 1e-8;
  return result;
}

}  // namespace cns
