#include "cnslab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cnslab/error.hpp"
#include "cnslab/field_io.hpp"
#include "cnslab/ineq.hpp"
#include "cnslab/parallel.hpp"
#include "cnslab/spectral.hpp"

namespace cns {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double to_number(const std::string& section, const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config [" + section + "] " + key + ": not a number: '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& section, const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config [" + section + "] " + key + ": not an unsigned integer: '" + value + "'");
  }
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace

// ------------------------------------------------------------------ config

RunConfig RunConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  RunConfig c;
  bool have_nu = false, have_lambda = false;
  double nu = 0.0;
  double a = c.law.a(), gamma = c.law.gamma();
  if (auto init = tree.get_child_optional("initial")) {
    if (init->count("density")) c.density.params.clear();
    if (init->count("velocity")) c.velocity.params.clear();
  }
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw InvalidArgument("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      auto num = [&] { return to_number(section, key, value); };
      auto unknown = [&] { throw InvalidArgument("config: unknown key [" + section + "] " + key); };
      if (section == "grid") {
        if (key == "n") {
          c.n = static_cast<std::size_t>(to_u64(section, key, value));
        } else {
          unknown();
        }
      } else if (section == "fluid") {
        if (key == "mu") {
          c.mu = num();
        } else if (key == "lambda") {
          c.lambda = num();
          have_lambda = true;
        } else if (key == "nu") {
          nu = num();
          have_nu = true;
        } else if (key == "a") {
          a = num();
        } else if (key == "gamma") {
          gamma = num();
        } else {
          unknown();
        }
      } else if (section == "initial") {
        const auto dot = key.find('.');
        const std::string head = key.substr(0, dot);
        if (dot != std::string::npos && (head == "density" || head == "velocity")) {
          (head == "density" ? c.density : c.velocity).params[key.substr(dot + 1)] = num();
        } else if (key == "density") {
          c.density.name = value;
        } else if (key == "velocity") {
          c.velocity.name = value;
        } else if (key == "density_file") {
          c.density_file = resolve(base_dir, value);
        } else if (key == "velocity_x_file") {
          c.velocity_x_file = resolve(base_dir, value);
        } else if (key == "velocity_y_file") {
          c.velocity_y_file = resolve(base_dir, value);
        } else if (key == "mollify") {
          c.mollify = num();
        } else if (key == "clamp") {
          c.clamp = num();
        } else if (key == "K") {
          c.k_target = num();
        } else {
          unknown();
        }
      } else if (section == "run") {
        if (key == "t_end") {
          c.t_end = num();
        } else if (key == "cfl") {
          c.cfl = num();
        } else if (key == "dt_max") {
          c.dt_max = num();
        } else if (key == "record_interval") {
          c.record_interval = num();
        } else if (key == "snapshot_interval") {
          c.snapshot_interval = num();
        } else if (key == "limiter") {
          c.limiter = parse_limiter(value);
        } else if (key == "solver_tolerance") {
          c.solver_tolerance = num();
        } else if (key == "rho_floor") {
          c.rho_floor = num();
        } else if (key == "seed") {
          c.seed = to_u64(section, key, value);
        } else if (key == "out") {
          c.out = value;
        } else {
          unknown();
        }
      } else if (section == "constants") {
        if (key == "file") {
          c.constants_file = resolve(base_dir, value);
        } else if (key == "C") {
          c.c_const = num();
        } else if (key == "c0") {
          c.c0 = num();
        } else if (key == "rho_star") {
          c.rho_star = num();
        } else if (key == "eps_vac") {
          c.eps_vac = num();
        } else {
          unknown();
        }
      } else {
        throw InvalidArgument("config: unknown section [" + section + "]");
      }
    }
  }
  // Also rebuilds the law through its own validation.
  c.law = PressureLaw(a, gamma);
  if (have_nu && have_lambda) throw InvalidArgument("config: give either nu or lambda, not both");
  if (have_nu) c.set_nu(nu);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse(in, path.parent_path());
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "[grid]\nn = " << n << "\n\n";
  os << "[fluid]\nmu = " << fmt(mu) << "\nlambda = " << fmt(lambda) << "\na = " << fmt(law.a())
     << "\ngamma = " << fmt(law.gamma()) << "\n\n";
  os << "[initial]\ndensity = " << density.name << '\n';
  for (const auto& [k, v] : density.params) os << "density." << k << " = " << fmt(v) << '\n';
  os << "velocity = " << velocity.name << '\n';
  for (const auto& [k, v] : velocity.params) os << "velocity." << k << " = " << fmt(v) << '\n';
  if (!density_file.empty()) os << "density_file = " << density_file << '\n';
  if (!velocity_x_file.empty()) os << "velocity_x_file = " << velocity_x_file << '\n';
  if (!velocity_y_file.empty()) os << "velocity_y_file = " << velocity_y_file << '\n';
  os << "mollify = " << fmt(mollify) << "\nclamp = " << fmt(clamp) << "\nK = " << fmt(k_target) << "\n\n";
  os << "[run]\nt_end = " << fmt(t_end) << "\ncfl = " << fmt(cfl) << "\ndt_max = " << fmt(dt_max)
     << "\nrecord_interval = " << fmt(record_interval) << "\nsnapshot_interval = " << fmt(snapshot_interval)
     << "\nlimiter = " << to_string(limiter) << "\nsolver_tolerance = " << fmt(solver_tolerance)
     << "\nrho_floor = " << fmt(rho_floor) << "\nseed = " << seed << "\nout = " << out << "\n\n";
  os << "[constants]\n";
  if (!constants_file.empty()) os << "file = " << constants_file << '\n';
  os << "C = " << fmt(c_const) << "\nc0 = " << fmt(c0) << "\nrho_star = " << fmt(rho_star)
     << "\neps_vac = " << fmt(eps_vac) << '\n';
  return os.str();
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["grid"] = {{"n", n}};
  j["fluid"] = {{"mu", mu}, {"lambda", lambda}, {"nu", nu()}, {"a", law.a()}, {"gamma", law.gamma()}};
  j["initial"] = {{"density", {{"shape", density.name}, {"params", density.params}}},
                  {"velocity", {{"shape", velocity.name}, {"params", velocity.params}}},
                  {"density_file", density_file},
                  {"velocity_x_file", velocity_x_file},
                  {"velocity_y_file", velocity_y_file},
                  {"mollify", mollify},
                  {"clamp", clamp},
                  {"K", k_target}};
  j["run"] = {{"t_end", t_end},
              {"cfl", cfl},
              {"dt_max", dt_max},
              {"record_interval", record_interval},
              {"snapshot_interval", snapshot_interval},
              {"limiter", to_string(limiter)},
              {"solver_tolerance", solver_tolerance},
              {"rho_floor", rho_floor},
              {"seed", seed},
              {"out", out}};
  j["constants"] = {
      {"file", constants_file}, {"C", c_const}, {"c0", c0}, {"rho_star", rho_star}, {"eps_vac", eps_vac}};
  return j;
}

SolverConfig RunConfig::solver() const {
  SolverConfig s;
  s.mu = mu;
  s.lambda = lambda;
  s.law = law;
  s.cfl = cfl;
  s.dt_max = dt_max;
  s.limiter = limiter;
  s.t_end = t_end;
  s.rho_floor = rho_floor;
  s.solver_tolerance = solver_tolerance;
  return s;
}

void RunConfig::validate() const {
  if (n < 8 || n % 2 != 0) throw InvalidArgument("config: grid n must be even and >= 8");
  solver().validate();
  if (!(t_end > 0.0)) throw InvalidArgument("config: t_end must be positive");
  if (!(record_interval >= 0.0) || !(snapshot_interval >= 0.0)) {
    throw InvalidArgument("config: record and snapshot intervals must be >= 0");
  }
  if (!(eps_vac > 0.0)) throw InvalidArgument("config: eps_vac must be positive");
  if (!(rho_star >= 0.0)) throw InvalidArgument("config: rho_star must be >= 0");
  if (mollify < 0.0 || clamp < 0.0 || clamp >= 1.0) throw InvalidArgument("config: need mollify >= 0, 0 <= clamp < 1");
  if (velocity_x_file.empty() != velocity_y_file.empty()) {
    throw InvalidArgument("config: velocity_x_file and velocity_y_file go together");
  }
}

InitialData build_initial_data(const RunConfig& config) {
  config.validate();
  auto grid = TorusGrid::create(config.n);
  ScalarField rho = config.density_file.empty() ? make_density(grid, config.density)
                                                : read_cnsf(config.density_file, grid);
  VectorField v(grid);
  if (!config.velocity_x_file.empty()) {
    v = VectorField(read_cnsf(config.velocity_x_file, grid), read_cnsf(config.velocity_y_file, grid));
  } else {
    ShapeSpec spec = config.velocity;
    if (spec.name == "random" && !spec.params.count("seed")) spec.params["seed"] = static_cast<double>(config.seed);
    if (spec.name == "random" && !spec.params.count("nu")) spec.params["nu"] = config.nu();
    v = make_velocity(grid, spec);
  }
  if (config.mollify > 0.0) rho = mollify(rho, config.mollify);
  std::string provenance = config.density_file.empty() ? config.density.name : config.density_file;
  InitialData data = normalize_data(rho, v, provenance);
  if (config.clamp > 0.0) data = normalize_data(clamp_and_renormalize(data.rho, config.clamp).rho, data.v, provenance);
  if (config.k_target >= 0.0) {
    const auto parts = leray_project(data.v);
    const double dn = norm(divergence(data.v), Norm::L(2.0));
    if (dn > 0.0) {
      data.v = parts.solenoidal + parts.gradient * (config.k_target / std::sqrt(config.nu()) / dn);
    } else if (config.k_target > 0.0) {
      throw InvalidArgument("config: K > 0 needs an initial velocity with a gradient part");
    }
    data = normalize_data(data.rho, data.v, provenance);
  }
  return data;
}

// --------------------------------------------------------------------- run

namespace {

struct Snapshot {
  double t;
  std::string rho, vx, vy;
};

Snapshot write_snapshot(const std::filesystem::path& dir, std::size_t index, const FluidState& s) {
  char tag[16];
  std::snprintf(tag, sizeof tag, "%06zu", index);
  Snapshot snap{s.t, std::string("snapshots/rho_") + tag + ".cnsf", std::string("snapshots/vx_") + tag + ".cnsf",
                std::string("snapshots/vy_") + tag + ".cnsf"};
  write_cnsf(dir / snap.rho, s.rho);
  write_cnsf(dir / snap.vx, s.v.x);
  write_cnsf(dir / snap.vy, s.v.y);
  return snap;
}

nlohmann::json constants_json(const RunConfig& config, const RunOutput* out) {
  nlohmann::json c{{"C", config.c_const}, {"c0", config.c0}, {"eps_vac_relative", config.eps_vac}};
  if (out) {
    c["rho_star"] = out->rho_star;
    c["eps_vac"] = config.eps_vac * out->rho0_star;
    c["nu0"] = out->conditions.nu0;
  }
  if (!config.constants_file.empty()) {
    try {
      c["calibration"] = Calibration::load(config.constants_file).to_json();
    } catch (const std::exception& e) {
      c["calibration_error"] = e.what();
    }
  }
  return c;
}

}  // namespace


RunOutput run(const RunConfig& config, const RunOptions& options) {
  return run(config, build_initial_data(config), options);
}

RunOutput run(const RunConfig& config, const InitialData& data, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.out);
  RunOutput out(FluidState{data.rho, data.v, 0.0});
  std::vector<Snapshot> snapshots;
  auto manifest = [&](const std::string& status, const nlohmann::json& error) {
    nlohmann::json m;
    m["version"] = kVersion;
    m["status"] = status;
    m["config"] = config.to_json();
    m["config_hash"] = hex64(config.hash());
    m["seed"] = config.seed;
    m["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m["steps"] = out.steps;
    m["constants"] = constants_json(config, status == "ok" ? &out : nullptr);
    if (!error.is_null()) m["error"] = error;
    if (status == "ok") {
      m["summary"] = {{"t_end", out.final_state.t},       {"e0", out.e0},
                      {"rho0_star", out.rho0_star},       {"density_bound", out.bound},
                      {"mass_drift", out.mass_drift},     {"momentum_drift", out.momentum_drift},
                      {"records", out.records.size()},    {"conditions_pass", out.conditions.all_pass("2d")},
                      {"conditions", to_json(out.conditions)}};
      m["outputs"]["diagnostics"] = "diagnostics.csv";
      for (const auto& s : snapshots) {
        m["outputs"]["snapshots"].push_back({{"t", s.t}, {"rho", s.rho}, {"vx", s.vx}, {"vy", s.vy}});
      }
    }
    std::ofstream os(dir / "manifest.json");
    os << m.dump(2) << '\n';
  };
  if (options.write_outputs) std::filesystem::create_directories(dir / "snapshots");
  try {
    config.validate();
    const SolverConfig solver = config.solver();
    FluidState state{data.rho, data.v, 0.0};
    MonitorOptions mo;
    mo.rho_star = config.rho_star;
    mo.c_const = config.c_const;
    mo.record_every = config.record_interval > 0.0 ? INT_MAX : 1;
    DiagnosticsMonitor monitor(state, solver, mo);
    const double mass0 = state.mass();
    const auto [px0, py0] = state.momentum();
    double next_record = config.record_interval;
    double next_snapshot = config.snapshot_interval;
    if (options.write_outputs) snapshots.push_back(write_snapshot(dir, 0, state));
    if (options.observer) options.observer(state);

    std::vector<double> targets = options.sample_times;
    targets.push_back(config.t_end);
    std::sort(targets.begin(), targets.end());
    double progress = 0.1;
    auto on_step = [&](const FluidState& s, const StepReport&) {
      ++out.steps;
      out.mass_drift = std::max(out.mass_drift, std::abs(s.mass() - mass0) / mass0);
      const auto [px, py] = s.momentum();
      out.momentum_drift = std::max(out.momentum_drift, std::hypot(px - px0, py - py0));
      const double tol = 1e-12 * std::max(1.0, config.t_end);
      const bool last = s.t >= config.t_end - tol;
      bool force = last;
      if (config.record_interval > 0.0 && s.t >= next_record - tol) {
        force = true;
        while (next_record <= s.t + tol) next_record += config.record_interval;
      }
      monitor.observe(s, force);
      if (options.write_outputs && config.snapshot_interval > 0.0 && s.t >= next_snapshot - tol && !last) {
        snapshots.push_back(write_snapshot(dir, snapshots.size(), s));
        while (next_snapshot <= s.t + tol) next_snapshot += config.snapshot_interval;
      }
      if (options.observer) options.observer(s);
      if (!options.quiet && s.t >= progress * config.t_end) {
        std::cerr << "t = " << s.t << " / " << config.t_end << "  steps " << out.steps << '\n';
        while (progress * config.t_end <= s.t) progress += 0.1;
      }
    };
    for (double target : targets) {
      if (target < 0.0 || target > config.t_end) throw InvalidArgument("run: sample time outside [0, t_end]");
      if (target > state.t) state = integrate(std::move(state), solver, target, on_step);
      state.t = std::max(state.t, target);
      if (options.sample && target != config.t_end) options.sample(state);
    }
    if (options.sample && std::find(options.sample_times.begin(), options.sample_times.end(), config.t_end) !=
                              options.sample_times.end()) {
      options.sample(state);
    }
    if (options.write_outputs) snapshots.push_back(write_snapshot(dir, snapshots.size(), state));

    out.final_state = std::move(state);
    out.records = monitor.records();
    out.e0 = monitor.e0();
    out.rho0_star = monitor.rho0_star();
    out.rho_star = monitor.rho_star();
    out.bound = monitor.bound();
    out.conditions = monitor.conditions();
    out.step_times = monitor.step_times();
    out.step_div_l2 = monitor.step_div_l2();
    out.step_div_linf = monitor.step_div_linf();
    out.step_sup_rho = monitor.step_sup_rho();
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.write_outputs) {
      std::ofstream csv(dir / "diagnostics.csv");
      write_csv(csv, out.records);
      manifest("ok", nullptr);
    }
  } catch (const std::exception& e) {
    if (options.write_outputs) {
      const char* type = dynamic_cast<const NumericalFailure*>(&e) ? "NumericalFailure"
                         : dynamic_cast<const InvalidArgument*>(&e) ? "InvalidArgument"
                         : dynamic_cast<const NonFiniteValue*>(&e)  ? "NonFiniteValue"
                                                                    : "Error";
      manifest("error", {{"type", type}, {"message", e.what()}});
    }
    throw;
  }
  return out;
}

// ------------------------------------------------------------------- sweep

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_loglog: need at least two points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw InvalidArgument("fit_loglog: values must be positive");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
    mx += lx[k] / static_cast<double>(n);
    my += ly[k] / static_cast<double>(n);
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_loglog: x values must not all coincide");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = ly[k] - f.intercept - f.slope * lx[k];
      sse += r * r;
    }
    const double se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    const boost::math::students_t dist(static_cast<double>(n - 2));
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.ci_low = f.slope - q * se;
    f.ci_high = f.slope + q * se;
  } else {
    f.ci_low = f.ci_high = f.slope;
  }
  return f;
}

namespace {

nlohmann::json slope_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"ci95", {f.ci_low, f.ci_high}}};
}

std::vector<double> uniform_times(double t_end, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) {
    t[k] = count == 1 ? t_end : t_end * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return t;
}

double l2_time_distance(const std::vector<double>& t, const std::vector<VectorField>& a,
                        const std::vector<VectorField>& b) {
  std::vector<double> d(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) d[k] = norm(a[k] - b[k], Norm::L(2.0));
  return time_lq_norm(t, d, 2.0);
}

}  // namespace

bool SweepResult::complete() const {
  return std::all_of(members.begin(), members.end(), [](const SweepMember& m) { return m.ok; });
}

bool SweepResult::cauchy_decreasing() const {
  if (cauchy.empty()) return false;
  for (std::size_t k = 1; k < cauchy.size(); ++k) {
    if (!(cauchy[k] < cauchy[k - 1])) return false;
  }
  return true;
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json j;
  j["nu"] = nu;
  j["epsilon"] = epsilon;
  for (const auto& m : members) {
    nlohmann::json jm{{"nu", m.nu},
                      {"ok", m.ok},
                      {"conditions_pass", m.conditions_pass},
                      {"div_L2L2", m.div_l2l2},
                      {"div_LinfL2", m.div_linfl2},
                      {"div_LqLinf", m.div_lql_inf},
                      {"wall_seconds", m.wall_seconds}};
    if (!m.error.empty()) jm["error"] = m.error;
    j["members"].push_back(jm);
  }
  j["slopes"] = {{"div_L2L2", slope_json(slope_l2l2)},
                 {"div_LinfL2", slope_json(slope_linfl2)},
                 {"div_LqLinf", slope_json(slope_lqlinf)}};
  j["cauchy_L2L2"] = cauchy;
  j["cauchy_decreasing"] = cauchy_decreasing();
  j["complete"] = complete();
  return j;
}

SweepResult sweep_nu(const RunConfig& base, const std::vector<double>& nu, double epsilon,
                     std::size_t cauchy_samples) {
  if (nu.size() < 3) throw InvalidArgument("sweep_nu: need at least three values of nu");
  for (std::size_t k = 1; k < nu.size(); ++k) {
    if (!(nu[k] > nu[k - 1])) throw InvalidArgument("sweep_nu: nu values must be strictly increasing");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("sweep_nu: epsilon must lie in (0, 1)");
  InitialData data = build_initial_data(base);
  data = normalize_data(data.rho, leray_project(data.v).solenoidal, data.provenance);

  SweepResult result;
  result.nu = nu;
  result.epsilon = epsilon;
  result.members.resize(nu.size());
  const std::vector<double> times = uniform_times(base.t_end, std::max<std::size_t>(cauchy_samples, 2));
  std::vector<std::vector<VectorField>> samples(nu.size());
  parallel_for(nu.size(), [&](std::size_t k) {
    SweepMember& m = result.members[k];
    m.nu = nu[k];
    RunConfig cfg = base;
    cfg.set_nu(nu[k]);
    char name[64];
    std::snprintf(name, sizeof name, "nu_%g", nu[k]);
    cfg.out = (std::filesystem::path(base.out) / name).string();
    RunOptions opt;
    opt.write_outputs = false;
    opt.sample_times = times;
    opt.sample = [&](const FluidState& s) { samples[k].push_back(s.v); };
    try {
      const RunOutput out = run(cfg, data, opt);
      m.ok = true;
      m.conditions_pass = out.conditions.all_pass("2d");
      m.wall_seconds = out.wall_seconds;
      m.div_l2l2 = time_lq_norm(out.step_times, out.step_div_l2, 2.0);
      m.div_linfl2 = *std::max_element(out.step_div_l2.begin(), out.step_div_l2.end());
      m.div_lql_inf = time_lq_norm(out.step_times, out.step_div_linf, 2.0 - epsilon);
    } catch (const std::exception& e) {
      m.error = e.what();
    }
  });
  std::vector<double> x, y1, y2, y3;
  for (const auto& m : result.members) {
    if (!m.ok) continue;
    x.push_back(m.nu);
    y1.push_back(m.div_l2l2);
    y2.push_back(m.div_linfl2);
    y3.push_back(m.div_lql_inf);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto fit = [&](const std::vector<double>& y) {
    try {
      return fit_loglog(x, y);
    } catch (const InvalidArgument&) {
      return SlopeFit{nan, nan, nan, nan};
    }
  };
  result.slope_l2l2 = fit(y1);
  result.slope_linfl2 = fit(y2);
  result.slope_lqlinf = fit(y3);
  for (std::size_t k = 0; k + 1 < nu.size(); ++k) {
    const bool ok = result.members[k].ok && result.members[k + 1].ok;
    result.cauchy.push_back(ok ? l2_time_distance(times, samples[k], samples[k + 1]) : nan);
  }
  return result;
}

// ------------------------------------------------------------- perturbation

nlohmann::json PerturbResult::to_json() const {
  nlohmann::json j;
  j["gamma"] = gamma;
  for (const auto& s : series) {
    nlohmann::json js{{"eta", s.eta}, {"sup_weighted_delta_rho_Hm1", s.sup_weighted_rho}, {"terminal_delta_v", s.terminal_v}};
    for (const auto& m : s.metrics) {
      js["t"].push_back(m.t);
      js["delta_rho_Hm1"].push_back(m.delta_rho_hm1);
      js["delta_v_weighted"].push_back(m.delta_v_weighted);
    }
    j["series"].push_back(js);
  }
  j["slopes"] = {{"terminal_delta_v", slope_json(slope_v)}, {"sup_weighted_delta_rho", slope_json(slope_rho)}};
  return j;
}

PerturbResult perturb_experiment(const RunConfig& config, const std::vector<double>& etas, std::size_t samples) {
  if (etas.empty()) throw InvalidArgument("perturb_experiment: no amplitudes");
  const InitialData base = build_initial_data(config);
  const GridPtr& grid = base.rho.grid_ptr();
  VectorField w = make_velocity(grid, {"random",
                                       {{"amplitude", 1.0},
                                        {"kmax", 6.0},
                                        {"slope", 1.5},
                                        {"K", 1.0},
                                        {"nu", 1.0},
                                        {"seed", static_cast<double>(config.seed + 1)}}});
  const double m = base.rho.mean();
  w.x += -inner(base.rho, w.x) / m;
  w.y += -inner(base.rho, w.y) / m;
  w *= 1.0 / norm(w, Norm::L(2.0));

  const std::vector<double> times = uniform_times(config.t_end, std::max<std::size_t>(samples, 2));
  std::vector<std::vector<FluidState>> states(etas.size() + 1);
  parallel_for(etas.size() + 1, [&](std::size_t k) {
    InitialData d = base;
    if (k > 0) d.v += w * etas[k - 1];
    RunOptions opt;
    opt.write_outputs = false;
    opt.sample_times = times;
    opt.sample = [&](const FluidState& s) { states[k].push_back(s); };
    run(config, d, opt);
  });

  PerturbResult r;
  r.gamma = config.law.gamma();
  std::vector<double> xs, yv, yr;
  for (std::size_t e = 0; e < etas.size(); ++e) {
    PerturbSeries s;
    s.eta = etas[e];
    for (std::size_t k = 0; k < times.size(); ++k) {
      s.metrics.push_back(difference_metrics(states[e + 1][k], states[0][k]));
      if (times[k] > 0.0) {
        s.sup_weighted_rho = std::max(s.sup_weighted_rho, s.metrics.back().delta_rho_hm1 / std::sqrt(times[k]));
      }
    }
    s.terminal_v = s.metrics.back().delta_v_weighted;
    if (s.eta > 0.0 && s.terminal_v > 0.0 && s.sup_weighted_rho > 0.0) {
      xs.push_back(s.eta);
      yv.push_back(s.terminal_v);
      yr.push_back(s.sup_weighted_rho);
    }
    r.series.push_back(std::move(s));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (xs.size() >= 2 && xs.front() != xs.back()) {
    r.slope_v = fit_loglog(xs, yv);
    r.slope_rho = fit_loglog(xs, yr);
  } else {
    r.slope_v = r.slope_rho = SlopeFit{nan, nan, nan, nan};
  }
  return r;
}

// -------------------------------------------------------------- conditions

nlohmann::json to_json(const ConditionTable& t) {
  nlohmann::json j{{"nu", t.nu},         {"mu", t.mu},           {"rho_star", t.rho_star},
                   {"P_star", t.p_star}, {"h_sup", t.h_sup},     {"C", t.c_const},
                   {"nu0", t.nu0},       {"pass_2d", t.all_pass("2d")}, {"pass_3d", t.all_pass("3d")}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : t.rows) {
    j["rows"].push_back({{"family", r.family}, {"name", r.name}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}});
  }
  return j;
}

nlohmann::json ConditionsReport::to_json() const {
  nlohmann::json j = cns::to_json(table);
  j["e0"] = e0;
  j["rho0_star"] = rho0_star;
  j["smallness_3d"] = {
      {"lhs", smallness.lhs}, {"rhs", smallness.rhs}, {"ratio", smallness.ratio}, {"pass", smallness.pass}};
  return j;
}

std::string ConditionsReport::to_text() const {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "nu = %g  mu = %g  rho* = %g  P* = %g  |h|_inf = %g  C = %g\n", table.nu,
                table.mu, table.rho_star, table.p_star, table.h_sup, table.c_const);
  os << line;
  std::snprintf(line, sizeof line, "E0 = %g  rho0* = %g  nu0 = %g\n\n", e0, rho0_star, table.nu0);
  os << line;
  std::snprintf(line, sizeof line, "%-6s %-34s %14s %14s  %s\n", "family", "condition", "lhs", "rhs", "result");
  os << line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%-6s %-34s %14.6g %14.6g  %s\n", r.family.c_str(), r.name.c_str(), r.lhs,
                  r.rhs, r.pass ? "pass" : "FAIL");
    os << line;
  }
  std::snprintf(line, sizeof line, "%-6s %-34s %14.6g %14.6g  %s\n", "3d", "smallness of the data", smallness.lhs,
                smallness.rhs, smallness.pass ? "pass" : "FAIL");
  os << line;
  return os.str();
}

ConditionsReport check_conditions(const RunConfig& config) {
  const InitialData data = build_initial_data(config);
  ConditionsReport r;
  const FluidState s{data.rho, data.v, 0.0};
  r.e0 = total_energy(s, config.law);
  r.rho0_star = data.rho.max();
  const double rho_star =
      config.rho_star > 0.0 ? config.rho_star : density_bound(config.law.gamma(), r.e0, r.rho0_star);
  r.table = evaluate_conditions(config.nu(), config.mu, rho_star, config.law, config.c_const);
  r.smallness = smallness_3d_check(data.rho, data.v, config.law, config.mu, config.nu(), rho_star, r.e0, config.c0);
  return r;
}

}  // namespace cns

namespace cns {

// ------------------------------------------------------------------ vacuum

bool VacuumRunReport::alpha_valid() const {
  if (alpha.empty() || alpha.front() != 1.0) return false;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0 && alpha[k] <= 1.0)) return false;
    if (k > 0 && alpha[k] > alpha[k - 1]) return false;
  }
  return true;
}

nlohmann::json VacuumRunReport::to_json() const {
  nlohmann::json j;
  j["eps_vac"] = eps;
  j["vacuum_present"] = vacuum_present;
  j["comparisons"] = nlohmann::json::array();
  for (std::size_t k = 0; k < comparisons.size(); ++k) {
    const auto& c = comparisons[k];
    j["comparisons"].push_back({{"t", c.t},
                                {"eulerian_area", c.eulerian_area},
                                {"lagrangian_area", c.lagrangian_area},
                                {"symmetric_difference", c.symmetric_difference},
                                {"relative", c.relative},
                                {"interior_min_rho", c.interior_min_rho},
                                {"ll_sampled", ll_sampled.at(k)}});
  }
  j["alpha"] = {{"t", times}, {"ll_bound", ll_bound}, {"alpha", alpha}, {"valid", alpha_valid()}};
  j["trajectory_density"] = {{"seeds", trajectory_seeds}, {"skipped", trajectory_skipped}};
  for (const auto& r : trajectory) {
    j["trajectory_density"]["t"].push_back(r.t);
    j["trajectory_density"]["max_relative"].push_back(r.max_relative);
    j["trajectory_density"]["mean_relative"].push_back(r.mean_relative);
  }
  return j;
}

VacuumRunReport track_vacuum(const RunConfig& config, const TrackOptions& options) {
  const InitialData data = build_initial_data(config);
  VacuumRunReport report;
  report.eps = config.eps_vac * data.rho.max();
  VacuumTracker vacuum(data.rho, data.v, report.eps, options.subdivision);
  report.vacuum_present = !vacuum.empty();
  if (!report.vacuum_present && !options.quiet) std::cerr << "no initial vacuum below eps_vac; vacuum check skipped\n";
  TrajectoryDensity traj(data.rho, data.v, lattice_seeds(options.lattice), report.eps);
  report.trajectory_seeds = traj.kept();
  report.trajectory_skipped = traj.skipped();
  if (traj.skipped() > 0 && !options.quiet) {
    std::cerr << traj.skipped() << " trajectory seeds near the vacuum edge skipped\n";
  }
  const std::filesystem::path dir = std::filesystem::path(config.out) / "vacuum";
  if (options.write_outputs) std::filesystem::create_directories(dir);

  auto compare = [&](const FluidState& s) {
    report.ll_sampled.push_back(ll_norm(s.v, options.ll_pairs, config.seed + 17).sampled);
    report.trajectory.push_back(traj.residual(s.rho));
    if (!report.vacuum_present) {
      report.comparisons.push_back({s.t, 0.0, 0.0, 0.0, 0.0, s.rho.min()});
    } else {
      report.comparisons.push_back(vacuum.compare(s.rho));
    }
    if (options.write_outputs) {
      char tag[16];
      std::snprintf(tag, sizeof tag, "%04zu", report.comparisons.size() - 1);
      const VacuumSet eul = vacuum_set(s.rho, report.eps);
      const VacuumSet lag = vacuum.lagrangian_set();
      write_cnsf(dir / (std::string("eulerian_") + tag + ".cnsf"), eul.indicator);
      write_cnsf(dir / (std::string("lagrangian_") + tag + ".cnsf"), lag.indicator);
      write_polylines_csv(dir / (std::string("boundary_eulerian_") + tag + ".csv"), eul.boundary());
      write_polylines_csv(dir / (std::string("boundary_lagrangian_") + tag + ".csv"), lag.boundary());
    }
  };

  RunOptions opt;
  opt.write_outputs = options.write_outputs;
  opt.quiet = options.quiet;
  if (options.compare_interval > 0.0) {
    for (double t = options.compare_interval; t < config.t_end - 1e-12; t += options.compare_interval) {
      opt.sample_times.push_back(t);
    }
  }
  opt.sample_times.push_back(config.t_end);
  bool first = true;
  opt.observer = [&](const FluidState& s) {
    if (!first) {
      vacuum.advance(s.v, s.t);
      traj.advance(s.v, s.t);
    }
    first = false;
    report.times.push_back(s.t);
    report.ll_bound.push_back(ll_norm(s.v, 0).bound);
  };
  opt.sample = compare;
  run(config, data, opt);
  report.alpha = holder_exponent(report.times, report.ll_bound);
  if (options.write_outputs) {
    std::ofstream os(std::filesystem::path(config.out) / "vacuum.json");
    os << report.to_json().dump(2) << '\n';
  }
  return report;
}

}  // namespace cns
