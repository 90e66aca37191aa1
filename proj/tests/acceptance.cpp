// Runs every acceptance criterion at its tolerance and prints one line each.
// Exit status 0 when all pass, 2 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnslab/harness.hpp"
#include "cnslab/ineq.hpp"
#include "cnslab/spectral.hpp"

namespace fs = std::filesystem;
using namespace cns;

namespace {

fs::path g_source;
fs::path g_out;
bool g_verbose = false;

struct Outcome {
  bool pass = false;
  std::string detail;
  nlohmann::json data;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

RunConfig config(const std::string& name) {
  RunConfig c = RunConfig::load(g_source / "configs" / name);
  c.out = (g_out / fs::path(name).stem()).string();
  return c;
}

RunOptions quiet_run() {
  RunOptions o;
  o.quiet = !g_verbose;
  return o;
}

// Identity checks shared by every run that emits records.
struct IdentityTally {
  std::size_t records = 0, with_conditions = 0;
  double worst_elliptic = 0.0;
  double worst_margin = 1e300;
  double worst_div_ratio = 0.0;
  bool pass = true;

  void add(const std::vector<DiagnosticsRecord>& rs) {
    for (const auto& r : rs) {
      ++records;
      worst_elliptic = std::max(worst_elliptic, r.elliptic_gap);
      worst_margin = std::min(worst_margin, r.equiv_e_margin);
      if (r.elliptic_gap > 1e-9 || r.equiv_e_margin < -1e-10) pass = false;
      if (r.conditions_pass) {
        ++with_conditions;
        worst_div_ratio = std::max(worst_div_ratio, r.div_energy_ratio);
        if (r.div_energy_ratio > 1.0) pass = false;
      }
    }
  }
};
IdentityTally g_identities;

double shear_error(std::size_t n) {
  RunConfig c = config("shear_wave.ini");
  c.n = n;
  RunOptions o = quiet_run();
  o.write_outputs = false;
  const auto out = run(c, o);
  g_identities.add(out.records);
  const double t = out.final_state.t;
  const double decay = std::exp(-4.0 * M_PI * M_PI * c.mu * t);
  const auto exact = ScalarField::sample(out.final_state.rho.grid_ptr(),
                                         [&](double, double y) { return decay * std::sin(2.0 * M_PI * y); });
  double err = norm(out.final_state.v.x - exact, Norm::Linf());
  err = std::max(err, norm(out.final_state.v.y, Norm::Linf()));
  return err;
}

Outcome shear_convergence() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> hs, errs;
  for (std::size_t n : {64, 128, 256}) {
    hs.push_back(1.0 / static_cast<double>(n));
    errs.push_back(shear_error(n));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double o1 = std::log2(errs[0] / errs[1]), o2 = std::log2(errs[1] / errs[2]);
  const double fitted = fit_loglog(hs, errs).slope;
  Outcome r;
  r.pass = std::min(o1, o2) >= 1.8 && secs < 120.0;
  r.detail = "Linf errors " + num(errs[0]) + " " + num(errs[1]) + " " + num(errs[2]) + ", orders " + num(o1) + " " +
             num(o2) + " (fit " + num(fitted) + "), " + num(secs) + " s";
  r.data = {{"h", hs}, {"errors", errs}, {"orders", {o1, o2}}, {"fitted_order", fitted}, {"seconds", secs}};
  return r;
}

Outcome conservation_check() {
  RunConfig c = config("ripped_disc.ini");
  const auto out = run(c, quiet_run());
  g_identities.add(out.records);
  Outcome r;
  r.pass = out.mass_drift <= 1e-10 && out.momentum_drift <= 1e-6;
  r.detail = "n=" + std::to_string(c.n) + " t=" + num(out.final_state.t) + ": mass drift " + num(out.mass_drift) +
             ", momentum drift " + num(out.momentum_drift);
  r.data = {{"mass_drift", out.mass_drift}, {"momentum_drift", out.momentum_drift}, {"steps", out.steps}};
  return r;
}

Outcome energy_balance() {
  std::vector<double> ns, res;
  for (std::size_t n : {64, 128, 256}) {
    RunConfig c = config("smooth.ini");
    c.n = n;
    RunOptions o = quiet_run();
    o.write_outputs = false;
    const auto out = run(c, o);
    g_identities.add(out.records);
    ns.push_back(static_cast<double>(n));
    res.push_back(std::abs(out.records.back().energy_residual));
  }
  // Floor at the finest level predicted from the trend of the two coarser ones.
  const double order = std::log2(res[0] / res[1]);
  const double floor = res[1] * std::pow(2.0, -order);
  Outcome r;
  r.pass = res[0] > res[1] && res[1] > res[2] && res[2] <= 10.0 * floor;
  r.detail = "|R(T)| " + num(res[0]) + " " + num(res[1]) + " " + num(res[2]) + ", extrapolated floor " + num(floor);
  r.data = {{"n", ns}, {"residual", res}, {"order", order}, {"floor", floor}};
  return r;
}

Outcome density_bound_check() {
  RunConfig c = config("density_bound.ini");
  const double nu0 = check_conditions(c).table.nu0;
  c.set_nu(100.0 * nu0);
  const auto out = run(c, quiet_run());
  g_identities.add(out.records);
  const double sup = *std::max_element(out.step_sup_rho.begin(), out.step_sup_rho.end());
  Outcome r;
  r.pass = sup <= 2.0 * out.rho0_star;
  r.detail = "nu=" + num(c.nu()) + " (100 nu0): sup rho " + num(sup) + " vs 2 rho0* = " + num(2.0 * out.rho0_star) +
             " over " + std::to_string(out.step_sup_rho.size()) + " steps";
  r.data = {{"nu", c.nu()}, {"nu0", nu0}, {"sup_rho", sup}, {"rho0_star", out.rho0_star}};
  return r;
}

Outcome singular_limit() {
  const auto start = std::chrono::steady_clock::now();
  RunConfig c = config("sweep.ini");
  const auto s = sweep_nu(c, {1e2, 1e3, 1e4});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome r;
  r.pass = s.complete() && s.slope_l2l2.slope <= -0.5 + 0.15 && s.cauchy_decreasing() && secs < 1800.0;
  std::ostringstream cauchy;
  for (double x : s.cauchy) cauchy << ' ' << num(x);
  r.detail = "slope " + num(s.slope_l2l2.slope) + " [" + num(s.slope_l2l2.ci_low) + ", " + num(s.slope_l2l2.ci_high) +
             "], Cauchy" + cauchy.str() + ", " + num(secs) + " s";
  r.data = s.to_json();
  return r;
}

Outcome inequality_suite() {
  const auto cal = Calibration::load((g_source / "data" / "calibration.json").string());
  auto grid = TorusGrid::create(static_cast<std::size_t>(cal.grid_n));
  const auto s = run_inequality_suite(grid, cal, 1000, 424242);
  Outcome r;
  r.pass = s.pass();
  std::ostringstream os;
  for (const auto& e : s.entries) os << e.inequality << ' ' << e.violations << '/' << e.samples << ", ";
  os << "Osgood excess " << num(s.osgood_worst.max_relative_excess);
  r.detail = os.str();
  r.data = s.to_json();
  return r;
}

Outcome vacuum_transport() {
  TrackOptions opt;
  opt.quiet = !g_verbose;
  opt.compare_interval = 0.1;
  const auto rep = track_vacuum(config("vacuum.ini"), opt);
  const double rel = rep.comparisons.empty() ? 1e300 : rep.comparisons.back().relative;

  std::vector<double> hs, res;
  for (std::size_t n : {32, 64, 128}) {
    RunConfig c = config("smooth.ini");
    c.n = n;
    TrackOptions o;
    o.write_outputs = false;
    o.ll_pairs = 0;
    const auto t = track_vacuum(c, o);
    hs.push_back(1.0 / static_cast<double>(n));
    res.push_back(t.trajectory.back().max_relative);
  }
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  const double fitted = fit_loglog(hs, res).slope;
  Outcome r;
  r.pass = rep.vacuum_present && rel <= 0.1 && fitted >= 1.0 && rep.alpha_valid();
  r.detail = "relative difference " + num(rel) + " at t=" + num(rep.comparisons.back().t) + ", trajectory residuals " +
             num(res[0]) + " " + num(res[1]) + " " + num(res[2]) + " (fitted order " + num(fitted) + ", pairwise " + num(o1) +
             " " + num(o2) + "), alpha in (0,1] nonincreasing: " + (rep.alpha_valid() ? "yes" : "no");
  r.data = {{"vacuum", rep.to_json()}, {"trajectory_h", hs}, {"trajectory_residual", res},
            {"trajectory_orders", {o1, o2}}, {"trajectory_fitted_order", fitted}};
  return r;
}

Outcome perturbation() {
  const auto p = perturb_experiment(config("perturb.ini"), {1e-2, 1e-3, 1e-4});
  Outcome r;
  r.pass = p.slope_v.slope >= 0.8 && p.slope_v.slope <= 1.2;
  std::ostringstream os;
  for (const auto& s : p.series) os << ' ' << num(s.terminal_v);
  r.detail = "slope " + num(p.slope_v.slope) + ", terminal |sqrt(rho) dv|:" + os.str();
  r.data = p.to_json();
  return r;
}

Outcome identities_check() {
  const auto& t = g_identities;
  Outcome r;
  r.pass = t.pass && t.records > 0;
  r.detail = std::to_string(t.records) + " records: max elliptic gap " + num(t.worst_elliptic) + ", min margin " +
             num(t.worst_margin) + ", max nu|div v|^2/4E " + num(t.worst_div_ratio) + " on " +
             std::to_string(t.with_conditions) + " records passing the nu-conditions";
  r.data = {{"records", t.records},
            {"max_elliptic_gap", t.worst_elliptic},
            {"min_equiv_margin", t.worst_margin},
            {"max_div_energy_ratio", t.worst_div_ratio},
            {"records_with_conditions", t.with_conditions}};
  return r;
}

struct Criterion {
  std::string name;
  std::function<Outcome()> body;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<std::string> only;
  std::string source, out = (fs::temp_directory_path() / "cnslab_acceptance").string();
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  app.add_option("--source", source, "source tree holding configs/ and data/");
  app.add_option("--out", out, "scratch and report directory");
  app.add_flag("--verbose", g_verbose, "print solver progress");
  CLI11_PARSE(app, argc, argv);

  if (source.empty()) {
    const char* env = std::getenv("CNSLAB_SOURCE_DIR");
    source = env ? env : CNSLAB_SOURCE_DIR_DEFAULT;
  }
  g_source = source;
  g_out = out;
  fs::create_directories(g_out);

  // Identities come last: they audit the records of the runs before them.
  const std::vector<Criterion> criteria = {
      {"shear-convergence", [] { return shear_convergence(); }}, {"conservation", [] { return conservation_check(); }},
      {"energy-balance", [] { return energy_balance(); }},       {"density-bound", [] { return density_bound_check(); }},
      {"singular-limit", [] { return singular_limit(); }},       {"inequalities", [] { return inequality_suite(); }},
      {"vacuum-transport", [] { return vacuum_transport(); }},   {"perturbation", [] { return perturbation(); }},
      {"identities", [] { return identities_check(); }},
  };

  nlohmann::json report;
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::printf("%s  %-18s %s  [%.0f s]\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    report[c.name] = {{"pass", o.pass}, {"detail", o.detail}, {"seconds", secs}, {"data", o.data}};
  }
  std::ofstream(g_out / "acceptance.json") << report.dump(2) << '\n';
  return all ? 0 : 2;
}
