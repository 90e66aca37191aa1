#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cnslab/error.hpp"
#include "cnslab/harness.hpp"
#include "cnslab/ineq.hpp"

namespace fs = std::filesystem;
using namespace cns;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<double> nu;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment configuration file");
  if (config_required) opt->required();
  app->add_option("--out", c.out, "output directory (overrides [run] out)");
  app->add_option("--seed", c.seed, "random seed (overrides [run] seed)");
  app->add_option("--nu", c.nu, "comma-separated list of nu values")->delimiter(',');
  app->add_flag("--quiet", c.quiet, "suppress progress output");
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
  if (!c.out.empty()) cfg.out = c.out;
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void check(bool ok, const std::string& what, std::vector<std::string>& failures) {
  if (!ok) failures.push_back(what);
}

void finish(const std::vector<std::string>& failures) {
  if (failures.empty()) return;
  std::ostringstream os;
  for (const auto& f : failures) os << "\n  " << f;
  throw AssertionFailure("checks failed:" + os.str());
}

int cmd_run(const Common& c) {
  const RunConfig cfg = load_config(c);
  RunOptions opt;
  opt.quiet = c.quiet;
  const RunOutput out = run(cfg, opt);
  std::vector<std::string> failures;
  for (const auto& r : out.records) {
    std::ostringstream t;
    t << " at t = " << r.t;
    check(r.elliptic_gap <= 1e-9, "elliptic identity" + t.str(), failures);
    check(r.equiv_e_margin >= -1e-10, "energy equivalence margin" + t.str(), failures);
    if (r.conditions_pass) check(r.div_energy_ratio <= 1.0, "nu |div v|^2 <= 4 E" + t.str(), failures);
  }
  if (!c.quiet) {
    std::cout << "steps " << out.steps << ", t = " << out.final_state.t << ", records " << out.records.size()
              << ", mass drift " << out.mass_drift << ", momentum drift " << out.momentum_drift << '\n'
              << "wrote " << cfg.out << '\n';
  }
  finish(failures);
  return 0;
}

int cmd_sweep(const Common& c, double epsilon) {
  RunConfig cfg = load_config(c);
  const std::vector<double> nu = c.nu.empty() ? std::vector<double>{1e2, 1e3, 1e4} : c.nu;
  const SweepResult r = sweep_nu(cfg, nu, epsilon);
  write_json(fs::path(cfg.out) / "sweep.json", r.to_json());
  if (!c.quiet) {
    for (const auto& m : r.members) {
      std::cout << "nu " << m.nu << (m.ok ? "" : "  FAILED: " + m.error) << "  |div|_L2L2 " << m.div_l2l2
                << "  |div|_LinfL2 " << m.div_linfl2 << "  conditions " << (m.conditions_pass ? "pass" : "fail")
                << '\n';
    }
    std::cout << "slope L2L2 " << r.slope_l2l2.slope << "  slope Lq Linf " << r.slope_lqlinf.slope << '\n';
    for (double d : r.cauchy) std::cout << "cauchy " << d << '\n';
  }
  std::vector<std::string> failures;
  check(r.complete(), "every member run completes", failures);
  check(r.slope_l2l2.slope <= -0.35, "slope of |div v|_L2L2 <= -0.35", failures);
  check(r.cauchy_decreasing(), "Cauchy distances strictly decreasing", failures);
  finish(failures);
  return 0;
}

int cmd_inequalities(const Common& c, std::uint64_t samples, std::string constants, std::uint64_t calibrate_n) {
  const RunConfig cfg = load_config(c);
  if (constants.empty()) constants = cfg.constants_file.empty() ? "data/calibration.json" : cfg.constants_file;
  const std::uint64_t seed = c.seed ? *c.seed : 1;
  if (calibrate_n > 0) {
    const Calibration cal = calibrate(TorusGrid::create(64), calibrate_n, seed);
    cal.save(constants);
    if (!c.quiet) std::cout << cal.to_json().dump(2) << '\n';
    return 0;
  }
  Calibration cal;
  if (fs::exists(constants)) {
    cal = Calibration::load(constants);
  } else if (!c.quiet) {
    std::cerr << "no calibration file at " << constants << ", using default constants\n";
  }
  const SuiteResult r = run_inequality_suite(TorusGrid::create(static_cast<std::size_t>(cal.grid_n)), cal, samples, seed);
  nlohmann::json j = r.to_json();
  j["constants_file"] = constants;
  j["samples"] = samples;
  if (!c.out.empty() || !c.config.empty()) write_json(fs::path(cfg.out) / "inequalities.json", j);
  if (!c.quiet) std::cout << j.dump(2) << '\n';
  if (!r.pass()) throw AssertionFailure("inequality suite failed");
  return 0;
}

int cmd_track(const Common& c, double interval) {
  const RunConfig cfg = load_config(c);
  TrackOptions opt;
  opt.quiet = c.quiet;
  opt.compare_interval = interval;
  const VacuumRunReport r = track_vacuum(cfg, opt);
  if (!c.quiet) {
    for (const auto& cmp : r.comparisons) {
      std::cout << "t " << cmp.t << "  vacuum area E " << cmp.eulerian_area << "  L " << cmp.lagrangian_area
                << "  relative difference " << cmp.relative << '\n';
    }
    std::cout << "alpha_T " << r.alpha.back() << "  (eps_vac " << r.eps << ")\n";
  }
  std::vector<std::string> failures;
  check(r.alpha_valid(), "alpha_t in (0,1] and nonincreasing", failures);
  finish(failures);
  return 0;
}

int cmd_perturb(const Common& c, const std::vector<double>& etas, bool gamma2) {
  const RunConfig cfg = load_config(c);
  const PerturbResult r = perturb_experiment(cfg, etas);
  nlohmann::json j{{"primary", r.to_json()}};
  if (gamma2 && cfg.law.gamma() == 1.0) {
    RunConfig g2 = cfg;
    g2.law = PressureLaw(cfg.law.a(), 2.0);
    j["gamma2"] = perturb_experiment(g2, etas).to_json();
  }
  write_json(fs::path(cfg.out) / "perturb.json", j);
  if (!c.quiet) {
    for (const auto& s : r.series) {
      std::cout << "eta " << s.eta << "  |sqrt(rho) dv|(T) " << s.terminal_v << "  sup t^-1/2 |drho|_H-1 "
                << s.sup_weighted_rho << '\n';
    }
    std::cout << "slope " << r.slope_v.slope << '\n';
  }
  if (cfg.law.gamma() == 1.0 && !(r.slope_v.slope >= 0.8 && r.slope_v.slope <= 1.2)) {
    throw AssertionFailure("perturbation slope outside [0.8, 1.2]");
  }
  return 0;
}

int cmd_conditions(const Common& c) {
  RunConfig cfg = load_config(c);
  if (!c.nu.empty()) cfg.set_nu(c.nu.front());
  const ConditionsReport r = check_conditions(cfg);
  if (!c.quiet) std::cout << r.to_text();
  if (!c.out.empty() || !c.config.empty()) write_json(fs::path(cfg.out) / "conditions.json", r.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressible Navier-Stokes laboratory on the periodic square"};
  app.require_subcommand(1);
  Common common;

  auto* run_cmd = app.add_subcommand("run", "integrate one configuration and write diagnostics");
  add_common(run_cmd, common, true);

  double epsilon = 0.5;
  auto* sweep_cmd = app.add_subcommand("sweep-nu", "run a family in nu and fit the divergence rates");
  add_common(sweep_cmd, common, true);
  sweep_cmd->add_option("--epsilon", epsilon, "time exponent 2 - epsilon of the L_inf diagnostics");

  std::uint64_t samples = 1000, calibrate_n = 0;
  std::string constants;
  auto* ineq_cmd = app.add_subcommand("verify-inequalities", "randomized checks of the functional inequalities");
  add_common(ineq_cmd, common, false);
  ineq_cmd->add_option("--samples", samples, "samples per inequality");
  ineq_cmd->add_option("--constants", constants, "calibration file");
  ineq_cmd->add_option("--calibrate", calibrate_n, "recalibrate with this many samples and write --constants");

  double interval = 0.1;
  auto* track_cmd = app.add_subcommand("track-vacuum", "compare Eulerian and Lagrangian vacuum sets");
  add_common(track_cmd, common, true);
  track_cmd->add_option("--interval", interval, "time between comparisons (0: final time only)");

  std::vector<double> etas{1e-2, 1e-3, 1e-4};
  bool no_gamma2 = false;
  auto* perturb_cmd = app.add_subcommand("perturb", "stability of the flow under velocity perturbations");
  add_common(perturb_cmd, common, true);
  perturb_cmd->add_option("--eta", etas, "comma-separated perturbation amplitudes")->delimiter(',');
  perturb_cmd->add_flag("--no-gamma2", no_gamma2, "skip the gamma = 2 comparison");

  auto* cond_cmd = app.add_subcommand("check-conditions", "evaluate the large-nu conditions for a configuration");
  add_common(cond_cmd, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run_cmd) return cmd_run(common);
    if (*sweep_cmd) return cmd_sweep(common, epsilon);
    if (*ineq_cmd) return cmd_inequalities(common, samples, constants, calibrate_n);
    if (*track_cmd) return cmd_track(common, interval);
    if (*perturb_cmd) return cmd_perturb(common, etas, !no_gamma2);
    if (*cond_cmd) return cmd_conditions(common);
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
