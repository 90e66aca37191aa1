#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnslab/field.hpp"

namespace cns {

struct InequalityReport {
  std::string inequality;
  std::string sample;
  double lhs = 0.0;
  double rhs_without_constant = 0.0;
  double implied_constant = 0.0;  ///< lhs / rhs_without_constant (0 when both vanish)
  std::optional<double> calibration;
  bool pass = true;
  bool vacuous = false;
  /// Secondary quantity: for the log-Poincaré form, the implied constant of the
  /// average bound |b̄| ≤ C log^{1/2}(e + ‖ρ-c‖₂/M)‖∇b‖₂.
  double aux = 0.0;
};

// ---------------------------------------------------------------- Osgood

struct OsgoodPoint {
  double t = 0.0;
  double x = 0.0;
  double lhs = 0.0;  ///< A + B X(t)
  double rhs = 0.0;  ///< (A + B e^{∫g} X₀)^{exp ∫f}
};

struct OsgoodReport {
  std::vector<OsgoodPoint> points;
  double max_relative_excess = 0.0;  ///< max (lhs - rhs)/rhs, may be negative
  bool blowup = false;
  double blowup_time = 0.0;
  bool pass = true;  ///< max_relative_excess ≤ tolerance
};

/// Integrates the equality case X' = f X log(A + BX) + g X with an adaptive
/// Dormand–Prince oracle (tolerance 1e-12) together with ∫f and ∫g, and checks
/// A + BX(t) ≤ (A + B e^{∫g} X₀)^{exp ∫f} at each output time.
OsgoodReport osgood_check(const std::function<double(double)>& f, const std::function<double(double)>& g, double a,
                          double b, double x0, const std::vector<double>& times, double tolerance = 1e-8);

// -------------------------------------------------------------- Poincaré

/// ‖b‖₂ ≤ (1 + C_p‖ρ - c‖_{p'}/M)‖∇b‖₂ under ∫ρb = 0. For p = 2 the constant is
/// 1 and the report passes iff the inequality holds with it; for p > 2 the
/// implied C_p is reported. Throws InvalidArgument if |∫ρb| > 1e-9 (scaled) or M ≤ 0.
InequalityReport poincare_weighted(const ScalarField& rho, const ScalarField& b, double p, double c);

/// ‖b‖₂ ≤ C log^{1/2}(e + ‖ρ - c‖₂/M)‖∇b‖₂; implied C and the average bound in aux.
InequalityReport poincare_log(const ScalarField& rho, const ScalarField& b, double c,
                              std::optional<double> calibration = std::nullopt);

/// ‖b̃_n‖∞ ≤ C √(log n) ‖∇b‖₂ with b̃_n the modes 1 ≤ |k| ≤ n. Requires n ≥ 2.
InequalityReport truncation_sup_bound(const ScalarField& b, int n, std::optional<double> calibration = std::nullopt);

/// (∫ρu⁴)^{1/2} ≤ C ‖√ρu‖₂‖∇u‖₂ log^{1/2}(e + ‖ρ-c‖₂/M + ‖ρ‖₂‖∇u‖₂²/‖√ρu‖₂²).
/// Reported vacuous when ‖√ρu‖₂ = 0.
InequalityReport desjardins_ratio(const ScalarField& rho, const ScalarField& u, double c,
                                  std::optional<double> calibration = std::nullopt);

/// Subtracts (∫ρb)/(∫ρ) so that ∫ρb = 0.
ScalarField remove_weighted_mean(const ScalarField& rho, const ScalarField& b);

// ---------------------------------------------------------------- sampler

/// Random test data: band-limited fields with random phases and |k|^{-s}
/// envelopes (s ∈ {1, 1.5, 2}), and densities drawn from smooth, indicator
/// (disc, square, star) and extreme-contrast families. Sample i depends only
/// on (seed, i).
class FieldSampler {
 public:
  FieldSampler(GridPtr grid, std::uint64_t seed) : grid_(std::move(grid)), seed_(seed) {}

  struct Sample {
    ScalarField rho;
    ScalarField b;
    double c = 1.0;  ///< reference constant in ‖ρ - c‖
    int truncation = 2;
    std::string descriptor;
  };

  Sample draw(std::uint64_t index) const;
  const GridPtr& grid() const { return grid_; }

 private:
  GridPtr grid_;
  std::uint64_t seed_;
};

// ------------------------------------------------------------ calibration

struct Calibration {
  double truncation = 2.0;
  double log_poincare = 2.0;
  double desjardins = 2.0;
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  double safety = 1.5;
  int grid_n = 64;

  nlohmann::json to_json() const;
  static Calibration from_json(const nlohmann::json& j);
  static Calibration load(const std::string& path);
  void save(const std::string& path) const;
};

/// Max implied constant over `samples` draws, times `safety`.
Calibration calibrate(const GridPtr& grid, std::uint64_t samples, std::uint64_t seed, double safety = 1.5);

struct SuiteEntry {
  std::string inequality;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  double max_implied_constant = 0.0;
  std::optional<double> calibration;
  std::string worst_sample;
  bool pass = true;
};

struct SuiteResult {
  std::uint64_t seed = 0;
  std::vector<SuiteEntry> entries;
  OsgoodReport osgood_worst;
  bool pass() const;
  nlohmann::json to_json() const;
};

/// Weighted Poincaré (p = 2, constant 1), log-Poincaré, truncation and
/// Desjardins bounds on `samples` fresh draws each, plus a family of Osgood
/// equality-case integrations.
SuiteResult run_inequality_suite(const GridPtr& grid, const Calibration& calibration, std::uint64_t samples,
                                 std::uint64_t seed);

}  // namespace cns
