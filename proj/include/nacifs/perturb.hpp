#pragma once

// Perturbations of a system and the continuity experiments comparing
// d(Psi, Psi~) with the D distances of diameters and harmonic measures and
// with the dimension of harmonic measure.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nacifs/conformal.hpp"
#include "nacifs/harmonic.hpp"

namespace nacifs {

/// log(1 - eta) / log(eta (1 - eta)). Throws Error(DomainError) outside (0, 1).
double alpha_exponent(double eta);

enum class PerturbMode { TranslateB, ScaleA, JiggleC };

std::string to_string(PerturbMode mode);
PerturbMode parse_perturb_mode(const std::string& name);

struct PerturbationPlan {
  double epsilon = 0.0;
  PerturbMode mode = PerturbMode::TranslateB;
  std::uint64_t seed = 1;
  double shrink = 0.5;
  int max_shrinks = 10;
  /// JiggleC adds epsilon * kappa * e^{i theta} to c.
  double kappa = 0.1;
  /// Generations perturbed and materialized; defaults to the base horizon.
  std::optional<int> horizon;
};

struct PerturbationResult {
  SystemSpec system;
  /// Total number of per-map shrink steps applied.
  int shrinks = 0;
  /// Largest epsilon actually applied to any map.
  double applied_max = 0.0;
};

/// Explicit system whose generation n is generation n of the base with every
/// map moved by at most epsilon. Maps whose move breaks validation or
/// compatibility have their own epsilon halved, up to max_shrinks times.
/// Throws Error(PerturbationInfeasible).
PerturbationResult perturb_with_report(const SystemSpec& base, const PerturbationPlan& plan);
SystemSpec perturb_system(const SystemSpec& base, const PerturbationPlan& plan);

struct ContinuityConfig {
  PerturbMode mode = PerturbMode::TranslateB;
  std::uint64_t plan_seed = 1;
  WalkerConfig walker;
  int approx_depth = 8;
  int assign_depth = 4;
  int window = 2;
  /// Truncation of D(omega, omega~); needs assign_depth >= dcal_horizon + 1.
  int dcal_horizon = 2;
  /// Truncation of D(s, s~).
  int diam_horizon = 5;
  DiameterMethod diam_method = DiameterMethod::SampleImage;
  int sample_depth = 4;
  /// Every row reuses the walker seed; otherwise row i uses
  /// derive_seed(seed, "row", i).
  bool common_random_numbers = true;
};

struct ContinuityRow {
  double epsilon = 0.0;
  int shrinks = 0;
  double d_hat = 0.0;
  double dcal_diam = 0.0;
  double dcal_omega = 0.0;
  /// Largest combined one-sigma error of the log conditionals compared.
  double dcal_omega_sigma = 0.0;
  double hd_omega = 0.0;
  double hd_err = 0.0;
  double pd_omega = 0.0;
  double pd_err = 0.0;
  /// |hd_omega - base hd| with errors summed in quadrature.
  double hd_delta = 0.0;
  double hd_delta_err = 0.0;
};

struct ContinuityTable {
  double base_hd = 0.0;
  double base_hd_err = 0.0;
  double base_pd = 0.0;
  double base_pd_err = 0.0;
  std::vector<ContinuityRow> rows;
  double alpha = 0.0;
  /// Least-squares slope of log dcal_diam against log d_hat (rows with both > 0).
  double loglog_slope = 0.0;
  int loglog_points = 0;
  /// dcal_diam / d_hat^alpha at the largest-epsilon row.
  double C_hat = 0.0;
  /// Every row satisfies dcal_diam <= C_hat d_hat^alpha.
  bool bound_consistent = true;
};

ContinuityTable continuity_experiment(const SystemSpec& base, const std::vector<double>& epsilons,
                                      const ContinuityConfig& cfg);

/// max over |X| <= horizon and letters a of sqrt of the summed delta-method
/// variances of log omega_X(a) in both tables; infinite when a count is zero.
double dcal_sigma(const MeasureEstimate& a, const MeasureEstimate& b, int horizon);

void write_continuity_csv(const ContinuityTable& table, const std::filesystem::path& path);
nlohmann::json continuity_json(const ContinuityTable& table, const ContinuityConfig& cfg,
                               const std::vector<double>& epsilons);

}  // namespace nacifs
