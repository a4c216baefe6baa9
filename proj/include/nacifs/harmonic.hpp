#pragma once

// Monte Carlo harmonic measure of the complement of a limit set, seen from
// infinity, by walk-on-spheres against a depth-m disk approximation.

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"
#include "nacifs/conformal.hpp"
#include "nacifs/measure_estimate.hpp"
#include "nacifs/rng.hpp"
#include "nacifs/symbolic.hpp"

namespace nacifs {

struct WalkerConfig {
  double r_launch = 8.0;
  double r_out = 16.0;
  /// Absorption distance as a fraction of the nearest disk's radius.
  double eps_abs = 1e-3;
  std::int64_t max_steps = 100000;
  std::int64_t walkers = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool record_endpoints = false;

  /// Throws Error(Config) unless r_launch > 1 + eta, r_out > r_launch, eps_abs > 0.
  void validate(const DomainSpec& domain) const;
};

nlohmann::json to_json(const WalkerConfig& cfg);

/// Closed disks enclosing psi_W(closed unit disk) for every word W of length
/// <= depth of the system shifted to `offset`, arranged as a tree.
class DiskApproximation {
 public:
  DiskApproximation(const SystemSpec& system, int offset, int depth);

  int offset() const { return offset_; }
  int depth() const { return depth_; }
  const Alphabet& alphabet() const { return alphabet_; }
  std::size_t size(int level) const { return centers_[static_cast<std::size_t>(level)].size(); }
  Complex center(int level, std::size_t i) const { return centers_[static_cast<std::size_t>(level)][i]; }
  double radius(int level, std::size_t i) const { return radii_[static_cast<std::size_t>(level)][i]; }

  struct Nearest {
    std::size_t leaf = 0;
    double distance = 0.0;  // to the disk surface, negative inside
    double radius = 0.0;
  };
  /// Nearest leaf disk; ties go to the lower word index.
  Nearest nearest(Complex z) const;

  /// Smallest gap between two leaf disks (positive when pairwise disjoint).
  double min_leaf_gap() const;
  /// Smallest parent radius minus (|child centre - parent centre| + child radius).
  double min_nesting_margin() const;

 private:
  int offset_;
  int depth_;
  Alphabet alphabet_;  // generations 0 .. offset + depth - 1
  std::vector<std::vector<Complex>> centers_;
  std::vector<std::vector<double>> radii_;
};

/// Point on |w| = radius hit first by Brownian motion started at |z| > radius,
/// drawn by inverting the CDF of the exterior Poisson kernel (a wrapped Cauchy
/// law centred on arg z with concentration radius / |z|).
Complex reentry_point(Complex z, double radius, RandomStream& rng);

MeasureEstimate estimate_direct(const SystemSpec& system, int offset, int approx_depth,
                                int assign_depth, const WalkerConfig& cfg);

struct FactorizedConfig {
  int buffer = 3;
  /// Factors use approximation depth buffer + 1 + approx_extra.
  int approx_extra = 4;
  std::int64_t min_denominator = 100;
  /// When present, adds n C q^buffer to the error model.
  std::optional<AsiFit> bias_fit;
};

struct FactorizedValue {
  double value = 0.0;
  /// Log-space error bar: log_stderr + bias.
  double error_model = 0.0;
  double log_stderr = 0.0;
  double bias = 0.0;
};

/// Deep-cylinder harmonic measure as a product of shallow conditional
/// measures of shifted systems. Factor tables are cached per offset so many
/// words can share them.
class FactorizedEstimator {
 public:
  FactorizedEstimator(SystemSpec system, WalkerConfig cfg, FactorizedConfig fc = {});

  FactorizedValue estimate(const Word& word);
  const MeasureEstimate& factor_table(int offset);
  const FactorizedConfig& config() const { return fc_; }

 private:
  SystemSpec system_;
  WalkerConfig cfg_;
  FactorizedConfig fc_;
  std::map<int, MeasureEstimate> tables_;
};

FactorizedValue estimate_factorized(const SystemSpec& system, const Word& word, int buffer,
                                    const WalkerConfig& per_factor_cfg,
                                    std::optional<AsiFit> bias_fit = std::nullopt);

struct HarmonicAsiOptions {
  int prefix_length = 1;
  int tail = 1;
  int approx_extra = 4;
  /// Multiple of the propagated log-ratio standard error defining the floor.
  double floor_sigmas = 3.0;
};

/// Sibling discrepancies of the estimated harmonic measure, enumerating every
/// quadruple (X, X', Y, Z) with |X| = prefix_length, |Y| = k, 1 <= |Z| <= tail.
AsiReport asi_report_harmonic(const SystemSpec& system, const std::vector<int>& k_range,
                              const WalkerConfig& cfg, const HarmonicAsiOptions& opts = {});

/// Sibling discrepancies computed from an existing table.
AsiReport asi_report_from_estimate(const MeasureEstimate& est, const std::vector<int>& k_range,
                                   const HarmonicAsiOptions& opts = {});

/// Standard error of the plug-in conditional entropy <nu_X, log(1/nu_X)>_n.
double conditional_entropy_stderr(const MeasureEstimate& est, const Word& x, int n);

struct PointEstimate {
  Complex x;
  double distance = 0.0;  // to the approximation
  double omega = 0.0;
  double std_error = 0.0;
};

/// omega(x, X, D_gamma \ X): probability that a walker started at x reaches the
/// disk approximation before the circle |z| = gamma.
PointEstimate local_harmonic_measure(const SystemSpec& system, const DiskApproximation& approx,
                                     Complex x, const WalkerConfig& cfg, std::uint64_t stream);

struct LowerBoundOptions {
  int approx_depth = 6;
  int circle_points = 16;
  /// Distances from the outermost leaf disk, as fractions of its radius.
  std::vector<double> approach = {0.5, 0.25, 0.1, 0.05, 0.025};
};

struct LowerBoundReport {
  std::vector<PointEstimate> circle;  // |x| = 1
  double min_circle = 0.0;
  double min_circle_stderr = 0.0;
  std::vector<PointEstimate> approach;
  /// Fit log(1 - omega) = intercept + slope log dist.
  double slope = 0.0;
  double intercept = 0.0;
  int fit_points = 0;
};

LowerBoundReport lower_bound_checks(const SystemSpec& system, const WalkerConfig& cfg,
                                    const LowerBoundOptions& opts = {});

}  // namespace nacifs
