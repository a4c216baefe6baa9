#pragma once

// Entropy, Lyapunov exponent and pressure of a measure on the cylinders of a
// system, with the finite-depth dimension proxies t_n = H_n / chi_n.

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "nacifs/symbolic.hpp"

namespace nacifs {

struct PressureRecord {
  int n = 0;
  double H = 0.0;    // -(1/n) sum mu log mu
  double chi = 0.0;  // -(1/n) sum mu log diam
  double t = 0.0;
  /// Delta-method standard errors; zero for exact measures.
  double H_stderr = 0.0;
  double chi_stderr = 0.0;
  double t_stderr = 0.0;
  /// Fraction of length-n cylinders with no hits (estimated measures only).
  double coverage_deficit = 0.0;
  bool estimated = false;

  /// P_n(t) = H - t chi.
  double pressure(double t_value) const { return H - t_value * chi; }
};

/// Throws Error(NonMeasure) when sum_{|X|=n} mu(X) differs from 1 by more than 1e-9.
PressureRecord pressure_record(const Functional& mu, const Functional& diam, int n);

struct DimensionReport {
  std::vector<PressureRecord> records;
  int window = 1;
  /// Min / max of t_n over the trailing window.
  double hd_estimate = 0.0;
  double pd_estimate = 0.0;
  double hd_stderr = 0.0;
  double pd_stderr = 0.0;
  /// Least-squares fit t_n = intercept + slope / n over all records.
  double trend_slope = 0.0;
  double trend_intercept = 0.0;
};

DimensionReport dimension_report(const Functional& mu, const Functional& diam, int n_min,
                                 int n_max, int window);

struct PointwiseSample {
  double h = 0.0;
  double chi = 0.0;
  double ratio = 0.0;
};

/// h = -(1/n) log mu(X_n), chi = -(1/n) log diam(X_n) for the length-n prefix
/// of each word.
std::vector<PointwiseSample> pointwise_samples(const Functional& mu, const Functional& diam,
                                               const std::vector<Word>& words, int n);

/// Words recorded as walker endpoints, one per walker.
std::vector<Word> endpoint_words(const MeasureEstimate& est);

void write_dimension_csv(const DimensionReport& report, const std::filesystem::path& path);
nlohmann::json dimension_summary_json(const DimensionReport& report);

}  // namespace nacifs
