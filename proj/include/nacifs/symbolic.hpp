#pragma once

// Positive functionals on cylinder trees and the quantities built from them:
// relative values nu_X(Y) = nu(XY) / nu(X), brackets <nu, nu'>_n, mass, the
// D distance, Jensen's inequality, sibling-invariance discrepancies and the
// alpha_n uniformity diagnostic.
//
// All suprema over infinitely many cylinders are truncated to a stated depth
// or sample budget; results carry those parameters.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nacifs/conformal.hpp"
#include "nacifs/measure_estimate.hpp"

namespace nacifs {

/// A strictly positive function on the cylinders T^p C of a tree. Words passed
/// in must start at generation offset() and have length <= depth().
class Functional {
 public:
  virtual ~Functional() = default;

  virtual double log_value(const Word& word) const = 0;

  /// log nu_X(Y); Y must start where X ends. Overridden where the ratio has a
  /// direct form so identical conditionals compare bit-for-bit.
  virtual double log_relative(const Word& x, const Word& y) const {
    return log_value(concat(x, y)) - log_value(x);
  }

  virtual bool is_measure() const { return false; }

  double value(const Word& word) const;
  int offset() const { return offset_; }
  int depth() const { return depth_; }
  const Alphabet& alphabet() const { return alphabet_; }

  /// Throws Error(OutOfRange) unless the word lies in this functional's range.
  void check_range(const Word& word) const;

 protected:
  Functional(Alphabet alphabet, int offset, int depth);

 private:
  Alphabet alphabet_;
  int offset_;
  int depth_;
};

using FunctionalPtr = std::shared_ptr<const Functional>;

/// Explicit log-values for every word up to a fixed depth.
class DenseTable final : public Functional {
 public:
  /// levels[l] holds log nu of the words of length l in index order.
  DenseTable(Alphabet alphabet, int offset, std::vector<std::vector<double>> levels,
             bool measure = false);

  /// Builds shallower levels by summing children (nu(X) = sum_a nu(Xa)).
  static DenseTable from_leaves(const Alphabet& alphabet, int offset, int depth,
                                const std::vector<double>& leaf_values, bool measure);
  static DenseTable tabulate(const Functional& f, int depth);

  double log_value(const Word& word) const override;
  bool is_measure() const override { return measure_; }
  const std::vector<std::vector<double>>& levels() const { return levels_; }

 private:
  std::vector<std::vector<double>> levels_;
  bool measure_;
};

/// nu(X) = 1 / (d_p ... d_{p+n-1}).
class UniformMeasure final : public Functional {
 public:
  explicit UniformMeasure(Alphabet alphabet, int offset = 0);
  double log_value(const Word& word) const override;
  double log_relative(const Word& x, const Word& y) const override;
  bool is_measure() const override { return true; }
};

/// Product measure with one probability vector per generation; the list is
/// cycled when shorter than the alphabet.
class BernoulliMeasure final : public Functional {
 public:
  BernoulliMeasure(Alphabet alphabet, std::vector<std::vector<double>> probabilities,
                   int offset = 0);
  double log_value(const Word& word) const override;
  double log_relative(const Word& x, const Word& y) const override;
  bool is_measure() const override { return true; }

 private:
  double log_prob(int generation, int letter) const;
  std::vector<std::vector<double>> log_probs_;
};

/// s(X) = |psi_X'(0)|.
class DerivProxyDiameter final : public Functional {
 public:
  explicit DerivProxyDiameter(SystemSpec system, int offset = 0);
  double log_value(const Word& word) const override;
  double log_relative(const Word& x, const Word& y) const override;

 private:
  SystemSpec system_;
};

/// Diameter of psi_X applied to the depth-m cylinder centres below X.
class SampleImageDiameter final : public Functional {
 public:
  SampleImageDiameter(SystemSpec system, int sample_depth = 4, int offset = 0);
  double log_value(const Word& word) const override;

 private:
  SystemSpec system_;
  int sample_depth_;
};

/// Plug-in measure from a Monte Carlo table; zero-hit cylinders give -inf.
class EstimatedMeasure final : public Functional {
 public:
  explicit EstimatedMeasure(MeasureEstimate estimate);
  double log_value(const Word& word) const override;
  bool is_measure() const override { return true; }
  const MeasureEstimate& estimate() const { return estimate_; }

 private:
  MeasureEstimate estimate_;
};

/// 1 / nu.
class Reciprocal final : public Functional {
 public:
  explicit Reciprocal(FunctionalPtr inner);
  double log_value(const Word& word) const override { return -inner_->log_value(word); }
  double log_relative(const Word& x, const Word& y) const override {
    return -inner_->log_relative(x, y);
  }

 private:
  FunctionalPtr inner_;
};

// ---------------------------------------------------------------------------

/// nu_X(Y) = nu(XY) / nu(X).
double relative(const Functional& nu, const Word& x, const Word& y);

/// sum over |Y| = n of nu_base(Y) g(Y), Y starting where base ends. With an
/// empty base the raw values nu(Y) are used (nu identified with nu_empty).
double bracket_with(const Functional& nu, int n, const Word& base,
                    const std::function<double(const Word&)>& g);

/// <nu_base, nu'_base>_n.
double bracket(const Functional& nu, const Functional& nu_p, int n, const Word& base = {});

/// <nu_base, log s_base>_n.
double log_bracket(const Functional& nu, const Functional& s, int n, const Word& base = {});

/// m_n(nu_base) = <nu_base, 1>_n.
double mass(const Functional& nu, int n, const Word& base = {});

struct JensenResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  bool equality = false;
};

/// lhs = <nu, log(nu'/nu)>_n, rhs = m_n(nu) log(m_n(nu') / m_n(nu)).
JensenResult jensen_check(const Functional& nu, const Functional& nu_p, int n);

struct DcalResult {
  double value = 0.0;
  int horizon = 0;  // words X with |X| <= horizon were inspected
};

/// Truncated D distance: max over |X| <= horizon and letters a of
/// |log(nu_X(a) / nu'_X(a))|. Lower-bounds the untruncated distance.
DcalResult dcal_distance(const Functional& nu, const Functional& nu_p, int horizon);

/// Largest |log(nu_{XY}(Z) / nu_{X'Y}(Z))| over `sample_budget` random
/// quadruples with |Y| = k and 1 <= |Z| <= tail. Deterministic in rng_seed.
double asi_discrepancy(const Functional& nu, int k, int tail, int sample_budget,
                       std::uint64_t rng_seed);

struct AlphaResult {
  double alpha = 0.0;
  int n = 0;
  int k_max = 0;
  /// g_n(X) = <nu_X, log s_X>_n for every X with |X| = k, k = 0..k_max.
  std::vector<std::vector<double>> g;
};

/// alpha_n(nu, s) = max over k <= k_max of (max_{|X|=k} g_n(X) - min_{|X|=k} g_n(X)).
AlphaResult alpha_diagnostic(const Functional& nu, const Functional& s, int n, int k_max);

/// Words of length n drawn letter by letter from the conditionals of a measure.
std::vector<Word> sample_words(const Functional& mu, int n, int count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sibling-invariance reports

struct AsiRow {
  int k = 0;
  double beta_hat = 0.0;
  std::int64_t samples = 0;
  double noise_floor = 0.0;
  bool noise_limited = false;
};

/// beta_k ~ C q^k fitted by least squares on log beta_k.
struct AsiFit {
  double C = 0.0;
  double q = 0.0;
  double residual = 0.0;
  int points = 0;
  bool degenerate = true;
};

struct AsiReport {
  std::string functional;
  int prefix_length = 0;
  int tail = 0;
  std::vector<AsiRow> rows;
  AsiFit fit;
};

/// Fits on rows with beta_hat > 0 that are not noise-limited; falls back to
/// all positive rows when fewer than two remain.
AsiFit fit_geometric_decay(const std::vector<AsiRow>& rows);

/// Diameter-type or exact functional: beta_hat_k by asi_discrepancy.
AsiReport asi_report(const Functional& nu, const std::vector<int>& k_range, int tail,
                     int sample_budget, std::uint64_t seed, const std::string& name);

void write_asi_csv(const AsiReport& report, const std::filesystem::path& path);
nlohmann::json asi_summary_json(const AsiReport& report);

// ---------------------------------------------------------------------------

/// Growth sequence gamma_n paired with a decay sequence beta_n through
/// p_n = floor(sqrt(n)) and c(gamma_n, beta_n) = max(gamma_{p_n}, gamma_n beta_{p_n}).
class CompatibilityWitness {
 public:
  static CompatibilityWitness linear(double slope);
  static CompatibilityWitness custom(std::vector<double> gamma);

  static int p(int n);
  double gamma(int n) const;
  double c(int n, const std::function<double(int)>& beta) const;

  /// c(gamma_n, beta_n) / n for n = 1..n_max.
  std::vector<double> ratios(int n_max, const std::function<double(int)>& beta) const;
  /// Empirical check that c/n tends to 0: the ratio at n_max is below the one
  /// at n_max / 4 and below `tolerance`.
  bool converging(int n_max, const std::function<double(int)>& beta,
                  double tolerance = 0.5) const;

 private:
  double slope_ = 1.0;
  std::vector<double> table_;
};

void write_dense_table_csv(const DenseTable& table, const std::filesystem::path& path);
DenseTable read_dense_table_csv(const std::filesystem::path& path, bool measure = false);

}  // namespace nacifs
