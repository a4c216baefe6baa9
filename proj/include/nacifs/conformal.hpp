#pragma once

// Non-autonomous conformal iterated function systems on the unit disk.
//
// A system is a sequence of generations; generation g holds d_g >= 2 forward
// contractions psi(z) = a z + b + c z^2 of the neighbourhood V = (1 + eta) D.
// Inverse branches are never formed: cylinders, diameters and measures are all
// expressed through compositions psi_X = psi_{a_1} o ... o psi_{a_n}.

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nacifs {

using Complex = std::complex<double>;

struct DomainSpec {
  double eta = 0.1;
  double gamma = 1.05;

  static constexpr double unit_radius = 1.0;

  double v_factor() const { return 1.0 + eta; }

  /// Checks 0 < eta < 1 and 1 < gamma < 1 + eta; gamma defaults to 1 + eta/2.
  static DomainSpec make(double eta, std::optional<double> gamma = std::nullopt);
};

enum class MapKind { Similarity, Quadratic };

struct ConformalMap {
  MapKind kind = MapKind::Similarity;
  Complex a{0.5, 0.0};
  Complex b{};
  Complex c{};

  static ConformalMap similarity(Complex a, Complex b);
  static ConformalMap quadratic(Complex a, Complex b, Complex c);

  Complex operator()(Complex z) const { return a * z + b + c * z * z; }
  Complex derivative(Complex z) const { return a + 2.0 * c * z; }

  /// Upper bound of |psi'| on the closed disk D(center, radius).
  double derivative_sup(Complex center, double radius) const {
    return std::abs(a) + 2.0 * std::abs(c) * (std::abs(center) + radius);
  }

  /// Interval [lo, hi] containing |psi'| on the disk of radius r about 0.
  std::pair<double, double> derivative_range(double r) const {
    const double spread = 2.0 * std::abs(c) * r;
    return {std::abs(a) - spread, std::abs(a) + spread};
  }

  /// Radius of the disk about b enclosing psi(D(0, r)).
  double enclosure_radius(double r) const {
    return r * (std::abs(a) + 2.0 * std::abs(c) * r);
  }

  friend bool operator==(const ConformalMap&, const ConformalMap&) = default;
};

Complex evaluate(const ConformalMap& map, Complex z);

struct GenerationSpec {
  std::vector<ConformalMap> maps;

  int degree() const { return static_cast<int>(maps.size()); }
  friend bool operator==(const GenerationSpec&, const GenerationSpec&) = default;
};

/// Per-generation alphabet sizes d_0, d_1, ... of a cylinder tree.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<int> degrees);

  /// Constant degree d for `generations` generations.
  static Alphabet uniform(int degree, int generations);

  int degree(int generation) const;
  int generations() const { return static_cast<int>(degrees_.size()); }
  const std::vector<int>& degrees() const { return degrees_; }

  /// Number of words of the given length starting at generation `offset`.
  std::size_t count(int offset, int length) const;

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<int> degrees_;
};

/// A cylinder address: letters a_{p+1} ... a_{p+n} read at generations
/// p, p+1, ..., p+n-1 (zero based). The empty word is allowed.
struct Word {
  int offset = 0;
  std::vector<int> branches;

  Word() = default;
  Word(int offset, std::vector<int> branches)
      : offset(offset), branches(std::move(branches)) {}

  int length() const { return static_cast<int>(branches.size()); }
  bool empty() const { return branches.empty(); }
  /// Generation of the first letter after this word.
  int end() const { return offset + length(); }

  Word prefix(int n) const;
  /// The letters after position `start`, as a word at offset + start.
  Word suffix_from(int start) const;
  /// Dash-joined letters, e.g. "0-1-1"; empty word gives "".
  std::string label() const;
  static Word parse(int offset, const std::string& label);

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word&, const Word&) = default;
};

/// Concatenation XY; requires Y.offset == X.end().
Word concat(const Word& x, const Word& y);

/// Mixed-radix index of a word among all words of its (offset, length),
/// first letter most significant.
std::size_t word_index(const Alphabet& alphabet, const Word& word);
Word word_at(const Alphabet& alphabet, int offset, int length, std::size_t index);

/// Calls f(word) for every word of the given offset and length in index order.
template <class F>
void for_each_word(const Alphabet& alphabet, int offset, int length, F&& f) {
  const std::size_t total = alphabet.count(offset, length);
  Word w(offset, std::vector<int>(static_cast<std::size_t>(length), 0));
  for (std::size_t i = 0; i < total; ++i) {
    f(static_cast<const Word&>(w));
    for (int pos = length - 1; pos >= 0; --pos) {
      if (++w.branches[pos] < alphabet.degree(offset + pos)) break;
      w.branches[pos] = 0;
    }
  }
}

struct ValidationReport {
  int generation = -1;
  bool degree_ok = false;
  bool bc = false;
  bool osc = false;
  bool ac = false;
  double bc_margin = 0.0;   // min distance of derivative bounds to (eta, 1-eta)
  double osc_margin = 0.0;  // min gap between image enclosures
  double ac_margin = 0.0;   // (1-eta) minus max outer radius of enclosures
  std::vector<std::string> messages;

  bool passed() const { return degree_ok && bc && osc && ac; }
};

ValidationReport validate_generation(const GenerationSpec& gen, const DomainSpec& domain,
                                     int degree_cap = 16);

/// Parameter boxes for seeded systems. Branch i of a generation is centred
/// near radius * exp(2 pi i (i + jitter) / d) with |a| and |c| drawn from the
/// given ranges.
struct SeedParams {
  int degree_min = 2;
  int degree_max = 2;
  double a_min = 0.2;
  double a_max = 0.3;
  double a_arg = 0.5;
  double center_radius = 0.5;
  double center_jitter = 0.03;
  double c_max = 0.0;
  int max_attempts = 1000;

  friend bool operator==(const SeedParams&, const SeedParams&) = default;
};

enum class SystemMode { Explicit, Periodic, Seeded };

class SystemSpec {
 public:
  /// Throws Error(InvalidSystem) when a prefix/period generation fails
  /// validation and `validate` is set.
  SystemSpec(DomainSpec domain, SystemMode mode, std::vector<GenerationSpec> prefix,
             std::vector<GenerationSpec> period, int horizon, int degree_cap = 16,
             std::uint64_t seed = 0, SeedParams seed_params = {}, bool validate = true);

  /// Convenience: every generation equal to `gen`.
  static SystemSpec autonomous(DomainSpec domain, GenerationSpec gen, int horizon = 64);
  /// Fully listed generations; horizon = gens.size().
  static SystemSpec explicit_system(DomainSpec domain, std::vector<GenerationSpec> gens);

  const DomainSpec& domain() const { return domain_; }
  SystemMode mode() const { return mode_; }
  int horizon() const { return horizon_; }
  int degree_cap() const { return degree_cap_; }
  std::uint64_t seed() const { return seed_; }
  const SeedParams& seed_params() const { return seed_params_; }
  const std::vector<GenerationSpec>& prefix() const { return prefix_; }
  const std::vector<GenerationSpec>& period() const { return period_; }

  /// Generation n (zero based). Throws Error(OutOfRange) past the horizon.
  const GenerationSpec& generation(int n) const;
  int degree(int n) const { return generation(n).degree(); }

  /// Degrees for generations [0, generations) (defaults to the horizon).
  Alphabet alphabet(std::optional<int> generations = std::nullopt) const;

  /// Throws Error(InvalidWord) if a letter is out of range for its generation,
  /// Error(OutOfRange) if the word reaches past the horizon.
  void check_word(const Word& word) const;

 private:
  GenerationSpec draw_seeded(int n) const;

  DomainSpec domain_;
  SystemMode mode_;
  std::vector<GenerationSpec> prefix_;
  std::vector<GenerationSpec> period_;
  int horizon_;
  int degree_cap_;
  std::uint64_t seed_;
  SeedParams seed_params_;

  struct SeededCache {
    std::mutex mutex;
    std::map<int, GenerationSpec> generations;
  };
  std::shared_ptr<SeededCache> cache_;
};

struct ComposedMapInfo {
  Word word;
  Complex center;      // psi_X(0)
  Complex deriv0;      // psi_X'(0)
  double radius_bound; // psi_X(closed unit disk) lies in D(center, radius_bound)
};

ComposedMapInfo compose_word(const SystemSpec& system, const Word& word);

/// psi_X(z) and log|psi_X'(z)| evaluated along the composition chain.
struct ChainValue {
  Complex point;
  double log_abs_deriv;
};
ChainValue evaluate_chain(const SystemSpec& system, const Word& word, Complex z);

enum class DiameterMethod { DerivProxy, SampleImage };

/// DerivProxy gives |psi_X'(0)|; SampleImage gives the diameter of psi_X applied
/// to the centres of the depth-`sample_depth` cylinders of the shifted system.
double cylinder_diameter(const SystemSpec& system, const Word& word,
                         DiameterMethod method, int sample_depth = 4);

/// max |psi'(x)| / |psi'(y)| over sampled x, y in the disk of radius
/// `region_radius` about 0.
double distortion_ratio(const ConformalMap& map, double region_radius, int samples);

/// Certificate that two systems are compatible over generations [0, horizon):
/// equal degrees and enclosure(psi_i(V)) meets enclosure(psi~_j(V)) iff i == j.
struct CompatibilityReport {
  bool compatible = true;
  std::string reason;
};
CompatibilityReport check_compatibility(const SystemSpec& a, const SystemSpec& b,
                                        int horizon);

/// sup over generations < horizon and branches of sup_{|z| <= gamma} |psi - psi~|.
/// Throws Error(IncompatibleSystems).
double system_distance(const SystemSpec& a, const SystemSpec& b, int horizon);

}  // namespace nacifs
