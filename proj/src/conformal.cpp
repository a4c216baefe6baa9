#include "nacifs/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nacifs/errors.hpp"
#include "nacifs/rng.hpp"

namespace nacifs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::InvalidWord: return "InvalidWord";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::InsufficientDepth: return "InsufficientDepth";
    case ErrorKind::IncompatibleSystems: return "IncompatibleSystems";
    case ErrorKind::InvalidSystem: return "InvalidSystem";
    case ErrorKind::WalkerStalled: return "WalkerStalled";
    case ErrorKind::DegenerateFactor: return "DegenerateFactor";
    case ErrorKind::NonMeasure: return "NonMeasure";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::PerturbationInfeasible: return "PerturbationInfeasible";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

DomainSpec DomainSpec::make(double eta, std::optional<double> gamma) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw Error(ErrorKind::Config, "eta must lie in (0, 1)");
  }
  DomainSpec d;
  d.eta = eta;
  d.gamma = gamma.value_or(1.0 + eta / 2.0);
  if (!(d.gamma > 1.0 && d.gamma < 1.0 + eta)) {
    throw Error(ErrorKind::Config, "gamma must lie in (1, 1 + eta)");
  }
  return d;
}

ConformalMap ConformalMap::similarity(Complex a, Complex b) {
  return {MapKind::Similarity, a, b, Complex{}};
}

ConformalMap ConformalMap::quadratic(Complex a, Complex b, Complex c) {
  return {MapKind::Quadratic, a, b, c};
}

Complex evaluate(const ConformalMap& map, Complex z) { return map(z); }

// ---------------------------------------------------------------------------
// Alphabet and words

Alphabet::Alphabet(std::vector<int> degrees) : degrees_(std::move(degrees)) {
  for (int d : degrees_) {
    if (d < 1) throw Error(ErrorKind::Config, "alphabet degree must be positive");
  }
}

Alphabet Alphabet::uniform(int degree, int generations) {
  return Alphabet(std::vector<int>(static_cast<std::size_t>(generations), degree));
}

int Alphabet::degree(int generation) const {
  if (generation < 0 || generation >= generations()) {
    throw Error(ErrorKind::OutOfRange,
                "generation " + std::to_string(generation) + " outside alphabet");
  }
  return degrees_[static_cast<std::size_t>(generation)];
}

std::size_t Alphabet::count(int offset, int length) const {
  std::size_t n = 1;
  for (int g = offset; g < offset + length; ++g) n *= static_cast<std::size_t>(degree(g));
  return n;
}

Word Word::prefix(int n) const {
  return Word(offset, std::vector<int>(branches.begin(), branches.begin() + n));
}

Word Word::suffix_from(int start) const {
  return Word(offset + start, std::vector<int>(branches.begin() + start, branches.end()));
}

std::string Word::label() const {
  std::string out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(branches[i]);
  }
  return out;
}

Word Word::parse(int offset, const std::string& label) {
  Word w;
  w.offset = offset;
  if (label.empty()) return w;
  std::stringstream ss(label);
  std::string item;
  while (std::getline(ss, item, '-')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      w.branches.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "malformed word label '" + label + "'");
    }
  }
  return w;
}

Word concat(const Word& x, const Word& y) {
  if (y.offset != x.end()) {
    throw Error(ErrorKind::InvalidWord, "concatenated word starts at the wrong generation");
  }
  Word out = x;
  out.branches.insert(out.branches.end(), y.branches.begin(), y.branches.end());
  return out;
}

std::size_t word_index(const Alphabet& alphabet, const Word& word) {
  std::size_t idx = 0;
  for (int i = 0; i < word.length(); ++i) {
    const int d = alphabet.degree(word.offset + i);
    const int letter = word.branches[static_cast<std::size_t>(i)];
    if (letter < 0 || letter >= d) {
      throw Error(ErrorKind::InvalidWord, "letter out of range in word " + word.label());
    }
    idx = idx * static_cast<std::size_t>(d) + static_cast<std::size_t>(letter);
  }
  return idx;
}

Word word_at(const Alphabet& alphabet, int offset, int length, std::size_t index) {
  Word w(offset, std::vector<int>(static_cast<std::size_t>(length), 0));
  for (int pos = length - 1; pos >= 0; --pos) {
    const auto d = static_cast<std::size_t>(alphabet.degree(offset + pos));
    w.branches[static_cast<std::size_t>(pos)] = static_cast<int>(index % d);
    index /= d;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_generation(const GenerationSpec& gen, const DomainSpec& domain,
                                     int degree_cap) {
  ValidationReport rep;
  const double eta = domain.eta;
  const double rv = domain.v_factor();
  const int d = gen.degree();

  rep.degree_ok = d >= 2 && d <= degree_cap;
  if (!rep.degree_ok) {
    rep.messages.push_back("degree " + std::to_string(d) + " outside [2, " +
                           std::to_string(degree_cap) + "]");
  }

  rep.bc = true;
  rep.bc_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    const ConformalMap& m = gen.maps[static_cast<std::size_t>(i)];
    const auto [lo, hi] = m.derivative_range(rv);
    const double margin = std::min(lo - eta, (1.0 - eta) - hi);
    rep.bc_margin = std::min(rep.bc_margin, margin);
    if (!(margin > 0.0)) {
      rep.bc = false;
      rep.messages.push_back("branch " + std::to_string(i) + " violates bounded contraction");
    }
    if (m.kind == MapKind::Quadratic && !(2.0 * std::abs(m.c) * rv < std::abs(m.a))) {
      rep.bc = false;
      rep.messages.push_back("branch " + std::to_string(i) + " is not injective on V");
    }
  }

  rep.osc = d >= 2;
  rep.osc_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const ConformalMap& mi = gen.maps[static_cast<std::size_t>(i)];
      const ConformalMap& mj = gen.maps[static_cast<std::size_t>(j)];
      const double gap =
          std::abs(mi.b - mj.b) - mi.enclosure_radius(rv) - mj.enclosure_radius(rv);
      rep.osc_margin = std::min(rep.osc_margin, gap);
      if (!(gap > 0.0)) {
        rep.osc = false;
        rep.messages.push_back("branches " + std::to_string(i) + " and " +
                               std::to_string(j) + " overlap");
      }
    }
  }
  if (d < 2) rep.osc_margin = 0.0;

  rep.ac = true;
  double outer = 0.0;
  for (int i = 0; i < d; ++i) {
    const ConformalMap& m = gen.maps[static_cast<std::size_t>(i)];
    const double reach = std::abs(m.b) + m.enclosure_radius(rv);
    outer = std::max(outer, reach);
    if (reach > 1.0 - eta) {
      rep.ac = false;
      rep.messages.push_back("branch " + std::to_string(i) + " leaves (1 - eta) U");
    }
  }
  rep.ac_margin = (1.0 - eta) - outer;
  return rep;
}

// ---------------------------------------------------------------------------
// Systems

SystemSpec::SystemSpec(DomainSpec domain, SystemMode mode,
                       std::vector<GenerationSpec> prefix,
                       std::vector<GenerationSpec> period, int horizon, int degree_cap,
                       std::uint64_t seed, SeedParams seed_params, bool validate)
    : domain_(domain),
      mode_(mode),
      prefix_(std::move(prefix)),
      period_(std::move(period)),
      horizon_(horizon),
      degree_cap_(degree_cap),
      seed_(seed),
      seed_params_(seed_params),
      cache_(std::make_shared<SeededCache>()) {
  if (horizon_ < 0) throw Error(ErrorKind::Config, "horizon must be non-negative");
  if (degree_cap_ < 2) throw Error(ErrorKind::Config, "degree_cap must be at least 2");
  switch (mode_) {
    case SystemMode::Explicit:
      if (static_cast<std::size_t>(horizon_) > prefix_.size() && period_.empty()) {
        throw Error(ErrorKind::Config, "explicit system lists fewer generations than horizon");
      }
      break;
    case SystemMode::Periodic:
      if (period_.empty()) throw Error(ErrorKind::Config, "periodic system needs a period");
      break;
    case SystemMode::Seeded:
      if (seed_params_.degree_min < 2 || seed_params_.degree_max < seed_params_.degree_min ||
          seed_params_.degree_max > degree_cap_) {
        throw Error(ErrorKind::Config, "seeded degree range invalid");
      }
      break;
  }
  if (validate) {
    auto check = [&](const GenerationSpec& g, const std::string& where) {
      const ValidationReport rep = validate_generation(g, domain_, degree_cap_);
      if (!rep.passed()) {
        std::string msg = where + " failed validation";
        for (const auto& m : rep.messages) msg += "; " + m;
        throw Error(ErrorKind::InvalidSystem, msg);
      }
    };
    for (std::size_t i = 0; i < prefix_.size(); ++i) check(prefix_[i], "prefix generation " + std::to_string(i));
    for (std::size_t i = 0; i < period_.size(); ++i) check(period_[i], "period generation " + std::to_string(i));
  }
}

SystemSpec SystemSpec::autonomous(DomainSpec domain, GenerationSpec gen, int horizon) {
  return SystemSpec(domain, SystemMode::Periodic, {}, {std::move(gen)}, horizon);
}

SystemSpec SystemSpec::explicit_system(DomainSpec domain, std::vector<GenerationSpec> gens) {
  const int h = static_cast<int>(gens.size());
  return SystemSpec(domain, SystemMode::Explicit, std::move(gens), {}, h);
}

const GenerationSpec& SystemSpec::generation(int n) const {
  if (n < 0 || n >= horizon_) {
    throw Error(ErrorKind::OutOfRange,
                "generation " + std::to_string(n) + " beyond horizon " + std::to_string(horizon_));
  }
  const auto un = static_cast<std::size_t>(n);
  if (un < prefix_.size()) return prefix_[un];
  if (mode_ != SystemMode::Seeded) {
    return period_[(un - prefix_.size()) % period_.size()];
  }
  std::lock_guard lock(cache_->mutex);
  auto it = cache_->generations.find(n);
  if (it == cache_->generations.end()) {
    it = cache_->generations.emplace(n, draw_seeded(n)).first;
  }
  return it->second;
}

GenerationSpec SystemSpec::draw_seeded(int n) const {
  const SeedParams& p = seed_params_;
  const std::uint64_t key = derive_seed(seed_, "generation", static_cast<std::uint64_t>(n));
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    RandomStream rng(key, static_cast<std::uint64_t>(attempt));
    const int d = p.degree_min +
                  static_cast<int>(rng.below(static_cast<std::uint64_t>(p.degree_max - p.degree_min + 1)));
    GenerationSpec gen;
    for (int i = 0; i < d; ++i) {
      const double mod = p.a_min + (p.a_max - p.a_min) * rng.uniform();
      const double arg = p.a_arg * (2.0 * rng.uniform() - 1.0);
      const double slot = (i + p.center_jitter * (2.0 * rng.uniform() - 1.0)) / d;
      const Complex a = std::polar(mod, arg);
      const Complex b = std::polar(p.center_radius, 2.0 * std::numbers::pi * slot);
      if (p.c_max > 0.0) {
        const Complex c = std::polar(p.c_max * rng.uniform(), rng.angle());
        gen.maps.push_back(ConformalMap::quadratic(a, b, c));
      } else {
        gen.maps.push_back(ConformalMap::similarity(a, b));
      }
    }
    if (validate_generation(gen, domain_, degree_cap_).passed()) return gen;
  }
  throw Error(ErrorKind::InvalidSystem,
              "seeded generation " + std::to_string(n) + " found no valid draw");
}

Alphabet SystemSpec::alphabet(std::optional<int> generations) const {
  const int n = std::min(generations.value_or(horizon_), horizon_);
  std::vector<int> d(static_cast<std::size_t>(n));
  for (int g = 0; g < n; ++g) d[static_cast<std::size_t>(g)] = degree(g);
  return Alphabet(std::move(d));
}

void SystemSpec::check_word(const Word& word) const {
  if (word.offset < 0 || word.end() > horizon_) {
    throw Error(ErrorKind::OutOfRange, "word " + word.label() + " at offset " +
                                           std::to_string(word.offset) + " exceeds horizon");
  }
  for (int i = 0; i < word.length(); ++i) {
    const int letter = word.branches[static_cast<std::size_t>(i)];
    if (letter < 0 || letter >= degree(word.offset + i)) {
      throw Error(ErrorKind::InvalidWord, "letter " + std::to_string(letter) +
                                              " invalid at generation " +
                                              std::to_string(word.offset + i));
    }
  }
}

// ---------------------------------------------------------------------------
// Compositions

ComposedMapInfo compose_word(const SystemSpec& system, const Word& word) {
  system.check_word(word);
  Complex z{};
  Complex deriv{1.0, 0.0};
  double radius = 1.0;
  for (int j = word.length() - 1; j >= 0; --j) {
    const ConformalMap& m =
        system.generation(word.offset + j).maps[static_cast<std::size_t>(word.branches[static_cast<std::size_t>(j)])];
    deriv *= m.derivative(z);
    radius *= m.derivative_sup(z, radius);
    z = m(z);
  }
  return {word, z, deriv, radius};
}

ChainValue evaluate_chain(const SystemSpec& system, const Word& word, Complex z) {
  system.check_word(word);
  double log_deriv = 0.0;
  for (int j = word.length() - 1; j >= 0; --j) {
    const ConformalMap& m =
        system.generation(word.offset + j).maps[static_cast<std::size_t>(word.branches[static_cast<std::size_t>(j)])];
    log_deriv += std::log(std::abs(m.derivative(z)));
    z = m(z);
  }
  return {z, log_deriv};
}

double cylinder_diameter(const SystemSpec& system, const Word& word, DiameterMethod method,
                         int sample_depth) {
  if (method == DiameterMethod::DerivProxy) {
    return std::exp(evaluate_chain(system, word, Complex{}).log_abs_deriv);
  }
  system.check_word(word);
  const int depth = std::min(sample_depth, system.horizon() - word.end());
  if (depth < 1) {
    throw Error(ErrorKind::InsufficientDepth, "no generations left below word " + word.label());
  }
  const Alphabet alpha = system.alphabet(word.end() + depth);
  std::vector<Complex> pts;
  pts.reserve(alpha.count(word.end(), depth));
  for_each_word(alpha, word.end(), depth, [&](const Word& w) {
    pts.push_back(evaluate_chain(system, concat(word, w), Complex{}).point);
  });
  double diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) diam = std::max(diam, std::abs(pts[i] - pts[j]));
  }
  return diam;
}

double distortion_ratio(const ConformalMap& map, double region_radius, int samples) {
  if (!(region_radius > 0.0 && region_radius < 1.0)) {
    throw Error(ErrorKind::DomainError, "region_radius must lie in (0, 1)");
  }
  if (map.kind == MapKind::Similarity || map.c == Complex{}) return 1.0;
  // |psi'| = |a + 2cz| is extremal on the boundary circle, at the points
  // aligned with a / c; include those next to the regular samples.
  std::vector<Complex> pts{Complex{}};
  const int n = std::max(samples, 8);
  for (int k = 0; k < n; ++k) pts.push_back(std::polar(region_radius, 2.0 * std::numbers::pi * k / n));
  const double axis = std::arg(map.a) - std::arg(map.c);
  pts.push_back(std::polar(region_radius, axis));
  pts.push_back(-std::polar(region_radius, axis));
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Complex z : pts) {
    const double v = std::abs(map.derivative(z));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi / lo;
}

CompatibilityReport check_compatibility(const SystemSpec& a, const SystemSpec& b, int horizon) {
  const int h = std::min({horizon, a.horizon(), b.horizon()});
  const double rv = a.domain().v_factor();
  for (int g = 0; g < h; ++g) {
    const GenerationSpec& ga = a.generation(g);
    const GenerationSpec& gb = b.generation(g);
    if (ga.degree() != gb.degree()) {
      return {false, "degrees differ at generation " + std::to_string(g)};
    }
    for (int i = 0; i < ga.degree(); ++i) {
      for (int j = 0; j < gb.degree(); ++j) {
        const ConformalMap& mi = ga.maps[static_cast<std::size_t>(i)];
        const ConformalMap& mj = gb.maps[static_cast<std::size_t>(j)];
        const bool meet =
            std::abs(mi.b - mj.b) <= mi.enclosure_radius(rv) + mj.enclosure_radius(rv);
        if (meet != (i == j)) {
          return {false, "branch images " + std::to_string(i) + "/" + std::to_string(j) +
                             " break compatibility at generation " + std::to_string(g)};
        }
      }
    }
  }
  return {};
}

double system_distance(const SystemSpec& a, const SystemSpec& b, int horizon) {
  const CompatibilityReport rep = check_compatibility(a, b, horizon);
  if (!rep.compatible) throw Error(ErrorKind::IncompatibleSystems, rep.reason);
  const int h = std::min({horizon, a.horizon(), b.horizon()});
  const double r = a.domain().gamma;
  constexpr int kCircle = 1024;
  double sup = 0.0;
  for (int g = 0; g < h; ++g) {
    const GenerationSpec& ga = a.generation(g);
    const GenerationSpec& gb = b.generation(g);
    for (int i = 0; i < ga.degree(); ++i) {
      const ConformalMap& m1 = ga.maps[static_cast<std::size_t>(i)];
      const ConformalMap& m2 = gb.maps[static_cast<std::size_t>(i)];
      const Complex da = m1.a - m2.a;
      const Complex db = m1.b - m2.b;
      const Complex dc = m1.c - m2.c;
      if (da == Complex{} && db == Complex{} && dc == Complex{}) continue;
      for (int k = 0; k < kCircle; ++k) {
        const Complex z = std::polar(r, 2.0 * std::numbers::pi * k / kCircle);
        sup = std::max(sup, std::abs(da * z + db + dc * z * z));
      }
    }
  }
  return sup;
}

}  // namespace nacifs
