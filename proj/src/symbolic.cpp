#include "nacifs/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "nacifs/errors.hpp"
#include "nacifs/rng.hpp"
#include "nacifs/summation.hpp"

namespace nacifs {

// ---------------------------------------------------------------------------
// Functional base

Functional::Functional(Alphabet alphabet, int offset, int depth)
    : alphabet_(std::move(alphabet)), offset_(offset), depth_(depth) {
  if (offset_ < 0 || depth_ < 0 || offset_ + depth_ > alphabet_.generations()) {
    throw Error(ErrorKind::Config, "functional range exceeds its alphabet");
  }
}

double Functional::value(const Word& word) const { return std::exp(log_value(word)); }

void Functional::check_range(const Word& word) const {
  if (word.offset != offset_ || word.length() > depth_) {
    throw Error(ErrorKind::OutOfRange, "word '" + word.label() + "' at offset " +
                                           std::to_string(word.offset) +
                                           " outside functional range (offset " +
                                           std::to_string(offset_) + ", depth " +
                                           std::to_string(depth_) + ")");
  }
  for (int i = 0; i < word.length(); ++i) {
    const int letter = word.branches[static_cast<std::size_t>(i)];
    if (letter < 0 || letter >= alphabet_.degree(word.offset + i)) {
      throw Error(ErrorKind::InvalidWord, "letter out of range in '" + word.label() + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// DenseTable

DenseTable::DenseTable(Alphabet alphabet, int offset, std::vector<std::vector<double>> levels,
                       bool measure)
    : Functional(alphabet, offset, static_cast<int>(levels.size()) - 1),
      levels_(std::move(levels)),
      measure_(measure) {
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    if (levels_[l].size() != this->alphabet().count(offset, static_cast<int>(l))) {
      throw Error(ErrorKind::Config, "dense table level " + std::to_string(l) + " has wrong size");
    }
  }
}

DenseTable DenseTable::from_leaves(const Alphabet& alphabet, int offset, int depth,
                                   const std::vector<double>& leaf_values, bool measure) {
  if (leaf_values.size() != alphabet.count(offset, depth)) {
    throw Error(ErrorKind::Config, "leaf table has wrong size");
  }
  std::vector<std::vector<double>> linear(static_cast<std::size_t>(depth) + 1);
  linear[static_cast<std::size_t>(depth)] = leaf_values;
  for (int l = depth - 1; l >= 0; --l) {
    const auto d = static_cast<std::size_t>(alphabet.degree(offset + l));
    const auto& below = linear[static_cast<std::size_t>(l) + 1];
    auto& here = linear[static_cast<std::size_t>(l)];
    here.assign(below.size() / d, 0.0);
    for (std::size_t i = 0; i < here.size(); ++i) {
      CompensatedSum s;
      for (std::size_t a = 0; a < d; ++a) s += below[i * d + a];
      here[i] = s.value();
    }
  }
  for (auto& level : linear) {
    for (double& v : level) v = std::log(v);
  }
  return DenseTable(alphabet, offset, std::move(linear), measure);
}

DenseTable DenseTable::tabulate(const Functional& f, int depth) {
  if (depth > f.depth()) throw Error(ErrorKind::OutOfRange, "tabulation deeper than functional");
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(depth) + 1);
  for (int l = 0; l <= depth; ++l) {
    auto& level = levels[static_cast<std::size_t>(l)];
    level.reserve(f.alphabet().count(f.offset(), l));
    for_each_word(f.alphabet(), f.offset(), l,
                  [&](const Word& w) { level.push_back(f.log_value(w)); });
  }
  return DenseTable(f.alphabet(), f.offset(), std::move(levels), f.is_measure());
}

double DenseTable::log_value(const Word& word) const {
  check_range(word);
  return levels_[static_cast<std::size_t>(word.length())][word_index(alphabet(), word)];
}

// ---------------------------------------------------------------------------
// Closed-form measures

UniformMeasure::UniformMeasure(Alphabet alphabet, int offset)
    : Functional(alphabet, offset, alphabet.generations() - offset) {}

double UniformMeasure::log_value(const Word& word) const {
  check_range(word);
  double s = 0.0;
  for (int i = 0; i < word.length(); ++i) s -= std::log(alphabet().degree(word.offset + i));
  return s;
}

double UniformMeasure::log_relative(const Word& x, const Word& y) const {
  check_range(concat(x, y));
  double s = 0.0;
  for (int i = 0; i < y.length(); ++i) s -= std::log(alphabet().degree(y.offset + i));
  return s;
}

BernoulliMeasure::BernoulliMeasure(Alphabet alphabet,
                                   std::vector<std::vector<double>> probabilities, int offset)
    : Functional(alphabet, offset, alphabet.generations() - offset) {
  if (probabilities.empty()) throw Error(ErrorKind::Config, "Bernoulli measure needs probabilities");
  for (const auto& p : probabilities) {
    double total = 0.0;
    for (double v : p) {
      if (!(v > 0.0)) throw Error(ErrorKind::Config, "Bernoulli probabilities must be positive");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorKind::Config, "Bernoulli probabilities must sum to 1");
    }
    std::vector<double> lp;
    for (double v : p) lp.push_back(std::log(v));
    log_probs_.push_back(std::move(lp));
  }
  for (int g = offset; g < this->alphabet().generations(); ++g) {
    const auto& lp = log_probs_[static_cast<std::size_t>(g) % log_probs_.size()];
    if (static_cast<int>(lp.size()) != this->alphabet().degree(g)) {
      throw Error(ErrorKind::Config, "Bernoulli vector length differs from degree at generation " +
                                         std::to_string(g));
    }
  }
}

double BernoulliMeasure::log_prob(int generation, int letter) const {
  return log_probs_[static_cast<std::size_t>(generation) % log_probs_.size()]
                   [static_cast<std::size_t>(letter)];
}

double BernoulliMeasure::log_value(const Word& word) const {
  check_range(word);
  double s = 0.0;
  for (int i = 0; i < word.length(); ++i) {
    s += log_prob(word.offset + i, word.branches[static_cast<std::size_t>(i)]);
  }
  return s;
}

double BernoulliMeasure::log_relative(const Word& x, const Word& y) const {
  check_range(concat(x, y));
  double s = 0.0;
  for (int i = 0; i < y.length(); ++i) {
    s += log_prob(y.offset + i, y.branches[static_cast<std::size_t>(i)]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Diameter functionals

DerivProxyDiameter::DerivProxyDiameter(SystemSpec system, int offset)
    : Functional(system.alphabet(), offset, system.horizon() - offset),
      system_(std::move(system)) {}

double DerivProxyDiameter::log_value(const Word& word) const {
  check_range(word);
  return evaluate_chain(system_, word, Complex{}).log_abs_deriv;
}

double DerivProxyDiameter::log_relative(const Word& x, const Word& y) const {
  check_range(concat(x, y));
  // |psi_{XY}'(0)| / |psi_X'(0)| = |psi_X'(psi_Y(0))| |psi_Y'(0)| / |psi_X'(0)|;
  // the X factor is accumulated term by term so letters with constant
  // derivative contribute exactly zero.
  const ChainValue inner = evaluate_chain(system_, y, Complex{});
  Complex zy = inner.point;
  Complex z0{};
  double s = inner.log_abs_deriv;
  for (int j = x.length() - 1; j >= 0; --j) {
    const ConformalMap& m = system_.generation(x.offset + j)
                                .maps[static_cast<std::size_t>(x.branches[static_cast<std::size_t>(j)])];
    if (m.kind == MapKind::Quadratic) {
      s += std::log(std::abs(m.derivative(zy))) - std::log(std::abs(m.derivative(z0)));
    }
    zy = m(zy);
    z0 = m(z0);
  }
  return s;
}

SampleImageDiameter::SampleImageDiameter(SystemSpec system, int sample_depth, int offset)
    : Functional(system.alphabet(), offset, system.horizon() - offset - 1),
      system_(std::move(system)),
      sample_depth_(sample_depth) {}

double SampleImageDiameter::log_value(const Word& word) const {
  check_range(word);
  return std::log(cylinder_diameter(system_, word, DiameterMethod::SampleImage, sample_depth_));
}

EstimatedMeasure::EstimatedMeasure(MeasureEstimate estimate)
    : Functional(estimate.alphabet, estimate.offset, estimate.assign_depth),
      estimate_(std::move(estimate)) {}

double EstimatedMeasure::log_value(const Word& word) const {
  check_range(word);
  return std::log(estimate_.value(word));
}

Reciprocal::Reciprocal(FunctionalPtr inner)
    : Functional(inner->alphabet(), inner->offset(), inner->depth()), inner_(std::move(inner)) {}

// ---------------------------------------------------------------------------
// Brackets and friends

double relative(const Functional& nu, const Word& x, const Word& y) {
  nu.check_range(concat(x, y));
  return std::exp(nu.log_relative(x, y));
}

namespace {

Word rooted(const Functional& nu, const Word& base) {
  return base.empty() ? Word(nu.offset(), {}) : base;
}

}  // namespace

double bracket_with(const Functional& nu, int n, const Word& base_in,
                    const std::function<double(const Word&)>& g) {
  const Word base = rooted(nu, base_in);
  nu.check_range(base);
  if (base.length() + n > nu.depth()) {
    throw Error(ErrorKind::OutOfRange, "bracket needs depth " + std::to_string(base.length() + n));
  }
  CompensatedSum sum;
  for_each_word(nu.alphabet(), base.end(), n, [&](const Word& y) {
    const double w = base.empty() ? nu.value(y) : std::exp(nu.log_relative(base, y));
    if (w == 0.0) return;  // 0 log 0 = 0
    sum += w * g(y);
  });
  return sum.value();
}

double bracket(const Functional& nu, const Functional& nu_p, int n, const Word& base_in) {
  const Word base = rooted(nu, base_in);
  return bracket_with(nu, n, base, [&](const Word& y) {
    return base.empty() ? nu_p.value(y) : std::exp(nu_p.log_relative(base, y));
  });
}

double log_bracket(const Functional& nu, const Functional& s, int n, const Word& base_in) {
  const Word base = rooted(nu, base_in);
  return bracket_with(nu, n, base, [&](const Word& y) {
    return base.empty() ? s.log_value(y) : s.log_relative(base, y);
  });
}

double mass(const Functional& nu, int n, const Word& base) {
  return bracket_with(nu, n, base, [](const Word&) { return 1.0; });
}

JensenResult jensen_check(const Functional& nu, const Functional& nu_p, int n) {
  const Word root(nu.offset(), {});
  JensenResult r;
  r.lhs = bracket_with(nu, n, root,
                       [&](const Word& y) { return nu_p.log_value(y) - nu.log_value(y); });
  const double m = mass(nu, n, root);
  const double mp = mass(nu_p, n, Word(nu_p.offset(), {}));
  r.rhs = m * std::log(mp / m);
  r.holds = r.lhs <= r.rhs + 1e-12;
  r.equality = std::abs(r.lhs - r.rhs) <= 1e-9 * std::max(1.0, std::abs(r.rhs));
  return r;
}

DcalResult dcal_distance(const Functional& nu, const Functional& nu_p, int horizon) {
  if (nu.offset() != nu_p.offset()) {
    throw Error(ErrorKind::OutOfRange, "functionals live on different shifted trees");
  }
  if (horizon + 1 > std::min(nu.depth(), nu_p.depth())) {
    throw Error(ErrorKind::OutOfRange, "D distance needs depth " + std::to_string(horizon + 1));
  }
  double sup = 0.0;
  for (int l = 0; l <= horizon; ++l) {
    for_each_word(nu.alphabet(), nu.offset(), l, [&](const Word& x) {
      const int d = nu.alphabet().degree(x.end());
      for (int a = 0; a < d; ++a) {
        const Word letter(x.end(), {a});
        const double u = nu.log_relative(x, letter);
        const double v = nu_p.log_relative(x, letter);
        if (!std::isfinite(u) && !std::isfinite(v) && u == v) continue;
        sup = std::max(sup, std::abs(u - v));
      }
    });
  }
  return {sup, horizon};
}

double asi_discrepancy(const Functional& nu, int k, int tail, int sample_budget,
                       std::uint64_t rng_seed) {
  if (k < 0 || tail < 1) throw Error(ErrorKind::DomainError, "need k >= 0 and tail >= 1");
  const int room = nu.depth() - k - tail;
  if (room < 1) {
    throw Error(ErrorKind::InsufficientDepth,
                "sibling discrepancy at k=" + std::to_string(k) + " needs depth " +
                    std::to_string(k + tail + 1));
  }
  const Alphabet& alpha = nu.alphabet();
  const int p = nu.offset();
  RandomStream rng(derive_seed(rng_seed, "asi", static_cast<std::uint64_t>(k)), 0);
  auto draw = [&](int offset, int length) {
    Word w(offset, std::vector<int>(static_cast<std::size_t>(length)));
    for (int i = 0; i < length; ++i) {
      w.branches[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(alpha.degree(offset + i))));
    }
    return w;
  };
  double worst = 0.0;
  for (int s = 0; s < sample_budget; ++s) {
    const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(room)));
    const Word x = draw(p, len);
    const Word xp = draw(p, len);
    const Word y = draw(p + len, k);
    const int zl = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(tail)));
    const Word z = draw(p + len + k, zl);
    const double d =
        std::abs(nu.log_relative(concat(x, y), z) - nu.log_relative(concat(xp, y), z));
    worst = std::max(worst, d);
  }
  return worst;
}

AlphaResult alpha_diagnostic(const Functional& nu, const Functional& s, int n, int k_max) {
  if (k_max + n > std::min(nu.depth(), s.depth())) {
    throw Error(ErrorKind::OutOfRange, "alpha diagnostic needs depth " + std::to_string(k_max + n));
  }
  AlphaResult out;
  out.n = n;
  out.k_max = k_max;
  for (int k = 0; k <= k_max; ++k) {
    std::vector<double> g;
    for_each_word(nu.alphabet(), nu.offset(), k,
                  [&](const Word& x) { g.push_back(log_bracket(nu, s, n, x)); });
    const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
    out.alpha = std::max(out.alpha, *hi - *lo);
    out.g.push_back(std::move(g));
  }
  return out;
}

std::vector<Word> sample_words(const Functional& mu, int n, int count, std::uint64_t seed) {
  if (n > mu.depth()) throw Error(ErrorKind::OutOfRange, "sampled words deeper than measure");
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::uint64_t key = derive_seed(seed, "sample_words");
  for (int i = 0; i < count; ++i) {
    RandomStream rng(key, static_cast<std::uint64_t>(i));
    Word w(mu.offset(), {});
    for (int j = 0; j < n; ++j) {
      const int d = mu.alphabet().degree(w.end());
      double u = rng.uniform();
      int pick = d - 1;
      for (int a = 0; a < d; ++a) {
        u -= std::exp(mu.log_relative(w, Word(w.end(), {a})));
        if (u < 0.0) {
          pick = a;
          break;
        }
      }
      w.branches.push_back(pick);
    }
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

AsiFit fit_geometric_decay(const std::vector<AsiRow>& rows) {
  std::vector<const AsiRow*> use;
  for (const auto& r : rows) {
    if (r.beta_hat > 0.0 && !r.noise_limited) use.push_back(&r);
  }
  if (use.size() < 2) {
    use.clear();
    for (const auto& r : rows) {
      if (r.beta_hat > 0.0) use.push_back(&r);
    }
  }
  AsiFit fit;
  fit.points = static_cast<int>(use.size());
  if (use.size() < 2) return fit;
  Eigen::MatrixXd design(use.size(), 2);
  Eigen::VectorXd rhs(use.size());
  for (std::size_t i = 0; i < use.size(); ++i) {
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    design(static_cast<Eigen::Index>(i), 1) = use[i]->k;
    rhs(static_cast<Eigen::Index>(i)) = std::log(use[i]->beta_hat);
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
  fit.C = std::exp(coef(0));
  fit.q = std::exp(coef(1));
  fit.residual = std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(use.size()));
  fit.degenerate = !(std::isfinite(fit.C) && fit.q > 0.0 && fit.q <= 1.0);
  return fit;
}

AsiReport asi_report(const Functional& nu, const std::vector<int>& k_range, int tail,
                     int sample_budget, std::uint64_t seed, const std::string& name) {
  AsiReport rep;
  rep.functional = name;
  rep.tail = tail;
  for (int k : k_range) {
    AsiRow row;
    row.k = k;
    row.beta_hat = asi_discrepancy(nu, k, tail, sample_budget, seed);
    row.samples = sample_budget;
    rep.rows.push_back(row);
  }
  rep.fit = fit_geometric_decay(rep.rows);
  return rep;
}

void write_asi_csv(const AsiReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "k,beta_hat,samples\n" << std::setprecision(17);
  for (const auto& r : report.rows) out << r.k << ',' << r.beta_hat << ',' << r.samples << '\n';
}

nlohmann::json asi_summary_json(const AsiReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"k", r.k},
                    {"beta_hat", r.beta_hat},
                    {"samples", r.samples},
                    {"noise_floor", r.noise_floor},
                    {"noise_limited", r.noise_limited}});
  }
  return {{"functional", report.functional},
          {"prefix_length", report.prefix_length},
          {"tail", report.tail},
          {"fit",
           {{"C", report.fit.C},
            {"q", report.fit.q},
            {"residual", report.fit.residual},
            {"points", report.fit.points},
            {"degenerate", report.fit.degenerate}}},
          {"rows", rows}};
}

// ---------------------------------------------------------------------------

CompatibilityWitness CompatibilityWitness::linear(double slope) {
  CompatibilityWitness w;
  w.slope_ = slope;
  return w;
}

CompatibilityWitness CompatibilityWitness::custom(std::vector<double> gamma) {
  CompatibilityWitness w;
  w.table_ = std::move(gamma);
  return w;
}

int CompatibilityWitness::p(int n) {
  int r = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

double CompatibilityWitness::gamma(int n) const {
  if (table_.empty()) return slope_ * n;
  if (n < 0 || static_cast<std::size_t>(n) >= table_.size()) {
    throw Error(ErrorKind::OutOfRange, "gamma table too short");
  }
  return table_[static_cast<std::size_t>(n)];
}

double CompatibilityWitness::c(int n, const std::function<double(int)>& beta) const {
  const int pn = p(n);
  return std::max(gamma(pn), gamma(n) * beta(pn));
}

std::vector<double> CompatibilityWitness::ratios(int n_max,
                                                 const std::function<double(int)>& beta) const {
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n) out.push_back(c(n, beta) / n);
  return out;
}

bool CompatibilityWitness::converging(int n_max, const std::function<double(int)>& beta,
                                      double tolerance) const {
  if (n_max < 4) return false;
  const double last = c(n_max, beta) / n_max;
  const int early = n_max / 4;
  return last < c(early, beta) / early && last < tolerance;
}

// ---------------------------------------------------------------------------
// CSV

void write_dense_table_csv(const DenseTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "offset,word,log_value\n" << std::setprecision(17);
  for (int l = 0; l <= table.depth(); ++l) {
    for_each_word(table.alphabet(), table.offset(), l, [&](const Word& w) {
      out << table.offset() << ',' << w.label() << ',' << table.log_value(w) << '\n';
    });
  }
}

DenseTable read_dense_table_csv(const std::filesystem::path& path, bool measure) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "offset,word,log_value") throw Error(ErrorKind::Config, "unexpected dense table header");
  int offset = -1;
  std::map<Word, double> values;
  std::vector<int> degrees;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string off, label, val;
    std::getline(ss, off, ',');
    std::getline(ss, label, ',');
    std::getline(ss, val, ',');
    const int o = std::stoi(off);
    if (offset < 0) offset = o;
    if (o != offset) throw Error(ErrorKind::Config, "dense table mixes offsets");
    Word w = Word::parse(o, label);
    for (int i = 0; i < w.length(); ++i) {
      if (static_cast<int>(degrees.size()) <= i) degrees.push_back(1);
      degrees[static_cast<std::size_t>(i)] =
          std::max(degrees[static_cast<std::size_t>(i)], w.branches[static_cast<std::size_t>(i)] + 1);
    }
    values[w] = std::stod(val);
  }
  if (offset < 0) throw Error(ErrorKind::Config, "empty dense table");
  std::vector<int> full(static_cast<std::size_t>(offset), 1);
  full.insert(full.end(), degrees.begin(), degrees.end());
  const Alphabet alpha(full);
  const int depth = static_cast<int>(degrees.size());
  std::vector<std::vector<double>> levels(static_cast<std::size_t>(depth) + 1);
  for (int l = 0; l <= depth; ++l) {
    for_each_word(alpha, offset, l, [&](const Word& w) {
      auto it = values.find(w);
      if (it == values.end()) throw Error(ErrorKind::Config, "dense table misses word '" + w.label() + "'");
      levels[static_cast<std::size_t>(l)].push_back(it->second);
    });
  }
  return DenseTable(alpha, offset, std::move(levels), measure);
}

}  // namespace nacifs
