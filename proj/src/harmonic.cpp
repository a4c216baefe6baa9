#include "nacifs/harmonic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "nacifs/errors.hpp"

namespace nacifs {
namespace {

/// Runs fn(begin, end) over contiguous chunks of [0, n) on `threads` workers.
template <class Fn>
void parallel_chunks(std::int64_t n, int threads, Fn&& fn) {
  const int workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, n)));
  if (workers == 1) {
    fn(std::int64_t{0}, n, 0);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) {
    const std::int64_t begin = t * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end, t] { fn(begin, end, t); });
  }
  for (auto& th : pool) th.join();
}

using Scratch = std::vector<std::pair<int, std::size_t>>;

}  // namespace

// ---------------------------------------------------------------------------
// MeasureEstimate

std::int64_t MeasureEstimate::count(const Word& word) const {
  if (word.offset != offset || word.length() > assign_depth) {
    throw Error(ErrorKind::OutOfRange, "word '" + word.label() + "' outside estimate range");
  }
  const std::size_t block = alphabet.count(word.end(), assign_depth - word.length());
  const std::size_t start = word_index(alphabet, word) * block;
  std::int64_t c = 0;
  for (std::size_t i = start; i < start + block; ++i) c += counts[i];
  return c;
}

double MeasureEstimate::value(const Word& word) const {
  return static_cast<double>(count(word)) / static_cast<double>(total);
}

double MeasureEstimate::std_error(const Word& word) const {
  const double p = value(word);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

double MeasureEstimate::log_variance(const Word& word) const {
  const double p = value(word);
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - p) / (static_cast<double>(total) * p);
}

std::vector<std::int64_t> MeasureEstimate::level_counts(int level) const {
  if (level < 0 || level > assign_depth) {
    throw Error(ErrorKind::OutOfRange, "level beyond assignment depth");
  }
  const std::size_t block = alphabet.count(offset + level, assign_depth - level);
  std::vector<std::int64_t> out(counts.size() / block, 0);
  for (std::size_t i = 0; i < counts.size(); ++i) out[i / block] += counts[i];
  return out;
}

MeasureEstimate MeasureEstimate::coarsen(int level) const {
  MeasureEstimate out = *this;
  out.assign_depth = level;
  out.counts = level_counts(level);
  const auto block = static_cast<std::uint32_t>(alphabet.count(offset + level, assign_depth - level));
  for (auto& e : out.endpoints) e /= block;
  return out;
}

void write_measure_csv(const MeasureEstimate& est, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "offset,word,count,value,stderr\n" << std::setprecision(17);
  std::size_t i = 0;
  for_each_word(est.alphabet, est.offset, est.assign_depth, [&](const Word& w) {
    const std::int64_t c = est.counts[i++];
    const double p = static_cast<double>(c) / static_cast<double>(est.total);
    out << est.offset << ',' << w.label() << ',' << c << ',' << p << ','
        << std::sqrt(p * (1.0 - p) / static_cast<double>(est.total)) << '\n';
  });
}

MeasureEstimate read_measure_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "offset,word,count,value,stderr") {
    throw Error(ErrorKind::Config, "unexpected measure table header");
  }
  MeasureEstimate est;
  est.offset = -1;
  std::vector<std::pair<Word, std::int64_t>> rows;
  std::vector<int> degrees;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string off, label, count;
    std::getline(ss, off, ',');
    std::getline(ss, label, ',');
    std::getline(ss, count, ',');
    const int o = std::stoi(off);
    if (est.offset < 0) est.offset = o;
    if (o != est.offset) throw Error(ErrorKind::Config, "measure table mixes offsets");
    Word w = Word::parse(o, label);
    if (rows.empty()) est.assign_depth = w.length();
    if (w.length() != est.assign_depth) throw Error(ErrorKind::Config, "measure table mixes depths");
    for (int i = 0; i < w.length(); ++i) {
      if (static_cast<int>(degrees.size()) <= i) degrees.push_back(1);
      degrees[static_cast<std::size_t>(i)] =
          std::max(degrees[static_cast<std::size_t>(i)], w.branches[static_cast<std::size_t>(i)] + 1);
    }
    rows.emplace_back(std::move(w), std::stoll(count));
  }
  if (rows.empty()) throw Error(ErrorKind::Config, "empty measure table");
  std::vector<int> full(static_cast<std::size_t>(est.offset), 1);
  full.insert(full.end(), degrees.begin(), degrees.end());
  est.alphabet = Alphabet(full);
  est.counts.assign(est.alphabet.count(est.offset, est.assign_depth), 0);
  if (rows.size() != est.counts.size()) throw Error(ErrorKind::Config, "measure table is incomplete");
  for (const auto& [w, c] : rows) {
    est.counts[word_index(est.alphabet, w)] = c;
    est.total += c;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Configuration

void WalkerConfig::validate(const DomainSpec& domain) const {
  if (!(r_launch > domain.v_factor())) throw Error(ErrorKind::Config, "r_launch must exceed 1 + eta");
  if (!(r_out > r_launch)) throw Error(ErrorKind::Config, "r_out must exceed r_launch");
  if (!(eps_abs > 0.0)) throw Error(ErrorKind::Config, "eps_abs must be positive");
  if (walkers < 1) throw Error(ErrorKind::Config, "need at least one walker");
  if (max_steps < 1) throw Error(ErrorKind::Config, "max_steps must be positive");
}

nlohmann::json to_json(const WalkerConfig& cfg) {
  return {{"r_launch", cfg.r_launch}, {"r_out", cfg.r_out},     {"eps_abs", cfg.eps_abs},
          {"max_steps", cfg.max_steps}, {"walkers", cfg.walkers}, {"seed", cfg.seed}};
}

// ---------------------------------------------------------------------------
// Disk approximation

DiskApproximation::DiskApproximation(const SystemSpec& system, int offset, int depth)
    : offset_(offset), depth_(depth) {
  if (offset < 0 || depth < 0 || offset + depth > system.horizon()) {
    throw Error(ErrorKind::InsufficientDepth, "disk approximation needs generations up to " +
                                                  std::to_string(offset + depth));
  }
  alphabet_ = system.alphabet(offset + depth);
  for (int l = 0; l <= depth; ++l) {
    std::vector<Complex> c;
    std::vector<double> r;
    c.reserve(alphabet_.count(offset, l));
    r.reserve(alphabet_.count(offset, l));
    for_each_word(alphabet_, offset, l, [&](const Word& w) {
      const ComposedMapInfo info = compose_word(system, w);
      c.push_back(info.center);
      r.push_back(info.radius_bound);
    });
    centers_.push_back(std::move(c));
    radii_.push_back(std::move(r));
  }
}

namespace {

DiskApproximation::Nearest nearest_leaf(const DiskApproximation& approx, Complex z,
                                        Scratch& stack) {
  DiskApproximation::Nearest best{0, std::numeric_limits<double>::infinity(), 0.0};
  const int depth = approx.depth();
  stack.clear();
  stack.emplace_back(0, 0);
  std::array<std::pair<double, std::size_t>, 64> kids{};
  while (!stack.empty()) {
    const auto [level, idx] = stack.back();
    stack.pop_back();
    const double lb = std::abs(z - approx.center(level, idx)) - approx.radius(level, idx);
    if (lb > best.distance) continue;
    if (level == depth) {
      if (lb < best.distance || idx < best.leaf) {
        best = {idx, lb, approx.radius(level, idx)};
      }
      continue;
    }
    const auto d = static_cast<std::size_t>(approx.alphabet().degree(approx.offset() + level));
    std::size_t nk = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t child = idx * d + a;
      const double clb = std::abs(z - approx.center(level + 1, child)) - approx.radius(level + 1, child);
      if (clb <= best.distance && nk < kids.size()) kids[nk++] = {clb, child};
    }
    // Push farthest first so the closest child is explored next.
    std::sort(kids.begin(), kids.begin() + static_cast<std::ptrdiff_t>(nk),
              [](const auto& u, const auto& v) { return u.first > v.first; });
    for (std::size_t k = 0; k < nk; ++k) stack.emplace_back(level + 1, kids[k].second);
  }
  return best;
}

}  // namespace

DiskApproximation::Nearest DiskApproximation::nearest(Complex z) const {
  Scratch stack;
  return nearest_leaf(*this, z, stack);
}

double DiskApproximation::min_leaf_gap() const {
  const auto& c = centers_.back();
  const auto& r = radii_.back();
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      gap = std::min(gap, std::abs(c[i] - c[j]) - r[i] - r[j]);
    }
  }
  return gap;
}

double DiskApproximation::min_nesting_margin() const {
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 0; l < depth_; ++l) {
    const auto d = static_cast<std::size_t>(alphabet_.degree(offset_ + l));
    for (std::size_t i = 0; i < size(l); ++i) {
      for (std::size_t a = 0; a < d; ++a) {
        const std::size_t ch = i * d + a;
        margin = std::min(margin, radius(l, i) - (std::abs(center(l + 1, ch) - center(l, i)) +
                                                  radius(l + 1, ch)));
      }
    }
  }
  return margin;
}

// ---------------------------------------------------------------------------
// Walkers

Complex reentry_point(Complex z, double radius, RandomStream& rng) {
  const double rho = radius / std::abs(z);
  const double u = rng.uniform();
  const double phi =
      2.0 * std::atan((1.0 - rho) / (1.0 + rho) * std::tan(std::numbers::pi * (u - 0.5)));
  return std::polar(radius, std::arg(z) + phi);
}

namespace {

struct WalkOutcome {
  std::size_t leaf = 0;
  std::int64_t steps = 0;
  bool stalled = false;
};

WalkOutcome walk_from_infinity(const DiskApproximation& approx, const WalkerConfig& cfg,
                               RandomStream& rng, Scratch& scratch) {
  WalkOutcome out;
  Complex z = std::polar(cfg.r_launch, rng.angle());
  for (std::int64_t step = 0; step < cfg.max_steps; ++step) {
    out.steps = step + 1;
    if (std::abs(z) > cfg.r_out) {
      z = reentry_point(z, cfg.r_launch, rng);
      continue;
    }
    const auto near = nearest_leaf(approx, z, scratch);
    if (near.distance < cfg.eps_abs * near.radius) {
      out.leaf = near.leaf;
      return out;
    }
    z += std::polar(near.distance, rng.angle());
  }
  out.stalled = true;
  return out;
}

}  // namespace

MeasureEstimate estimate_direct(const SystemSpec& system, int offset, int approx_depth,
                                int assign_depth, const WalkerConfig& cfg) {
  cfg.validate(system.domain());
  if (assign_depth < 0 || assign_depth > approx_depth) {
    throw Error(ErrorKind::DomainError, "assignment depth must lie in [0, approximation depth]");
  }
  if (offset < 0 || offset + approx_depth > system.horizon()) {
    throw Error(ErrorKind::InsufficientDepth,
                "system materializes " + std::to_string(system.horizon()) +
                    " generations, estimate needs " + std::to_string(offset + approx_depth));
  }
  const DiskApproximation approx(system, offset, approx_depth);

  MeasureEstimate est;
  est.offset = offset;
  est.assign_depth = assign_depth;
  est.alphabet = approx.alphabet();
  est.counts.assign(est.alphabet.count(offset, assign_depth), 0);
  if (cfg.record_endpoints) est.endpoints.assign(static_cast<std::size_t>(cfg.walkers), 0);
  const std::size_t block = est.alphabet.count(offset + assign_depth, approx_depth - assign_depth);
  const std::uint64_t key = derive_seed(cfg.seed, "walkers");

  const int workers = std::max(1, cfg.threads);
  std::vector<std::vector<std::int64_t>> tallies(static_cast<std::size_t>(workers),
                                                 std::vector<std::int64_t>(est.counts.size(), 0));
  std::vector<std::int64_t> steps(static_cast<std::size_t>(workers), 0);
  std::atomic<bool> stalled{false};

  parallel_chunks(cfg.walkers, workers, [&](std::int64_t begin, std::int64_t end, int t) {
    Scratch scratch;
    auto& tally = tallies[static_cast<std::size_t>(t)];
    for (std::int64_t w = begin; w < end; ++w) {
      RandomStream rng(key, static_cast<std::uint64_t>(w));
      const WalkOutcome o = walk_from_infinity(approx, cfg, rng, scratch);
      steps[static_cast<std::size_t>(t)] += o.steps;
      if (o.stalled) {
        stalled = true;
        return;
      }
      const std::size_t cell = o.leaf / block;
      ++tally[cell];
      if (cfg.record_endpoints) est.endpoints[static_cast<std::size_t>(w)] = static_cast<std::uint32_t>(cell);
    }
  });
  if (stalled) {
    throw Error(ErrorKind::WalkerStalled,
                "a walker exceeded " + std::to_string(cfg.max_steps) + " steps");
  }
  for (const auto& tally : tallies) {
    for (std::size_t i = 0; i < tally.size(); ++i) est.counts[i] += tally[i];
  }
  for (std::int64_t s : steps) est.total_steps += s;
  for (std::int64_t c : est.counts) est.total += c;
  return est;
}

// ---------------------------------------------------------------------------
// Factorization

FactorizedEstimator::FactorizedEstimator(SystemSpec system, WalkerConfig cfg, FactorizedConfig fc)
    : system_(std::move(system)), cfg_(cfg), fc_(std::move(fc)) {
  if (fc_.buffer < 1) throw Error(ErrorKind::DomainError, "buffer must be positive");
}

const MeasureEstimate& FactorizedEstimator::factor_table(int offset) {
  auto it = tables_.find(offset);
  if (it != tables_.end()) return it->second;
  WalkerConfig cfg = cfg_;
  if (offset != 0) cfg.seed = derive_seed(cfg_.seed, "factor", static_cast<std::uint64_t>(offset));
  const int assign = fc_.buffer + 1;
  MeasureEstimate est = estimate_direct(system_, offset, assign + fc_.approx_extra, assign, cfg);
  return tables_.emplace(offset, std::move(est)).first->second;
}

FactorizedValue FactorizedEstimator::estimate(const Word& word) {
  const int n = word.length();
  const int b = fc_.buffer;
  if (n < b) throw Error(ErrorKind::DomainError, "word shorter than the buffer");
  system_.check_word(word);

  auto degenerate = [&](std::int64_t c, const Word& w) {
    if (c < fc_.min_denominator) {
      throw Error(ErrorKind::DegenerateFactor,
                  "factor '" + w.label() + "' has only " + std::to_string(c) + " hits");
    }
  };

  // Leading factor omega_p(a_1..a_{min(n, b+1)}) from the offset-p table; the
  // next ratio shares that table and telescopes into it.
  const MeasureEstimate& lead = factor_table(word.offset);
  const Word head = word.prefix(std::min(n, b + 1));
  const std::int64_t c_head = lead.count(head);
  if (c_head == 0) degenerate(0, head);
  double log_value = std::log(static_cast<double>(c_head) / static_cast<double>(lead.total));
  double var = 1.0 / static_cast<double>(c_head) - 1.0 / static_cast<double>(lead.total);
  if (n > b) degenerate(lead.count(word.prefix(b)), word.prefix(b));

  for (int j = b + 2; j <= n; ++j) {
    // Conditional omega_k(a_{j-b}..a_j) / omega_k(a_{j-b}..a_{j-1}), k = p + j - 1 - b.
    const Word window = Word(word.offset + j - 1 - b,
                             std::vector<int>(word.branches.begin() + (j - 1 - b),
                                              word.branches.begin() + j));
    const MeasureEstimate& table = factor_table(window.offset);
    const std::int64_t num = table.count(window);
    const std::int64_t den = table.count(window.prefix(b));
    degenerate(den, window.prefix(b));
    if (num == 0) degenerate(0, window);
    log_value += std::log(static_cast<double>(num) / static_cast<double>(den));
    var += 1.0 / static_cast<double>(num) - 1.0 / static_cast<double>(den);
  }

  FactorizedValue out;
  out.value = std::exp(log_value);
  out.log_stderr = std::sqrt(std::max(var, 0.0));
  if (fc_.bias_fit && !fc_.bias_fit->degenerate) {
    out.bias = n * fc_.bias_fit->C * std::pow(fc_.bias_fit->q, b);
  }
  out.error_model = out.log_stderr + out.bias;
  return out;
}

FactorizedValue estimate_factorized(const SystemSpec& system, const Word& word, int buffer,
                                    const WalkerConfig& per_factor_cfg,
                                    std::optional<AsiFit> bias_fit) {
  FactorizedConfig fc;
  fc.buffer = buffer;
  fc.bias_fit = std::move(bias_fit);
  FactorizedEstimator est(system, per_factor_cfg, fc);
  return est.estimate(word);
}

// ---------------------------------------------------------------------------
// Sibling invariance of the estimated measure

AsiReport asi_report_from_estimate(const MeasureEstimate& est, const std::vector<int>& k_range,
                                   const HarmonicAsiOptions& opts) {
  AsiReport rep;
  rep.functional = "harmonic";
  rep.prefix_length = opts.prefix_length;
  rep.tail = opts.tail;
  const int p = est.offset;
  const int len = opts.prefix_length;
  std::vector<Word> prefixes;
  for_each_word(est.alphabet, p, len, [&](const Word& x) { prefixes.push_back(x); });

  for (int k : k_range) {
    if (len + k + opts.tail > est.assign_depth) {
      throw Error(ErrorKind::InsufficientDepth, "estimate too shallow for k=" + std::to_string(k));
    }
    AsiRow row;
    row.k = k;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      for (std::size_t j = i + 1; j < prefixes.size(); ++j) {
        for_each_word(est.alphabet, p + len, k, [&](const Word& y) {
          const Word xy = concat(prefixes[i], y);
          const Word xpy = concat(prefixes[j], y);
          const auto b1 = static_cast<double>(est.count(xy));
          const auto b2 = static_cast<double>(est.count(xpy));
          for (int zl = 1; zl <= opts.tail; ++zl) {
            for_each_word(est.alphabet, p + len + k, zl, [&](const Word& z) {
              const auto a1 = static_cast<double>(est.count(concat(xy, z)));
              const auto a2 = static_cast<double>(est.count(concat(xpy, z)));
              ++row.samples;
              if (a1 == 0.0 || a2 == 0.0) {
                row.noise_floor = std::numeric_limits<double>::infinity();
                return;
              }
              const double d = std::abs(std::log(a1 / b1) - std::log(a2 / b2));
              const double sigma = std::sqrt((1.0 / a1 - 1.0 / b1) + (1.0 / a2 - 1.0 / b2));
              row.beta_hat = std::max(row.beta_hat, d);
              row.noise_floor = std::max(row.noise_floor, opts.floor_sigmas * sigma);
            });
          }
        });
      }
    }
    row.noise_limited = row.beta_hat <= row.noise_floor;
    rep.rows.push_back(row);
  }
  rep.fit = fit_geometric_decay(rep.rows);
  return rep;
}

AsiReport asi_report_harmonic(const SystemSpec& system, const std::vector<int>& k_range,
                              const WalkerConfig& cfg, const HarmonicAsiOptions& opts) {
  if (k_range.empty()) throw Error(ErrorKind::DomainError, "empty k range");
  const int k_max = *std::max_element(k_range.begin(), k_range.end());
  const int assign = opts.prefix_length + k_max + opts.tail;
  const MeasureEstimate est = estimate_direct(system, 0, assign + opts.approx_extra, assign, cfg);
  return asi_report_from_estimate(est, k_range, opts);
}

double conditional_entropy_stderr(const MeasureEstimate& est, const Word& x, int n) {
  const auto cx = static_cast<double>(est.count(x));
  if (cx == 0.0) return std::numeric_limits<double>::infinity();
  double h = 0.0;
  double h2 = 0.0;
  for_each_word(est.alphabet, x.end(), n, [&](const Word& y) {
    const double p = static_cast<double>(est.count(concat(x, y))) / cx;
    if (p > 0.0) {
      h -= p * std::log(p);
      h2 += p * std::log(p) * std::log(p);
    }
  });
  return std::sqrt(std::max(h2 - h * h, 0.0) / cx);
}

// ---------------------------------------------------------------------------
// Localization checks

PointEstimate local_harmonic_measure(const SystemSpec& system, const DiskApproximation& approx,
                                     Complex x, const WalkerConfig& cfg, std::uint64_t stream) {
  cfg.validate(system.domain());
  const double gamma = system.domain().gamma;
  const double outer_tol = cfg.eps_abs * (gamma - 1.0);
  PointEstimate pe;
  pe.x = x;
  pe.distance = approx.nearest(x).distance;
  if (std::abs(x) >= gamma) return pe;

  const std::uint64_t key = derive_seed(cfg.seed, "local", stream);
  const int workers = std::max(1, cfg.threads);
  std::vector<std::int64_t> hits(static_cast<std::size_t>(workers), 0);
  std::atomic<bool> stalled{false};
  parallel_chunks(cfg.walkers, workers, [&](std::int64_t begin, std::int64_t end, int t) {
    Scratch scratch;
    for (std::int64_t w = begin; w < end; ++w) {
      RandomStream rng(key, static_cast<std::uint64_t>(w));
      Complex z = x;
      bool done = false;
      for (std::int64_t step = 0; step < cfg.max_steps && !done; ++step) {
        const auto near = nearest_leaf(approx, z, scratch);
        if (near.distance < cfg.eps_abs * near.radius) {
          ++hits[static_cast<std::size_t>(t)];
          done = true;
          break;
        }
        const double to_outer = gamma - std::abs(z);
        if (to_outer < outer_tol) {
          done = true;
          break;
        }
        z += std::polar(std::min(near.distance, to_outer), rng.angle());
      }
      if (!done) {
        stalled = true;
        return;
      }
    }
  });
  if (stalled) throw Error(ErrorKind::WalkerStalled, "local walker exceeded max_steps");
  std::int64_t h = 0;
  for (auto v : hits) h += v;
  const auto n = static_cast<double>(cfg.walkers);
  pe.omega = static_cast<double>(h) / n;
  pe.std_error = std::sqrt(pe.omega * (1.0 - pe.omega) / n);
  return pe;
}

LowerBoundReport lower_bound_checks(const SystemSpec& system, const WalkerConfig& cfg,
                                    const LowerBoundOptions& opts) {
  const DiskApproximation approx(system, 0, opts.approx_depth);
  LowerBoundReport rep;
  rep.min_circle = std::numeric_limits<double>::infinity();
  for (int j = 0; j < opts.circle_points; ++j) {
    const Complex x = std::polar(1.0, 2.0 * std::numbers::pi * j / opts.circle_points);
    const PointEstimate pe = local_harmonic_measure(system, approx, x, cfg, static_cast<std::uint64_t>(j));
    if (pe.omega < rep.min_circle) {
      rep.min_circle = pe.omega;
      rep.min_circle_stderr = pe.std_error;
    }
    rep.circle.push_back(pe);
  }

  const int depth = approx.depth();
  std::size_t outer = 0;
  for (std::size_t i = 0; i < approx.size(depth); ++i) {
    if (std::abs(approx.center(depth, i)) > std::abs(approx.center(depth, outer))) outer = i;
  }
  const Complex c = approx.center(depth, outer);
  const double r = approx.radius(depth, outer);
  const Complex dir = std::abs(c) > 0.0 ? c / std::abs(c) : Complex{1.0, 0.0};
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t j = 0; j < opts.approach.size(); ++j) {
    const Complex x = c + (r * (1.0 + opts.approach[j])) * dir;
    PointEstimate pe =
        local_harmonic_measure(system, approx, x, cfg, 1000 + static_cast<std::uint64_t>(j));
    rep.approach.push_back(pe);
    if (pe.omega > 0.0 && pe.omega < 1.0 && pe.distance > 0.0) {
      xs.push_back(std::log(pe.distance));
      ys.push_back(std::log(1.0 - pe.omega));
    }
  }
  rep.fit_points = static_cast<int>(xs.size());
  if (xs.size() >= 2) {
    Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()), 2);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      design(static_cast<Eigen::Index>(i), 0) = 1.0;
      design(static_cast<Eigen::Index>(i), 1) = xs[i];
      rhs(static_cast<Eigen::Index>(i)) = ys[i];
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    rep.intercept = coef(0);
    rep.slope = coef(1);
  }
  return rep;
}

}  // namespace nacifs
